"""The two-dimensional eigenspace of the rectangle at ``a/b = sqrt(3/8)``.

With ``a = pi*eps`` and ``b = pi`` the modes ``(1,3)`` and ``(2,1)`` share the
eigenvalue ``9 + 1/eps^2 = 4/eps^2 + 1`` when ``eps^2 = 3/8``.  Every element
of that eigenspace is, up to scale,

    phi(x, y) = alpha cos(x/eps) cos(3y) + beta sin(2x/eps) cos(y)
              = cos(y) cos(x/eps) psi(x, y),
    psi(x, y) = alpha (1 - 4 sin^2 y) + 2 beta sin(x/eps).

Inside the rectangle ``cos(y) cos(x/eps) > 0``, so the nodal set of ``phi``
is the zero set of ``psi``.  All derivatives below are hand-coded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize
from skimage import measure

from .analytic import CRITICAL_EPS

__all__ = [
    "FamilyCoeffs",
    "NodalPoint",
    "NodalSet",
    "SignGridLabeling",
    "CriticalScan",
    "phi",
    "psi",
    "psi_gradient",
    "phi_laplacian",
    "eigenvalue_of_family",
    "nodal_contours",
    "count_nodal_domains",
    "sign_labels",
    "interior_critical_scan",
    "boundary_zeros",
]

MIN_RESOLUTION = 64
NEAR_ZERO_BAND = 1e-9
NEWTON_TOL = 1e-12


@dataclass(frozen=True)
class FamilyCoeffs:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("alpha and beta cannot both vanish")

    @property
    def scale(self) -> float:
        return abs(self.alpha) + abs(self.beta)


@dataclass(frozen=True)
class NodalPoint:
    x: float
    y: float
    valence: int

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "valence": self.valence}


@dataclass
class NodalSet:
    """Closure of the zero set of ``phi`` inside the rectangle.

    ``boundary_hits`` carry ``rho`` (arcs arriving) as valence; critical
    interior points carry ``nu >= 3`` and critical boundary points ``rho >= 2``.
    """

    polylines: list[np.ndarray]
    boundary_hits: list[NodalPoint]
    interior_critical_points: list[NodalPoint]
    boundary_critical_points: list[NodalPoint]
    eps: float
    coeffs: FamilyCoeffs
    resolution: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.coeffs.alpha,
            "beta": self.coeffs.beta,
            "eps": self.eps,
            "resolution": self.resolution,
            "polylines": [p.tolist() for p in self.polylines],
            "boundary_hits": [p.to_dict() for p in self.boundary_hits],
            "interior_critical_points": [p.to_dict() for p in self.interior_critical_points],
            "boundary_critical_points": [p.to_dict() for p in self.boundary_critical_points],
        }


@dataclass
class SignGridLabeling:
    labels: np.ndarray
    domain_count: int
    stable: bool
    resolution: int
    refined_count: int | None = None


@dataclass
class CriticalScan:
    """Outcome of the search for singular points of the zero set of ``psi``.

    ``gradient_bound`` is a certified lower bound of ``|grad psi|`` on the part
    of the zero set at distance >= ``margin`` from the boundary: the sampled
    minimum minus the Hessian bound times half the largest sample gap.
    """

    interior: list[tuple[float, float]]
    boundary: list[NodalPoint]
    gradient_bound: float
    margin: float
    samples: int = field(default=0)


def _half_sides(eps: float) -> tuple[float, float]:
    return np.pi * eps / 2, np.pi / 2


def _check_domain(eps, x, y):
    if eps <= 0:
        raise ValueError("eps must be positive")
    hx, hy = _half_sides(eps)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slack = 1e-12
    if np.any(np.abs(x) > hx * (1 + slack)) or np.any(np.abs(y) > hy * (1 + slack)):
        raise ValueError("point outside the closed rectangle")
    return x, y


def phi(coeffs: FamilyCoeffs, eps: float, x, y):
    x, y = _check_domain(eps, x, y)
    return coeffs.alpha * np.cos(x / eps) * np.cos(3 * y) + coeffs.beta * np.sin(2 * x / eps) * np.cos(y)


def psi(coeffs: FamilyCoeffs, eps: float, x, y):
    x, y = _check_domain(eps, x, y)
    return coeffs.alpha * (1 - 4 * np.sin(y) ** 2) + 2 * coeffs.beta * np.sin(x / eps)


def psi_gradient(coeffs: FamilyCoeffs, eps: float, x, y):
    x, y = _check_domain(eps, x, y)
    gx = 2 * coeffs.beta * np.cos(x / eps) / eps
    gy = -4 * coeffs.alpha * np.sin(2 * y)
    return gx, gy


def _psi_hessian_bound(coeffs: FamilyCoeffs, eps: float) -> float:
    # psi_xy = 0, |psi_xx| <= 2|beta|/eps^2, |psi_yy| <= 8|alpha|
    return max(2 * abs(coeffs.beta) / eps**2, 8 * abs(coeffs.alpha))


def phi_laplacian(coeffs: FamilyCoeffs, eps: float, x, y):
    """``-Laplacian(phi)`` in closed form."""
    x, y = _check_domain(eps, x, y)
    return (coeffs.alpha * (1 / eps**2 + 9) * np.cos(x / eps) * np.cos(3 * y)
            + coeffs.beta * (4 / eps**2 + 1) * np.sin(2 * x / eps) * np.cos(y))


def eigenvalue_of_family(eps: float = CRITICAL_EPS) -> float:
    """``9 + 1/eps^2``; equals ``4/eps^2 + 1`` only at the critical ratio."""
    return 9 + 1 / eps**2


def _edge_functions(coeffs: FamilyCoeffs, eps: float):
    """psi and its tangential derivative restricted to each edge."""
    al, be = coeffs.alpha, coeffs.beta
    hx, hy = _half_sides(eps)
    edges = {}
    for name, sgn in (("left", -1.0), ("right", 1.0)):
        edges[name] = (
            lambda t, s=sgn: al * (1 - 4 * np.sin(t) ** 2) + 2 * be * s,
            lambda t: -4 * al * np.sin(2 * t),
            (-hy, hy),
            lambda t, s=sgn: (s * hx, t),
        )
    for name, sgn in (("bottom", -1.0), ("top", 1.0)):
        edges[name] = (
            lambda t: al * (1 - 4 * np.sin(hy) ** 2) + 2 * be * np.sin(t / eps),
            lambda t: 2 * be * np.cos(t / eps) / eps,
            (-hx, hx),
            lambda t, s=sgn: (t, s * hy),
        )
    return edges


def _sign_change_roots(f, lo, hi, samples):
    t = np.linspace(lo, hi, samples)
    v = f(t)
    roots = [float(ti) for ti, vi in zip(t, v) if vi == 0.0]
    for i in range(samples - 1):
        if v[i] * v[i + 1] < 0:
            roots.append(optimize.brentq(f, t[i], t[i + 1], xtol=1e-15, rtol=1e-15))
    return sorted(roots)


def boundary_zeros(coeffs: FamilyCoeffs, eps: float = CRITICAL_EPS, samples: int = 4097):
    """Points of the closed boundary where ``psi`` vanishes, with arc counts.

    A simple zero along an edge is the endpoint of one arc (``rho = 1``).  A
    zero where the tangential derivative also vanishes is a double zero: two
    arcs arrive there (``rho = 2``), which is a boundary critical point.
    Corners are reported once.
    """
    tol = 1e-10 * coeffs.scale
    pts: list[NodalPoint] = []
    for name, (f, df, (lo, hi), to_xy) in _edge_functions(coeffs, eps).items():
        found: dict[float, int] = {}
        for r in _sign_change_roots(f, lo, hi, samples):
            found[r] = 2 if abs(df(r)) <= 1e-7 * coeffs.scale else 1
        # zeros without sign change sit at critical points of the edge function
        for c in _sign_change_roots(df, lo, hi, samples):
            if abs(f(c)) <= tol and not any(abs(c - r) < 1e-9 for r in found):
                found[c] = 2
        for r, rho in found.items():
            x, y = to_xy(r)
            pts.append(NodalPoint(float(x), float(y), rho))
    unique: list[NodalPoint] = []
    for p in pts:
        if not any(abs(p.x - q.x) < 1e-9 and abs(p.y - q.y) < 1e-9 for q in unique):
            unique.append(p)
    return sorted(unique, key=lambda p: (p.x, p.y))


def _axes(eps: float, resolution: int):
    hx, hy = _half_sides(eps)
    return np.linspace(-hx, hx, resolution + 1), np.linspace(-hy, hy, resolution + 1)


def _check_resolution(resolution: int):
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")


def nodal_contours(coeffs: FamilyCoeffs, eps: float = CRITICAL_EPS, resolution: int = 256) -> NodalSet:
    """Zero set of ``phi`` as polylines in rectangle coordinates.

    ``psi`` is sampled on ``resolution`` cells per axis and contoured by
    marching squares.  The factors ``cos(x/eps)`` and ``cos(y)`` only vanish on
    the boundary and contribute nothing inside.  Interior crossings come from
    :func:`interior_critical_scan`, boundary arc counts from
    :func:`boundary_zeros`.
    """
    _check_resolution(resolution)
    xs, ys = _axes(eps, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    field_ = psi(coeffs, eps, X, Y)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    polylines = []
    for c in measure.find_contours(field_, 0.0):
        pts = np.column_stack([xs[0] + c[:, 0] * hx, ys[0] + c[:, 1] * hy])
        if len(pts) >= 2:
            polylines.append(pts)
    hits = boundary_zeros(coeffs, eps)
    scan = interior_critical_scan(coeffs, eps)
    return NodalSet(
        polylines=polylines,
        boundary_hits=hits,
        interior_critical_points=[NodalPoint(x, y, 4) for x, y in scan.interior],
        boundary_critical_points=[p for p in hits if p.valence >= 2],
        eps=eps,
        coeffs=coeffs,
        resolution=resolution,
    )


def sign_labels(values: np.ndarray, band: float = NEAR_ZERO_BAND) -> tuple[np.ndarray, int]:
    """4-connected components of ``{v > d}`` and ``{v < -d}``, ``d = band*max|v|``.

    Returns labels (0 on the near-zero band) and the number of components.
    """
    d = band * float(np.max(np.abs(values))) if values.size else 0.0
    four = ndimage.generate_binary_structure(2, 1)
    pos, npos = ndimage.label(values > d, structure=four)
    neg, nneg = ndimage.label(values < -d, structure=four)
    labels = pos + np.where(neg > 0, neg + npos, 0)
    return labels, npos + nneg


def _interior_phi(coeffs, eps, resolution):
    xs, ys = _axes(eps, resolution)
    X, Y = np.meshgrid(xs[1:-1], ys[1:-1], indexing="ij")
    return phi(coeffs, eps, X, Y)


def count_nodal_domains(coeffs: FamilyCoeffs, eps: float = CRITICAL_EPS, resolution: int = 256) -> SignGridLabeling:
    """Count nodal domains by flood fill on the interior nodes.

    ``resolution`` is the number of cells per axis; it is rounded up to an
    even number so that the symmetry lines ``x = 0`` and ``y = 0`` carry
    nodes.  The count is repeated at twice the resolution and ``stable``
    records whether both agree.
    """
    _check_resolution(resolution)
    resolution += resolution % 2
    labels, count = sign_labels(_interior_phi(coeffs, eps, resolution))
    _, fine = sign_labels(_interior_phi(coeffs, eps, 2 * resolution))
    return SignGridLabeling(labels, count, count == fine, resolution, fine)


def _newton_critical(coeffs, eps, x, y, iters=50):
    hx, hy = _half_sides(eps)
    for _ in range(iters):
        gx, gy = psi_gradient(coeffs, eps, x, y)
        hxx = -2 * coeffs.beta * np.sin(x / eps) / eps**2
        hyy = -8 * coeffs.alpha * np.cos(2 * y)
        if hxx == 0 and gx != 0 or hyy == 0 and gy != 0:
            return None
        dx = gx / hxx if hxx != 0 else 0.0
        dy = gy / hyy if hyy != 0 else 0.0
        x, y = x - dx, y - dy
        if abs(x) >= hx or abs(y) >= hy:
            return None
        if abs(dx) + abs(dy) < NEWTON_TOL:
            return x, y
    return None


def _project_to_zero(coeffs, eps, pts, iters=30):
    out = pts.copy()
    hx, hy = _half_sides(eps)
    for _ in range(iters):
        x = np.clip(out[:, 0], -hx, hx)
        y = np.clip(out[:, 1], -hy, hy)
        f = psi(coeffs, eps, x, y)
        gx, gy = psi_gradient(coeffs, eps, x, y)
        g2 = gx * gx + gy * gy
        step = np.where(g2 > 0, f / np.where(g2 > 0, g2, 1.0), 0.0)
        out = np.column_stack([x - step * gx, y - step * gy])
        if np.max(np.abs(step) * np.sqrt(g2)) < NEWTON_TOL:
            break
    return out


def interior_critical_scan(coeffs: FamilyCoeffs, eps: float = CRITICAL_EPS,
                           resolution: int = 256, margin: float | None = None) -> CriticalScan:
    """Interior points with ``psi = 0`` and ``grad psi = 0``.

    Candidates are local minima of ``|grad psi|`` on a coarse grid, refined by
    Newton on ``grad psi = 0`` and kept when ``|psi| <= 1e-12 * scale``.  The
    returned ``gradient_bound`` certifies that no singular point exists on the
    zero set away from the boundary strip of width ``margin`` (default 2% of
    the short side).
    """
    hx, hy = _half_sides(eps)
    if margin is None:
        margin = 0.02 * 2 * min(hx, hy)
    xs = np.linspace(-hx, hx, resolution + 1)[1:-1]
    ys = np.linspace(-hy, hy, resolution + 1)[1:-1]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    gx, gy = psi_gradient(coeffs, eps, X, Y)
    g = np.hypot(gx, gy)
    minima = (g == ndimage.minimum_filter(g, size=3, mode="nearest"))
    interior: list[tuple[float, float]] = []
    for i, j in zip(*np.nonzero(minima)):
        r = _newton_critical(coeffs, eps, X[i, j], Y[i, j])
        if r is None:
            continue
        if abs(psi(coeffs, eps, *r)) <= NEWTON_TOL * coeffs.scale:
            if not any(np.hypot(r[0] - p[0], r[1] - p[1]) < 1e-8 for p in interior):
                interior.append((float(r[0]), float(r[1])))

    # dense samples of the zero set, projected onto it
    step = min(xs[1] - xs[0], ys[1] - ys[0]) / 4
    L = _psi_hessian_bound(coeffs, eps)
    best = np.inf
    gap = 0.0
    n_samples = 0
    F = psi(coeffs, eps, *np.meshgrid(np.linspace(-hx, hx, resolution + 1),
                                      np.linspace(-hy, hy, resolution + 1), indexing="ij"))
    cell_x, cell_y = 2 * hx / resolution, 2 * hy / resolution
    for c in measure.find_contours(F, 0.0):
        pts = np.column_stack([-hx + c[:, 0] * cell_x, -hy + c[:, 1] * cell_y])
        dense = [pts[:1]]
        for p, q in zip(pts[:-1], pts[1:]):
            k = max(1, int(np.ceil(np.hypot(*(q - p)) / step)))
            tt = np.linspace(0, 1, k + 1)[1:, None]
            dense.append(p + tt * (q - p))
        pts = _project_to_zero(coeffs, eps, np.vstack(dense))
        inside = (np.abs(pts[:, 0]) <= hx - margin) & (np.abs(pts[:, 1]) <= hy - margin)
        if not inside.any():
            continue
        gxs, gys = psi_gradient(coeffs, eps, pts[:, 0], pts[:, 1])
        gn = np.hypot(gxs, gys)
        best = min(best, float(gn[inside].min()))
        both = inside[:-1] & inside[1:]
        if both.any():
            d = np.hypot(*np.diff(pts, axis=0).T)[both]
            gap = max(gap, float(d.max()))
        n_samples += int(inside.sum())
    bound = best - L * gap / 2 if np.isfinite(best) else np.inf
    boundary = [p for p in boundary_zeros(coeffs, eps) if p.valence >= 2]
    return CriticalScan(interior, boundary, float(bound), float(margin), n_samples)
