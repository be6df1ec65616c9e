"""Candidate minimal 3-partitions from mixed eigenvalue problems.

A half rectangle gets Dirichlet conditions everywhere except on part of the
symmetry line.  The second eigenfunction of that problem has two nodal
domains; mirroring it to the whole rectangle gives a symmetric partition,
which is a 3-partition when the domain touching the Neumann part merges with
its mirror image while the other domain does not.  The energy of the
candidate is the second eigenvalue; the best candidate over all split points
is an upper bound for the minimal 3-partition energy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .analytic import RectGeometry
from .concurrency import parallel_map
from .discretization import (BoundarySpec, Grid, SparseOperator, assemble_dirichlet, assemble_masked,
                             assemble_mixed, reflection_reduce)
from .eigensolver import lowest_eigenpairs
from .nodal_family import sign_labels

__all__ = [
    "CLUSTER_RTOL",
    "Partition",
    "SweepPoint",
    "SweepResult",
    "TransitionRow",
    "TransitionResult",
    "evaluate_partition",
    "classify_topology",
    "junction_points",
    "boundary_hits",
    "triple_point_angles",
    "boundary_angles",
    "mirror_consistent",
    "dn_sweep",
    "diagonal_search",
    "transition_study",
    "transition_schedule",
    "nodal_thirds_labels",
]

log = logging.getLogger(__name__)

# eigenvalues this close to lambda_2 (relative) are tested as well
CLUSTER_RTOL = 1e-3
N_EIGS = 4
ANGLE_RADIUS = 6  # in grid spacings


# --------------------------------------------------------------------------
# partitions


@dataclass
class Partition:
    labels: np.ndarray
    grid: Grid
    parts: int
    per_part_lambda: list[float]
    Lambda: float
    topology: str
    critical_points: list[tuple[float, float, int]]
    boundary_points: list[tuple[float, float, int]]

    @property
    def equipartition_spread(self) -> float:
        lam = np.asarray(self.per_part_lambda)
        return float((lam.max() - lam.min()) / lam.max())

    def to_dict(self, include_labels: bool = False) -> dict:
        d = {
            "parts": self.parts,
            "per_part_lambda": list(map(float, self.per_part_lambda)),
            "Lambda": float(self.Lambda),
            "topology": self.topology,
            "critical_points": [list(p) for p in self.critical_points],
            "boundary_points": [list(p) for p in self.boundary_points],
            "grid": self.grid.to_dict(),
        }
        if include_labels:
            d["labels"] = self.labels.tolist()
        return d


def _four():
    return ndimage.generate_binary_structure(2, 1)


def junction_points(labels: np.ndarray, grid: Grid, margin: int = 2):
    """Interior points where at least three labels meet.

    A node is a candidate when its 3x3 neighbourhood holds three or more
    distinct nonzero labels.  Connected candidates form one junction, placed
    at their centroid, with valence equal to the number of labels seen.
    Candidates within ``margin`` nodes of the boundary are left to
    :func:`boundary_hits`.
    """
    lab = np.asarray(labels)
    distinct = np.zeros(lab.shape, int)
    padded = np.pad(lab, 1)
    windows = [padded[1 + di:1 + di + lab.shape[0], 1 + dj:1 + dj + lab.shape[1]]
               for di in (-1, 0, 1) for dj in (-1, 0, 1)]
    stack = np.stack(windows)
    for k in range(stack.shape[0]):
        v = stack[k]
        new = np.ones(lab.shape, bool)
        for m in range(k):
            new &= stack[m] != v
        distinct += (new & (v > 0))
    cand = distinct >= 3
    cand[:margin + 1, :] = cand[-margin - 1:, :] = False
    cand[:, :margin + 1] = cand[:, -margin - 1:] = False
    comp, n = ndimage.label(cand, structure=np.ones((3, 3)))
    # zero-band nodes whose four neighbours carry three labels are exact
    # junctions (the end of a Dirichlet piece of a symmetry line)
    cross = [padded[1 + di:1 + di + lab.shape[0], 1 + dj:1 + dj + lab.shape[1]]
             for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))]
    n_cross = np.zeros(lab.shape, int)
    for k, v in enumerate(cross):
        new = v > 0
        for m in range(k):
            new &= cross[m] != v
        n_cross += new
    exact = (lab == 0) & (n_cross >= 3)
    X, Y = grid.mesh()
    out = []
    for c in range(1, n + 1):
        sel = comp == c
        labs = set(np.unique(stack[:, sel])) - {0}
        at = sel & exact
        where = at if at.any() else sel
        out.append((float(X[where].mean()), float(Y[where].mean()), len(labs)))
    return out


def _ring_nodes(shape):
    """Interior nodes next to the boundary, counter-clockwise."""
    nx, ny = shape
    lo, hi_i, hi_j = 1, nx - 2, ny - 2
    ring = [(i, lo) for i in range(lo, hi_i + 1)]
    ring += [(hi_i, j) for j in range(lo + 1, hi_j + 1)]
    ring += [(i, hi_j) for i in range(hi_i - 1, lo - 1, -1)]
    ring += [(lo, j) for j in range(hi_j - 1, lo, -1)]
    return ring


def boundary_hits(labels: np.ndarray, grid: Grid, cluster: int = 2):
    """Points where interfaces reach the boundary, with arc counts.

    Walks the ring of nodes adjacent to the boundary, skipping the near-zero
    band, and records every change of label.  Changes less than ``cluster``
    ring steps apart merge into one point whose count is the number of arcs.
    """
    ring = _ring_nodes(labels.shape)
    vals = [(k, labels[p]) for k, p in enumerate(ring) if labels[p] > 0]
    if not vals:
        return []
    changes = []
    n = len(ring)
    for (k1, l1), (k2, l2) in zip(vals, vals[1:] + vals[:1]):
        if l1 != l2:
            gap = (k2 - k1) % n
            changes.append(((k1 + gap / 2) % n, gap))
    changes.sort()
    groups: list[list[float]] = []
    for pos, gap in changes:
        if groups and (pos - groups[-1][-1]) <= cluster + gap / 2:
            groups[-1].append(pos)
        else:
            groups.append([pos])
    if len(groups) > 1 and (groups[0][0] + n - groups[-1][-1]) <= cluster:
        groups[0] = groups.pop() + groups[0]
    X, Y = grid.mesh()
    out = []
    for g in groups:
        k = int(round(g[len(g) // 2])) % n
        i, j = ring[k]
        # project onto the boundary
        x, y = X[i, j], Y[i, j]
        d = {"l": i, "r": labels.shape[0] - 1 - i, "b": j, "t": labels.shape[1] - 1 - j}
        side = min(d, key=d.get)
        if side == "l":
            x = grid.xmin
        elif side == "r":
            x = grid.xmax
        elif side == "b":
            y = grid.ymin
        else:
            y = grid.ymax
        out.append((float(x), float(y), len(g)))
    return out


def classify_topology(critical, boundary) -> str:
    """Configuration of a 3-partition from its junction tallies.

    ``type_a``: one interior triple point and arcs reaching the boundary three
    times; ``type_b``: two triple points and two arrivals; ``type_c``: two
    triple points and none; ``nodal``: every interior junction has even
    valence (bipartite partition); anything else is ``other``.
    """
    nus = [p[2] for p in critical]
    rho = sum(p[2] for p in boundary)
    if all(nu % 2 == 0 for nu in nus):
        return "nodal"
    if nus == [3] and rho == 3:
        return "type_a"
    if nus == [3, 3] and rho == 2:
        return "type_b"
    if nus == [3, 3] and rho == 0:
        return "type_c"
    return "other"


def evaluate_partition(labels: np.ndarray, grid: Grid, tol: float = 1e-10) -> Partition:
    """Ground energies of every part and the partition energy ``max_i lambda(D_i)``.

    Each part is the set of nodes carrying its label; its energy is the
    lowest Dirichlet eigenvalue of the lattice Laplacian restricted to it.
    """
    labels = np.asarray(labels)
    ids = [int(v) for v in np.unique(labels) if v > 0]
    if len(ids) < 2:
        raise ValueError("a partition needs at least two parts")
    for v in ids:
        _, n = ndimage.label(labels == v, structure=_four())
        if n != 1:
            raise ValueError(f"part {v} is not connected ({n} components)")

    def part_energy(v):
        return float(lowest_eigenpairs(assemble_masked(grid, labels == v), 1, tol=tol).eigenvalues[0])

    lam = parallel_map(part_energy, ids)
    crit = junction_points(labels, grid)
    bnd = boundary_hits(labels, grid)
    return Partition(labels, grid, len(ids), lam, max(lam), classify_topology(crit, bnd), crit, bnd)


def nodal_thirds_labels(grid: Grid) -> np.ndarray:
    """Three horizontal strips ``|y| < b/6`` and ``+-y > b/6`` of the lattice.

    Nodes on the lines ``y = +-b/6`` (if any) are left unlabelled.
    """
    X, Y = grid.mesh()
    b = grid.ymax - grid.ymin
    yc = (grid.ymax + grid.ymin) / 2
    t = Y - yc
    lab = np.zeros(grid.shape, int)
    tol = 1e-12 * b
    lab[t < -b / 6 - tol] = 1
    lab[np.abs(t) < b / 6 - tol] = 2
    lab[t > b / 6 + tol] = 3
    lab[~grid.interior_mask()] = 0
    return lab


def mirror_consistent(labels: np.ndarray) -> bool:
    """``labels(x, -y)`` equals ``labels(x, y)`` up to a relabelling."""
    flipped = labels[:, ::-1]
    pairs = set(zip(labels.ravel().tolist(), flipped.ravel().tolist()))
    fwd: dict[int, int] = {}
    for a, b in pairs:
        if (a == 0) != (b == 0):
            return False
        if fwd.setdefault(a, b) != b:
            return False
    return len(set(fwd.values())) == len(fwd)


# --------------------------------------------------------------------------
# interface geometry


def _interface_points(labels: np.ndarray, grid: Grid) -> dict:
    """Interface samples grouped by the pair of labels they separate.

    Samples are midpoints of lattice edges joining different nonzero labels,
    and zero-band nodes whose neighbours carry at least two labels.
    """
    X, Y = grid.mesh()
    pts: dict[tuple[int, int], list] = {}
    lab = labels
    for axis in (0, 1):
        a = lab[:-1, :] if axis == 0 else lab[:, :-1]
        b = lab[1:, :] if axis == 0 else lab[:, 1:]
        xa = X[:-1, :] if axis == 0 else X[:, :-1]
        xb = X[1:, :] if axis == 0 else X[:, 1:]
        ya = Y[:-1, :] if axis == 0 else Y[:, :-1]
        yb = Y[1:, :] if axis == 0 else Y[:, 1:]
        sel = (a > 0) & (b > 0) & (a != b)
        for la, lb, x1, x2, y1, y2 in zip(a[sel], b[sel], xa[sel], xb[sel], ya[sel], yb[sel]):
            key = (int(min(la, lb)), int(max(la, lb)))
            pts.setdefault(key, []).append(((x1 + x2) / 2, (y1 + y2) / 2))
    interior = grid.interior_mask()
    for i, j in zip(*np.nonzero((lab == 0) & interior)):
        nb = sorted({int(lab[i + di, j + dj]) for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))} - {0})
        for p in range(len(nb)):
            for q in range(p + 1, len(nb)):
                pts.setdefault((nb[p], nb[q]), []).append((X[i, j], Y[i, j]))
    return {k: np.asarray(v) for k, v in pts.items()}


def _line_fit(P: np.ndarray):
    """Mean and unit direction of the total-least-squares line through ``P``."""
    m = P.mean(axis=0)
    _, vecs = np.linalg.eigh((P - m).T @ (P - m))
    return m, vecs[:, -1]


def _annulus(P, c, h, radius):
    r = np.hypot(*(P - c).T)
    return P[(r >= h * 0.999) & (r <= radius * h)]


def triple_point_angles(partition: Partition, radius: float = ANGLE_RADIUS) -> np.ndarray:
    """Angles between the three interfaces leaving the interior triple point.

    Each interface is sampled within ``h <= r <= radius*h`` of the triple
    point and its direction is the least-squares ray through the triple point
    (principal axis of the second moments about it), oriented outwards.  The
    three angles between consecutive rays sum to ``2 pi``.
    """
    crit = [p for p in partition.critical_points if p[2] == 3]
    if partition.topology != "type_a" or len(crit) != 1:
        raise ValueError(f"need a type_a partition with one interior triple point, got {partition.topology}")
    g = partition.grid
    h = max(g.hx, g.hy)
    c = np.array(crit[0][:2])
    rays = []
    for P in _interface_points(partition.labels, g).values():
        Q = _annulus(P, c, h, radius) - c
        if len(Q) < 2:
            continue
        _, vecs = np.linalg.eigh(Q.T @ Q)
        d = vecs[:, -1]
        rays.append(d if d @ Q.mean(axis=0) >= 0 else -d)
    if len(rays) != 3:
        raise ValueError(f"expected three interfaces at the triple point, found {len(rays)}")
    ang = np.sort(np.mod([math.atan2(d[1], d[0]) for d in rays], 2 * np.pi))
    return np.diff(np.r_[ang, ang[0] + 2 * np.pi])


def boundary_angles(partition: Partition, radius: float = ANGLE_RADIUS) -> list[float]:
    """Angle in ``[0, pi/2]`` between each interface and the boundary it hits.

    Hits within two cells of a corner are skipped.
    The interface closest to each boundary point is sampled within
    ``radius*h`` of it and replaced by its total-least-squares line.
    """
    g = partition.grid
    h = max(g.hx, g.hy)
    out = []
    ifaces = _interface_points(partition.labels, g)
    for x, y, _ in partition.boundary_points:
        b = np.array([x, y])
        near_x = min(abs(x - g.xmin), abs(x - g.xmax)) <= 2 * h
        near_y = min(abs(y - g.ymin), abs(y - g.ymax)) <= 2 * h
        if near_x and near_y:
            continue  # no tangent at a corner
        best = None
        for P in ifaces.values():
            r = np.hypot(*(P - b).T)
            sel = r <= radius * h
            if sel.sum() >= 3 and (best is None or r.min() < best[0]):
                best = (r.min(), P[sel])
        if best is None:
            continue
        _, d = _line_fit(best[1])
        on_vertical = math.isclose(x, g.xmin) or math.isclose(x, g.xmax)
        tangent = np.array([0.0, 1.0]) if on_vertical else np.array([1.0, 0.0])
        out.append(float(math.acos(min(1.0, abs(d @ tangent)))))
    return out


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepPoint:
    x0: float
    x1: float | None
    lam: float
    feasible: bool
    parts: int
    eig_index: int  # 1 = second eigenfunction, 2 = third (cluster rule), ...

    def to_dict(self) -> dict:
        return {"x0": self.x0, "x1": self.x1, "lambda": self.lam, "feasible": self.feasible,
                "parts": self.parts, "eig_index": self.eig_index}


@dataclass
class SweepResult:
    epsilon: float
    kind: str
    h: float
    points: list[SweepPoint]
    argmin: SweepPoint | None
    refined_x0: float | None
    refined_lambda: float | None
    best: Partition | None
    cell: float
    solves: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.argmin is not None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "type": self.kind,
            "h": self.h,
            "cell": self.cell,
            "solves": self.solves,
            "sweep_points": [p.to_dict() for p in self.points],
            "argmin": self.argmin.to_dict() if self.argmin else None,
            "refined_x0": self.refined_x0,
            "refined_lambda": self.refined_lambda,
            "best": self.best.to_dict() if self.best else None,
            "notes": self.notes,
        }


class _AxisProblem:
    """Lower half rectangle, split points on the symmetry line ``y = 0``."""

    def __init__(self, geom: RectGeometry, h: float, kind: str):
        if kind not in ("a", "b", "c"):
            raise ValueError(f"type must be a, b or c, got {kind!r}")
        self.geom = geom
        self.kind = kind
        self.full = Grid.lattice(geom.bounds, h)
        xmin, xmax, ymin, _ = geom.bounds
        self.box = (xmin, xmax, ymin, 0.0)
        self.half = Grid(*self.box, self.full.mx, self.full.my // 2)
        self.xs = self.full.x
        self.cell = self.full.hx

    def neumann(self, i0: int, i1: int | None):
        x = self.xs
        if self.kind == "a":
            return [(x[i0], x[-1])]
        if self.kind == "b":
            return [(x[i0], x[i1])]
        return [(x[0], x[i0]), (x[i1], x[-1])]

    def operator(self, i0, i1=None) -> SparseOperator:
        spec = BoundarySpec.with_neumann(self.box, {"top": self.neumann(i0, i1)})
        return assemble_mixed(None, self.half, spec)

    def unfold(self, op: SparseOperator, vec) -> np.ndarray:
        half = op.nodal_values(vec)
        my = self.half.my
        return np.concatenate([half, half[:, my - 1::-1]], axis=1)


class _DiagonalProblem:
    """Half square ``x < y``, split points on the diagonal ``x = y``."""

    def __init__(self, geom: RectGeometry, h: float):
        if not geom.is_square:
            raise ValueError("the diagonal search needs a square (a == b)")
        self.geom = geom
        self.kind = "diagonal"
        self.full = Grid.lattice(geom.bounds, h)
        self.base = assemble_dirichlet(geom, self.full)
        m = self.full.mx
        I, J = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        self.perm = J * (m + 1) + I
        self.on_line = (I == J) & self.full.interior_mask()
        X, Y = self.full.mesh()
        self.side = (X - Y < 0) | (I == J)
        self.xs = self.full.x
        self.cell = self.full.hx * math.sqrt(2)
        self.I = I

    def operator(self, i0, i1=None) -> SparseOperator:
        # Neumann on the diagonal beyond node i0, Dirichlet up to and including it
        zero = self.on_line & (self.I <= i0)
        return reflection_reduce(self.base, self.perm, zero, keep_side=self.side)

    def unfold(self, op, vec):
        return op.nodal_values(vec)


def _evaluate_point(problem, i0, i1, tol):
    op = problem.operator(i0, i1)
    k = min(N_EIGS, op.dimension - 2)
    res = lowest_eigenpairs(op, k, tol=tol)
    lam = res.eigenvalues
    x1 = None if i1 is None else float(problem.xs[i1])
    candidates = [1] + [j for j in range(2, k) if abs(lam[j] - lam[1]) <= CLUSTER_RTOL * lam[1]]
    parts_seen = []
    for j in candidates:
        labels, parts = sign_labels(problem.unfold(op, res.eigenvectors[:, j]))
        parts_seen.append(parts)
        if parts == 3:
            # the candidate energy is the cluster's value lambda_2
            return SweepPoint(float(problem.xs[i0]), x1, float(lam[1]), True, 3, j), labels
    return SweepPoint(float(problem.xs[i0]), x1, float(lam[1]), False, parts_seen[0], 1), None


def _best(points):
    feas = [p for p in points if p.feasible]
    if not feas:
        return None
    return min(feas, key=lambda p: (p.lam, p.x0, p.x1 if p.x1 is not None else 0.0))


def _parabolic(points, best, cell):
    """Vertex of the parabola through the best feasible sample and its
    feasible neighbours, kept only when it lies between them and within one
    cell of the best sample; otherwise the sample itself."""
    feas = sorted((p for p in points if p.feasible and p.x1 == best.x1), key=lambda p: p.x0)
    k = next(i for i, p in enumerate(feas) if p is best)
    if k == 0 or k == len(feas) - 1:
        return best.x0, best.lam
    trio = feas[k - 1:k + 2]
    xs = np.array([p.x0 for p in trio])
    ys = np.array([p.lam for p in trio])
    if np.max(np.diff(xs)) > 1.5 * cell:
        return best.x0, best.lam
    c2, c1, c0 = np.polyfit(xs, ys, 2)
    if c2 <= 0:
        return best.x0, best.lam
    xv = -c1 / (2 * c2)
    if not (xs[0] <= xv <= xs[-1]) or abs(xv - best.x0) > cell:
        return best.x0, best.lam
    return float(xv), float(np.polyval([c2, c1, c0], xv))


def _run(problem, pairs, tol):
    out = parallel_map(lambda p: _evaluate_point(problem, p[0], p[1], tol), pairs)
    return {pair: r for pair, r in zip(pairs, out)}


def _coarse_indices(lo: int, hi: int, n: int) -> list[int]:
    return sorted(set(np.linspace(lo, hi, max(2, n)).round().astype(int).tolist()))


def _sweep(problem, eps, h, sweep_resolution, tol, window=None, evaluate=True) -> SweepResult:
    n_nodes = len(problem.xs) - 1  # split indices 0..mx
    results: dict = {}
    if problem.kind in ("a", "diagonal"):
        lo, hi = (0, n_nodes) if window is None else window
        if problem.kind == "diagonal":
            hi = min(hi, n_nodes - 1)
        coarse = _coarse_indices(lo, hi, sweep_resolution)
        results.update(_run(problem, [(i, None) for i in coarse], tol))
        best = _best([r[0] for r in results.values()])
        if best is not None:
            b = int(round((best.x0 - problem.xs[0]) / (problem.xs[1] - problem.xs[0])))
            step = max(1, int(math.ceil((hi - lo) / max(1, sweep_resolution - 1))))
            fine = [i for i in range(max(lo, b - step), min(hi, b + step) + 1) if (i, None) not in results]
            results.update(_run(problem, [(i, None) for i in fine], tol))
    else:
        # both ends strictly inside the edge: otherwise the configuration is
        # a type a problem in disguise
        coarse = _coarse_indices(1, n_nodes - 1, sweep_resolution)
        if problem.kind == "b":
            pairs = [(i, j) for i in coarse for j in coarse if j >= i + 2]
        else:
            # each Neumann piece must contain a node strictly inside it
            pairs = [(i, j) for i in coarse for j in coarse if 2 <= i < j <= n_nodes - 2]
        results.update(_run(problem, pairs, tol))
    keys = sorted(results, key=lambda k: (k[0], -1 if k[1] is None else k[1]))
    points = [results[k][0] for k in keys]
    best = _best(points)
    cell = problem.cell if problem.kind == "diagonal" else problem.xs[1] - problem.xs[0]
    notes = []
    if best is None:
        notes.append("no split configuration produced a 3-partition")
        return SweepResult(eps, problem.kind, h, points, None, None, None, None, cell, len(points), notes)
    if problem.kind == "diagonal":
        xr, lr = best.x0, best.lam
    else:
        xr, lr = _parabolic(points, best, cell)
    labels = next(results[k][1] for k in keys if results[k][0] is best)
    part = evaluate_partition(labels, problem.full) if evaluate else None
    return SweepResult(eps, problem.kind, h, points, best, xr, lr, part, cell, len(points), notes)


def dn_sweep(eps: float, kind: str = "a", h: float = math.pi / 100, sweep_resolution: int = 64,
             tol: float = 1e-9, window: tuple[int, int] | None = None, b: float = math.pi,
             evaluate: bool = True) -> SweepResult:
    """Best symmetric 3-partition over split points on ``y = 0``.

    Parameters
    ----------
    eps : float
        Aspect ratio; the rectangle is ``a = eps * b`` by ``b``.
    kind : {"a", "b", "c"}
        Neumann on ``[x0, a/2]``, on ``[x0, x1]``, or on
        ``[-a/2, x0] U [x1, a/2]``.
    h : float
        Target lattice spacing (interval counts are rounded to even).
    sweep_resolution : int
        Number of coarse split positions per coordinate.  For type ``a`` the
        neighbourhood of the best coarse point is then scanned node by node.
    window : (int, int), optional
        Range of split node indices for type ``a`` (used by warm starts).

    Returns
    -------
    SweepResult
        Feasible means the mirrored eigenfunction has exactly three sign
        components.  Besides the second eigenfunction, eigenfunctions whose
        eigenvalue lies within ``CLUSTER_RTOL`` of the second one are tried,
        which matters where the spectrum is (nearly) degenerate.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    geom = RectGeometry(eps * b, b)
    return _sweep(_AxisProblem(geom, h, kind), eps, h, sweep_resolution, tol, window, evaluate)


def diagonal_search(geom: RectGeometry, h: float = math.pi / 100, sweep_resolution: int = 64,
                    tol: float = 1e-9) -> SweepResult:
    """The same sweep with the split point moving along the diagonal ``x = y``.

    The half problem is the triangle ``x < y`` with Neumann conditions on the
    part of the diagonal beyond the split point.  It is discretised by
    restricting the full-square lattice operator to functions even under the
    diagonal mirror.  ``x0`` in the result is the x coordinate of the split
    point.
    """
    return _sweep(_DiagonalProblem(geom, h), geom.eps, h, sweep_resolution, tol)


# --------------------------------------------------------------------------
# continuation in eps


def transition_schedule(ts=(0, 2, 3.45, 7, 11, 15, 20)) -> list[float]:
    """``eps_t = (1 - t/20) sqrt(3/8) + t/20``."""
    e0 = math.sqrt(3 / 8)
    return [(1 - t / 20) * e0 + t / 20 for t in ts]


@dataclass
class TransitionRow:
    eps: float
    x0: float
    x0_refined: float
    relative_x0: float  # x0 / (a/2)
    energy: float  # second DN eigenvalue at the optimum
    Lambda: float  # max over the parts of their Dirichlet ground energy
    bound: float
    below_bound: bool
    cell: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TransitionResult:
    rows: list[TransitionRow]
    h: float

    @property
    def monotone(self) -> bool:
        x = [r.x0 for r in self.rows]
        return all(b >= a - 1e-12 for a, b in zip(x[:-1], x[1:]))

    def to_dict(self) -> dict:
        return {"h": self.h, "monotone": self.monotone, "rows": [r.to_dict() for r in self.rows]}


def transition_study(eps_schedule, h: float = math.pi / 100, sweep_resolution: int = 32,
                     tol: float = 1e-9, window_cells: int | None = None) -> TransitionResult:
    """Follow the type ``a`` optimum from the critical ratio towards the square.

    Each sweep is restricted to a window of split nodes around the previous
    optimum, scaled to the new width.  The window grows whenever the optimum
    lands on its left edge or nothing is feasible inside it, so the result
    does not depend on the warm start.
    """
    rows = []
    prev_rel = None
    for eps in sorted(eps_schedule):
        if not math.sqrt(3 / 8) - 1e-12 <= eps <= 1 + 1e-12:
            raise ValueError(f"schedule values must lie in [sqrt(3/8), 1], got {eps}")
        eps = min(eps, 1.0)
        probe = Grid.lattice((-eps * math.pi / 2, eps * math.pi / 2, -math.pi / 2, math.pi / 2), h)
        m = probe.mx
        w = window_cells or max(8, m // 8)
        if prev_rel is None:
            window = (0, m)
        else:
            c = int(round((prev_rel + 1) / 2 * m))
            window = (max(0, c - w), min(m, c + w))
        while True:
            res = dn_sweep(eps, "a", h, min(sweep_resolution, window[1] - window[0] + 1), tol,
                           window=window)
            lo, hi = window
            if res.argmin is None and (lo, hi) != (0, m):
                window = (max(0, lo - w), min(m, hi + 2 * w))
                continue
            if res.argmin is not None and lo > 0:
                i_best = int(round((res.argmin.x0 - probe.xmin) / probe.hx))
                if i_best <= lo + 1:
                    window = (max(0, lo - 2 * w), hi)
                    continue
            break
        if res.argmin is None:
            raise RuntimeError(f"no feasible 3-partition at eps={eps}")
        half = eps * math.pi / 2
        bound = 9 + 1 / eps**2
        lam = res.best.Lambda
        rows.append(TransitionRow(eps, res.argmin.x0, res.refined_x0, res.argmin.x0 / half,
                                  res.argmin.lam, lam, bound, max(lam, res.argmin.lam) < bound, res.cell))
        prev_rel = res.argmin.x0 / half
        log.info("eps=%.5f x0=%.4f energy=%.5f bound=%.5f", eps, res.argmin.x0, res.argmin.lam, bound)
    return TransitionResult(rows, h)
