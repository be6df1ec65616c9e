"""Aharonov-Bohm experiments on the punctured rectangle.

The flux-1/2 operator commutes with the mirror ``y -> -y`` composed with the
gauge flip, which splits it into two sectors that are each equivalent to a
Laplacian on a half rectangle with Dirichlet conditions except Neumann on the
half of the symmetry line that does not carry the cut.  Hence the even
multiplicity of every level, and the isospectrality with the half problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import RectGeometry
from .concurrency import parallel_map
from .discretization import (BoundarySpec, CutSpec, Grid, SparseOperator, assemble_ab,
                             assemble_dirichlet, assemble_mixed, reflection_reduce)
from .eigensolver import LEVEL_GAP, SpectrumResult, group_levels, lowest_eigenpairs

__all__ = [
    "AXIS_HALVES",
    "DIAGONAL_HALVES",
    "HALF_PROBLEMS",
    "IsospectralReport",
    "KRealReport",
    "ab_operator",
    "ab_spectrum",
    "dn_half_operator",
    "dn_half_spectrum",
    "isospec_battery",
    "kreal_nodal_check",
    "ab_loop_sign_changes",
]

AXIS_HALVES = ("uh", "lh", "leh", "rih")
DIAGONAL_HALVES = ("--dh", "++dh", "+-dh", "-+dh")
HALF_PROBLEMS = AXIS_HALVES + DIAGONAL_HALVES


def ab_operator(geom: RectGeometry, h: float, cut: CutSpec | None = None) -> SparseOperator:
    return assemble_ab(geom, Grid.offset(geom.bounds, h), cut)


def ab_spectrum(geom: RectGeometry, h: float, k: int, tol: float = 1e-10) -> SpectrumResult:
    """Lowest ``k`` eigenvalues of the flux-1/2 operator punctured at the centre."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return lowest_eigenpairs(ab_operator(geom, h), k, tol=tol)


def _axis_half(geom: RectGeometry, which: str, h: float) -> SparseOperator:
    # Neumann on the half of the symmetry line pointing to +x (horizontal
    # line) or +y (vertical line), counted from the centre
    xmin, xmax, ymin, ymax = geom.bounds
    if which == "uh":
        box, neu = (xmin, xmax, 0.0, ymax), {"bottom": [(0.0, xmax)]}
    elif which == "lh":
        box, neu = (xmin, xmax, ymin, 0.0), {"top": [(0.0, xmax)]}
    elif which == "leh":
        box, neu = (xmin, 0.0, ymin, ymax), {"right": [(0.0, ymax)]}
    else:
        box, neu = (0.0, xmax, ymin, ymax), {"left": [(0.0, ymax)]}
    # keep the node spacing of the full-rectangle lattice
    full = Grid.lattice(geom.bounds, h)
    grid = Grid(*box, full.mx // 2 if which in ("leh", "rih") else full.mx,
                full.my // 2 if which in ("uh", "lh") else full.my)
    return assemble_mixed(None, grid, BoundarySpec.with_neumann(box, neu))


def _diagonal_half(geom: RectGeometry, which: str, h: float) -> SparseOperator:
    if not geom.is_square:
        raise ValueError("diagonal half-domains need a square (a == b)")
    grid = Grid.lattice(geom.bounds, h)
    full = assemble_dirichlet(geom, grid)
    m = grid.mx
    I, J = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    X, Y = grid.mesh()
    if which in ("+-dh", "-+dh"):
        perm = (J * (m + 1) + I)
        on_line = I == J
        side = (X - Y > 0) if which == "+-dh" else (X - Y < 0)
    else:
        perm = ((m - J) * (m + 1) + (m - I))
        on_line = I + J == m
        side = (X + Y > 0) if which == "++dh" else (X + Y < 0)
    # Neumann on the half-diagonal with x > 0, Dirichlet on the rest (centre included)
    zero = on_line & (X <= 1e-12 * geom.a) & grid.interior_mask()
    red = reflection_reduce(full, perm, zero, keep_side=side | on_line)
    red.meta["domain"] = which
    return red


def dn_half_operator(geom: RectGeometry, which: str, h: float) -> SparseOperator:
    """Mixed Dirichlet-Neumann operator on one of the eight half-domains.

    Axis halves (``uh``, ``lh``, ``leh``, ``rih``) carry Neumann on the half of
    the symmetry line from the centre towards +x or +y.  Diagonal halves
    (square only) carry Neumann on the half-diagonal with ``x > 0``; they are
    obtained by restricting the full-square lattice operator to functions even
    under the diagonal mirror and vanishing on the Dirichlet half-diagonal,
    which is an exact lattice discretisation without staircase error.
    """
    if which in AXIS_HALVES:
        return _axis_half(geom, which, h)
    if which in DIAGONAL_HALVES:
        return _diagonal_half(geom, which, h)
    raise ValueError(f"unknown half-domain {which!r}; expected one of {HALF_PROBLEMS}")


def dn_half_spectrum(geom: RectGeometry, which: str, k: int, h: float,
                     tol: float = 1e-10) -> SpectrumResult:
    return lowest_eigenpairs(dn_half_operator(geom, which, h), k, tol=tol)


def _rel_dev(u, v) -> float:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    n = min(len(u), len(v))
    return float(np.max(np.abs(u[:n] - v[:n]) / np.abs(v[:n])))


@dataclass
class IsospectralReport:
    problem_labels: list[str]
    grids: list[float]
    eigenvalue_table: dict  # {(label, h): [values]}
    deviations: dict  # {(label1, label2): [dev at each h]}
    ab_multiplicities: dict  # {h: [multiplicity per AB level]}
    multiplicity_relation: dict  # {h: bool}
    k: int
    geometry: dict = field(default_factory=dict)

    def deviation(self, a: str, b: str, level: int = -1) -> float:
        key = (a, b) if (a, b) in self.deviations else (b, a)
        return self.deviations[key][level]

    def trend_decreasing(self, a: str, b: str, floor: float = 0.0) -> bool:
        """True when the deviation does not grow under refinement.

        Values below ``floor`` count as converged (roundoff level).
        """
        d = self.deviations[(a, b) if (a, b) in self.deviations else (b, a)]
        return all(d2 <= max(d1, floor) for d1, d2 in zip(d[:-1], d[1:]))

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry,
            "k": self.k,
            "grids": self.grids,
            "problems": [{"label": lab, "h": h, "eigenvalues": list(map(float, vals))}
                         for (lab, h), vals in self.eigenvalue_table.items()],
            "deviations": [{"pair": list(p), "value": d[-1], "trend": d} for p, d in self.deviations.items()],
            "ab_multiplicities": {repr(h): m for h, m in self.ab_multiplicities.items()},
            "multiplicity_relation": {repr(h): ok for h, ok in self.multiplicity_relation.items()},
        }


def isospec_battery(geom: RectGeometry, k: int, grids, problems=None, diagonals: bool = False,
                    tol: float = 1e-10) -> IsospectralReport:
    """Compare the collapsed AB spectrum with the half-domain spectra.

    For each grid spacing the lowest ``2k + 2`` AB eigenvalues are computed and
    every second one is kept, which lists the AB levels with half their
    multiplicity; this is compared with the first ``k`` eigenvalues of each
    half problem.  The relation "multiplicity ``m`` on a half domain means
    multiplicity ``2m`` for AB" is checked on the grouped levels of ``uh``.
    """
    grids = sorted((float(h) for h in grids), reverse=True)
    if len(grids) < 2:
        raise ValueError("need at least two grid levels")
    if problems is None:
        problems = list(AXIS_HALVES) + (list(DIAGONAL_HALVES) if diagonals else [])
    problems = list(problems)
    jobs = [("ab", h) for h in grids] + [(p, h) for h in grids for p in problems]

    def run(job):
        lab, h = job
        if lab == "ab":
            return ab_spectrum(geom, h, 2 * k + 2, tol=tol)
        return dn_half_spectrum(geom, lab, k, h, tol=tol)

    results = dict(zip(jobs, parallel_map(run, jobs)))
    table = {}
    mults = {}
    relation = {}
    for h in grids:
        ab = results[("ab", h)].eigenvalues
        table[("ab", h)] = ab[0::2][:k]
        levels = group_levels(ab, LEVEL_GAP)[:-1]  # the last level may be cut off
        mults[h] = [m for _, m in levels]
        for p in problems:
            table[(p, h)] = results[(p, h)].eigenvalues[:k]
        ok = all(m % 2 == 0 for m in mults[h])
        if "uh" in problems:
            dn_levels = group_levels(table[("uh", h)], LEVEL_GAP)[:-1]
            ok = ok and all(m_ab == 2 * m_dn for (_, m_ab), (_, m_dn) in zip(levels, dn_levels))
        relation[h] = ok
    devs = {}
    labels = ["ab"] + problems
    ref = "uh" if "uh" in problems else None
    for p in problems:
        devs[("ab", p)] = [_rel_dev(table[("ab", h)], table[(p, h)]) for h in grids]
        if ref and p != ref:
            devs[(ref, p)] = [_rel_dev(table[(ref, h)], table[(p, h)]) for h in grids]
    return IsospectralReport(labels, grids, table, devs, mults, relation, k,
                             {"a": geom.a, "b": geom.b})


@dataclass
class KRealLevel:
    level: int
    value: float
    ab_counts: dict  # {radius: [count per eigenvector of the pair]}
    dn_counts: dict  # {radius: count}
    odd: bool


@dataclass
class KRealReport:
    levels: list[KRealLevel]
    h: float
    radii: list[int]

    @property
    def all_odd(self) -> bool:
        return all(lv.odd for lv in self.levels)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "radii": self.radii,
            "levels": [{"level": lv.level, "value": lv.value,
                        "ab_counts": {str(r): c for r, c in lv.ab_counts.items()},
                        "dn_counts": {str(r): c for r, c in lv.dn_counts.items()},
                        "odd": lv.odd} for lv in self.levels],
        }


def _ring(ic: int, jc: int, r: int) -> list[tuple[int, int]]:
    """Closed counter-clockwise ring of nodes at Chebyshev distance ``r``.

    For a cell-centred grid with the puncture at corner ``(ic, jc)`` the ring
    surrounds the nodes ``ic-r .. ic+r-1``.
    """
    lo_i, hi_i, lo_j, hi_j = ic - r, ic + r - 1, jc - r, jc + r - 1
    pts = [(i, lo_j) for i in range(lo_i, hi_i + 1)]
    pts += [(hi_i, j) for j in range(lo_j + 1, hi_j + 1)]
    pts += [(i, hi_j) for i in range(hi_i - 1, lo_i - 1, -1)]
    pts += [(lo_i, j) for j in range(hi_j - 1, lo_j, -1)]
    return pts


def _edge_sign(op: SparseOperator, p, q) -> float:
    sx, sy = op.meta["hopping_x"], op.meta["hopping_y"]
    (i1, j1), (i2, j2) = p, q
    if j1 == j2:
        return sx[min(i1, i2), j1]
    return sy[i1, min(j1, j2)]


def ab_loop_sign_changes(op: SparseOperator, values: np.ndarray, radius: int,
                         noise: float = 1e-8) -> int | None:
    """Gauge-corrected sign changes of a real AB eigenvector around the puncture.

    An edge counts when ``s_e u_p u_q < 0`` with ``s_e`` the hopping sign.
    Returns None if a ring value is below ``noise * max|u|``.
    """
    g = op.grid
    ic = int(round((op.cut.puncture[0] - g.xmin) / g.hx))
    jc = int(round((op.cut.puncture[1] - g.ymin) / g.hy))
    ring = _ring(ic, jc, radius)
    u = values
    floor = noise * np.max(np.abs(u))
    if any(abs(u[p]) <= floor for p in ring):
        return None
    count = 0
    for p, q in zip(ring, ring[1:] + ring[:1]):
        if _edge_sign(op, p, q) * u[p] * u[q] < 0:
            count += 1
    return count


def _dn_loop_count(op: SparseOperator, values: np.ndarray, radius: int, noise: float = 1e-8) -> int | None:
    """Sign changes of the K-real extension of an ``uh`` eigenfunction.

    The extension mirrors ``u`` evenly across the Neumann half-line and
    oddly across the Dirichlet half-line.  Around a lattice ring of the
    given radius centred on the puncture, the lower half repeats the
    upper-half changes and the odd reflection adds one crossing, so the
    count is twice the upper-path changes plus one.
    """
    g = op.grid
    ic = int(round((0.0 - g.xmin) / g.hx))
    u = values
    floor = noise * np.max(np.abs(u))
    path = [(ic + radius, j) for j in range(0, radius + 1)]
    path += [(i, radius) for i in range(ic + radius - 1, ic - radius - 1, -1)]
    path += [(ic - radius, j) for j in range(radius - 1, 0, -1)]
    if any(abs(u[p]) <= floor for p in path):
        return None
    upper = sum(1 for p, q in zip(path[:-1], path[1:]) if u[p] * u[q] < 0)
    return 2 * upper + 1


def kreal_nodal_check(geom: RectGeometry, h: float, n_levels: int = 3,
                      radii=(3, 6, 12)) -> KRealReport:
    """Parity of nodal crossings around the puncture for the first AB levels.

    Two independent routes are reported: loops on the AB eigenvectors in the
    cut gauge, and the reconstructed K-real extension of the ``uh``
    eigenfunctions.  Radii where a ring value sits below the noise floor are
    replaced by the next larger radius.
    """
    op = ab_operator(geom, h)
    res = lowest_eigenpairs(op, 2 * n_levels + 2, tol=1e-10)
    levels = group_levels(res.eigenvalues, LEVEL_GAP)[:n_levels]
    dn_op = dn_half_operator(geom, "uh", h)
    dn = lowest_eigenpairs(dn_op, n_levels, tol=1e-10)
    max_r = min(op.grid.mx, op.grid.my) // 2 - 1
    out = []
    start = 0
    used_radii = []
    for lev, (value, mult) in enumerate(levels):
        ab_counts = {}
        dn_counts = {}
        for r0 in radii:
            for r in range(r0, max_r + 1):
                counts = [ab_loop_sign_changes(op, op.nodal_values(res.eigenvectors[:, j]), r)
                          for j in range(start, start + mult)]
                dcount = _dn_loop_count(dn_op, dn_op.nodal_values(dn.eigenvectors[:, lev]), r)
                if all(c is not None for c in counts) and dcount is not None:
                    ab_counts[r] = counts
                    dn_counts[r] = dcount
                    used_radii.append(r)
                    break
        odd = bool(ab_counts) and all(c % 2 == 1 for cs in ab_counts.values() for c in cs) \
            and all(c % 2 == 1 for c in dn_counts.values())
        out.append(KRealLevel(lev + 1, value, ab_counts, dn_counts, odd))
        start += mult
    return KRealReport(out, h, sorted(set(used_radii)))
