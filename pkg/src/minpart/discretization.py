"""Finite-difference operators on rectangles.

Two kinds of grid are used:

* lattice grids, with nodes at ``xmin + i*hx`` for ``i = 0..mx`` (boundary
  nodes included in the node array, but only unknown when a Neumann condition
  keeps them), so the symmetry lines of a centred rectangle carry nodes when
  ``mx`` and ``my`` are even;
* cell-centred grids, with nodes at ``xmin + (i + 1/2) hx`` for
  ``i = 0..mx-1``, so no node sits on a grid line.  These host the magnetic
  operator, whose singular point is a cell corner.

Every operator keeps a prolongation matrix that turns an eigenvector into
nodal values on its grid, which is how the partition code unfolds reduced
problems back to the full rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from .analytic import RectGeometry

__all__ = [
    "MIN_NODES",
    "Grid",
    "Segment",
    "BoundarySpec",
    "CutSpec",
    "SparseOperator",
    "assemble_dirichlet",
    "assemble_mixed",
    "assemble_masked",
    "assemble_ab",
    "reflection_reduce",
    "plaquette_holonomy",
    "dirichlet_closed_form",
    "export_coo",
]

MIN_NODES = 8
_EDGES = ("bottom", "top", "left", "right")
_SNAP_TOL = 1e-9


def _even_count(length: float, h: float) -> int:
    n = 2 * int(round(length / (2 * h)))
    return max(n, 2)


@dataclass(frozen=True)
class Grid:
    """Structured grid on ``[xmin, xmax] x [ymin, ymax]``.

    ``mx`` and ``my`` are interval counts (lattice) or cell counts
    (cell-centred).
    """

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    mx: int
    my: int
    cell_centered: bool = False

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("empty grid extent")
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ValueError(f"grid too coarse: need at least {MIN_NODES} interior nodes per axis, "
                             f"got nx={self.nx}, ny={self.ny}")

    @classmethod
    def lattice(cls, bounds, h: float) -> "Grid":
        """Lattice grid with even interval counts and spacing close to ``h``."""
        xmin, xmax, ymin, ymax = bounds
        return cls(xmin, xmax, ymin, ymax, _even_count(xmax - xmin, h), _even_count(ymax - ymin, h), False)

    @classmethod
    def offset(cls, bounds, h: float) -> "Grid":
        """Cell-centred grid with even cell counts and spacing close to ``h``."""
        xmin, xmax, ymin, ymax = bounds
        return cls(xmin, xmax, ymin, ymax, _even_count(xmax - xmin, h), _even_count(ymax - ymin, h), True)

    @property
    def hx(self) -> float:
        return (self.xmax - self.xmin) / self.mx

    @property
    def hy(self) -> float:
        return (self.ymax - self.ymin) / self.my

    @property
    def nx(self) -> int:
        """Interior node count along x."""
        return self.mx if self.cell_centered else self.mx - 1

    @property
    def ny(self) -> int:
        return self.my if self.cell_centered else self.my - 1

    @property
    def origin_offset(self) -> bool:
        return self.cell_centered

    @property
    def shape(self) -> tuple[int, int]:
        return (self.mx, self.my) if self.cell_centered else (self.mx + 1, self.my + 1)

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def x(self) -> np.ndarray:
        i = np.arange(self.shape[0])
        return self.xmin + (i + 0.5 if self.cell_centered else i) * self.hx

    @property
    def y(self) -> np.ndarray:
        j = np.arange(self.shape[1])
        return self.ymin + (j + 0.5 if self.cell_centered else j) * self.hy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def interior_mask(self) -> np.ndarray:
        m = np.ones(self.shape, bool)
        if not self.cell_centered:
            m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = False
        return m

    def to_dict(self) -> dict:
        return {
            "xmin": self.xmin, "xmax": self.xmax, "ymin": self.ymin, "ymax": self.ymax,
            "mx": self.mx, "my": self.my, "nx": self.nx, "ny": self.ny,
            "hx": self.hx, "hy": self.hy, "cell_centered": self.cell_centered,
        }


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    condition: str  # "D" or "N"

    def __post_init__(self):
        if self.condition not in ("D", "N"):
            raise ValueError(f"unknown boundary condition {self.condition!r}")
        if self.hi < self.lo:
            raise ValueError("segment with hi < lo")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary conditions as a partition of each edge into segments.

    Edge parameters are the free coordinate: x for ``bottom``/``top``, y for
    ``left``/``right``.  ``snap_distance`` records how far split points moved
    when snapped to grid lines.
    """

    segments: dict = field(default_factory=dict)
    snap_distance: float = 0.0
    zero_length_neumann: bool = False

    @classmethod
    def dirichlet(cls) -> "BoundarySpec":
        return cls({})

    @classmethod
    def with_neumann(cls, geom_bounds, neumann: dict) -> "BoundarySpec":
        """Dirichlet everywhere except the given ``{edge: [(lo, hi), ...]}``."""
        xmin, xmax, ymin, ymax = geom_bounds
        extent = {"bottom": (xmin, xmax), "top": (xmin, xmax), "left": (ymin, ymax), "right": (ymin, ymax)}
        segs = {}
        zero = False
        for edge, intervals in neumann.items():
            if edge not in extent:
                raise ValueError(f"unknown edge {edge!r}")
            lo_e, hi_e = extent[edge]
            cuts = []
            for lo, hi in sorted(intervals):
                if lo < lo_e - _SNAP_TOL or hi > hi_e + _SNAP_TOL:
                    raise ValueError(f"split points must lie on the edge [{lo_e}, {hi_e}]")
                lo, hi = max(lo, lo_e), min(hi, hi_e)
                if hi - lo <= _SNAP_TOL:
                    zero = True
                    continue
                cuts.append((lo, hi))
            pieces = []
            pos = lo_e
            for lo, hi in cuts:
                if lo < pos - _SNAP_TOL:
                    raise ValueError("overlapping Neumann segments")
                if lo > pos:
                    pieces.append(Segment(pos, lo, "D"))
                pieces.append(Segment(lo, hi, "N"))
                pos = hi
            if pos < hi_e:
                pieces.append(Segment(pos, hi_e, "D"))
            segs[edge] = tuple(pieces)
        return cls(segs, 0.0, zero)

    def snapped(self, grid: Grid) -> "BoundarySpec":
        """Move every split point to the nearest grid line."""
        out = {}
        dist = self.snap_distance
        for edge, pieces in self.segments.items():
            start, h = (grid.xmin, grid.hx) if edge in ("bottom", "top") else (grid.ymin, grid.hy)

            def snap(t):
                return start + round((t - start) / h) * h

            new = []
            for s in pieces:
                lo, hi = snap(s.lo), snap(s.hi)
                dist = max(dist, abs(lo - s.lo), abs(hi - s.hi))
                if hi > lo + _SNAP_TOL:
                    new.append(Segment(lo, hi, s.condition))
            out[edge] = tuple(new)
        had = any(s.condition == "N" for p in self.segments.values() for s in p)
        has = any(s.condition == "N" for p in out.values() for s in p)
        zero = self.zero_length_neumann or (had and not has)
        return BoundarySpec(out, dist, zero)

    def neumann_intervals(self, edge: str) -> list[tuple[float, float]]:
        return [(s.lo, s.hi) for s in self.segments.get(edge, ()) if s.condition == "N"]

    def to_dict(self) -> dict:
        return {
            "segments": {e: [[s.lo, s.hi, s.condition] for s in p] for e, p in self.segments.items()},
            "snap_distance": self.snap_distance,
            "zero_length_neumann": self.zero_length_neumann,
        }


@dataclass(frozen=True)
class CutSpec:
    """Half-line from a cell corner to the boundary across which hoppings flip sign."""

    puncture: tuple[float, float] = (0.0, 0.0)
    direction: str = "-x"

    def __post_init__(self):
        if self.direction not in ("-x", "+x", "-y", "+y"):
            raise ValueError(f"cut direction must be one of -x, +x, -y, +y, got {self.direction!r}")


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Immutable symmetric operator with the data needed to map back to nodes.

    ``prolong`` maps a coefficient vector to nodal values on ``grid``
    (flattened in C order over ``grid.shape``).  ``index_map`` gives, per grid
    node, the coefficient that represents it, or -1.
    """

    matrix: sp.csr_matrix
    grid: Grid
    index_map: np.ndarray
    prolong: sp.csr_matrix
    kind: str = "plain"
    boundary: BoundarySpec | None = None
    cut: CutSpec | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def nodal_values(self, vec: np.ndarray) -> np.ndarray:
        return (self.prolong @ vec).reshape(self.grid.shape)

    def asymmetry(self) -> float:
        d = (self.matrix - self.matrix.T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0


def _assemble_edges(grid: Grid, unknown: np.ndarray, mass: np.ndarray,
                    wx: np.ndarray, wy: np.ndarray, sx=None, sy=None,
                    extra_diag: np.ndarray | None = None):
    """Energy-form assembly.

    ``wx[i, j]`` weights the edge between nodes ``(i, j)`` and ``(i+1, j)``,
    ``wy[i, j]`` the edge between ``(i, j)`` and ``(i, j+1)``; ``sx``/``sy``
    are optional hopping signs.  An edge to a node that is not unknown is a
    Dirichlet edge and only adds to the diagonal.  The result is
    ``M^{-1/2} A M^{-1/2}`` with the lumped mass ``M``.
    """
    idx = -np.ones(grid.shape, dtype=np.int64)
    idx[unknown] = np.arange(int(unknown.sum()))
    n = int(unknown.sum())
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    for w, s, h2, sl_p, sl_q in (
        (wx, sx, grid.hx**2, (slice(0, -1), slice(None)), (slice(1, None), slice(None))),
        (wy, sy, grid.hy**2, (slice(None), slice(0, -1)), (slice(None), slice(1, None))),
    ):
        p = idx[sl_p]
        q = idx[sl_q]
        ww = w / h2
        sign = np.ones_like(ww) if s is None else s
        both = (p >= 0) & (q >= 0) & (ww != 0)
        rows.append(p[both]); cols.append(q[both]); vals.append(-(ww * sign)[both])
        rows.append(q[both]); cols.append(p[both]); vals.append(-(ww * sign)[both])
        for a_, b_ in ((p, q), (q, p)):
            sel = (a_ >= 0) & (ww != 0)
            np.add.at(diag, a_[sel], ww[sel])
    if extra_diag is not None:
        diag += extra_diag[unknown]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    A = (A + sp.diags(diag)).tocsr()
    s = 1.0 / np.sqrt(mass[unknown])
    if not np.all(s == 1.0):
        S = sp.diags(s)
        A = (S @ A @ S).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    flat = np.flatnonzero(unknown.ravel())
    P = sp.csr_matrix((s, (flat, np.arange(n))), shape=(grid.size, n))
    return A, idx, P


def _require_lattice(grid: Grid):
    if grid.cell_centered:
        raise ValueError("this operator needs a lattice (node-on-grid-line) grid")


def assemble_dirichlet(geom: RectGeometry, grid: Grid) -> SparseOperator:
    """5-point Dirichlet Laplacian on the interior lattice nodes."""
    _require_lattice(grid)
    _check_grid_fits(geom, grid)
    unknown = grid.interior_mask()
    ones = np.ones(grid.shape)
    A, idx, P = _assemble_edges(grid, unknown, ones, ones[:-1, :], ones[:, :-1])
    return SparseOperator(A, grid, idx, P, "plain", BoundarySpec.dirichlet())


def _check_grid_fits(geom: RectGeometry | None, grid: Grid):
    if geom is None:
        return
    xmin, xmax, ymin, ymax = geom.bounds
    if not (math.isclose(grid.xmax - grid.xmin, xmax - xmin, rel_tol=1e-12)
            and math.isclose(grid.ymax - grid.ymin, ymax - ymin, rel_tol=1e-12)):
        raise ValueError("grid extent does not match the geometry")


def _edge_condition(spec: BoundarySpec, edge: str, t: float, lo_e: float, hi_e: float) -> str:
    """'N' strictly inside a Neumann segment, 'E' at an edge end covered by one, else 'D'."""
    tol = _SNAP_TOL
    for lo, hi in spec.neumann_intervals(edge):
        if lo + tol < t < hi - tol:
            return "N"
        at_end = abs(t - lo_e) <= tol or abs(t - hi_e) <= tol
        if at_end and lo - tol <= t <= hi + tol:
            return "E"
    return "D"


def assemble_mixed(geom_half: RectGeometry | None, grid: Grid, boundary: BoundarySpec) -> SparseOperator:
    """Laplacian with Dirichlet and Neumann segments on a rectangle.

    Neumann nodes are kept as unknowns with half (edge) or quarter (corner)
    lumped mass, and grid edges lying along a Neumann edge get half weight.
    This is the symmetric form of the mirror-ghost scheme.  A boundary node at
    the end of a Neumann segment that meets a Dirichlet segment is treated as
    Dirichlet; a corner is Neumann only if both edges are Neumann there.
    ``geom_half`` may be ``None`` when the grid already fixes the extent.
    """
    _require_lattice(grid)
    _check_grid_fits(geom_half, grid)
    spec = boundary.snapped(grid)
    unknown = grid.interior_mask()
    mass = np.ones(grid.shape)
    xs, ys = grid.x, grid.y
    mx, my = grid.mx, grid.my
    edge_nodes = {
        "bottom": [((i, 0), xs[i]) for i in range(mx + 1)],
        "top": [((i, my), xs[i]) for i in range(mx + 1)],
        "left": [((0, j), ys[j]) for j in range(my + 1)],
        "right": [((mx, j), ys[j]) for j in range(my + 1)],
    }
    extent = {"bottom": (grid.xmin, grid.xmax), "top": (grid.xmin, grid.xmax),
              "left": (grid.ymin, grid.ymax), "right": (grid.ymin, grid.ymax)}
    cond: dict[tuple[int, int], list[str]] = {}
    for edge, nodes in edge_nodes.items():
        for node, t in nodes:
            cond.setdefault(node, []).append(_edge_condition(spec, edge, t, *extent[edge]))
    for node, cs in cond.items():
        if len(cs) == 1 and cs[0] == "N":
            unknown[node] = True
            mass[node] = 0.5
        elif len(cs) == 2 and all(c in ("N", "E") for c in cs):
            unknown[node] = True
            mass[node] = 0.25
    wx = np.ones((mx, my + 1))
    wx[:, 0] = wx[:, -1] = 0.5
    wy = np.ones((mx + 1, my))
    wy[0, :] = wy[-1, :] = 0.5
    A, idx, P = _assemble_edges(grid, unknown, mass, wx, wy)
    return SparseOperator(A, grid, idx, P, "plain", spec,
                          meta={"zero_length_neumann": spec.zero_length_neumann,
                                "neumann_nodes": int((unknown & ~grid.interior_mask()).sum())})


def assemble_masked(grid: Grid, mask: np.ndarray) -> SparseOperator:
    """Dirichlet Laplacian on the nodes selected by ``mask``.

    Nodes outside the mask act as Dirichlet nodes one spacing away, so the
    boundary of the subdomain is resolved to the node (staircase).
    """
    _require_lattice(grid)
    mask = np.asarray(mask, bool)
    if mask.shape != grid.shape:
        raise ValueError(f"mask shape {mask.shape} does not match grid shape {grid.shape}")
    mask = mask & grid.interior_mask()
    if not mask.any():
        raise ValueError("empty mask")
    _, ncomp = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    if ncomp != 1:
        raise ValueError(f"mask is not 4-connected ({ncomp} components)")
    ones = np.ones(grid.shape)
    A, idx, P = _assemble_edges(grid, mask, ones, ones[:-1, :], ones[:, :-1])
    return SparseOperator(A, grid, idx, P, "plain", BoundarySpec.dirichlet())


def _cut_signs(grid: Grid, cut: CutSpec):
    ip = (cut.puncture[0] - grid.xmin) / grid.hx
    jp = (cut.puncture[1] - grid.ymin) / grid.hy
    i0, j0 = int(round(ip)), int(round(jp))
    if abs(ip - i0) > 1e-9 or abs(jp - j0) > 1e-9:
        raise ValueError("the puncture must sit on a cell corner of the offset grid")
    if not (0 < i0 < grid.mx and 0 < j0 < grid.my):
        raise ValueError("the puncture must lie inside the rectangle")
    sx = np.ones((grid.mx - 1, grid.my))
    sy = np.ones((grid.mx, grid.my - 1))
    # x-edge (i, j)-(i+1, j) crosses the vertical line x = corner i+1
    # y-edge (i, j)-(i, j+1) crosses the horizontal line y = corner j+1
    if cut.direction == "-x":
        sy[:i0, j0 - 1] = -1
    elif cut.direction == "+x":
        sy[i0:, j0 - 1] = -1
    elif cut.direction == "-y":
        sx[i0 - 1, :j0] = -1
    else:
        sx[i0 - 1, j0:] = -1
    return sx, sy, (i0, j0)


def assemble_ab(geom: RectGeometry, grid: Grid, cut: CutSpec | None = None) -> SparseOperator:
    """Magnetic Laplacian with flux 1/2 through one point, in a real gauge.

    Hoppings across the cut get sign -1, so every closed lattice loop around
    the puncture has holonomy -1.  Dirichlet faces sit half a cell outside the
    last node (ghost value equal to minus the node value).  In edge form the
    face contributes ``2/h^2``, so a node with one boundary face has diagonal
    ``3/h^2 + 2/h^2``.
    """
    if not grid.cell_centered:
        raise ValueError("the magnetic operator needs an offset (cell-centred) grid")
    _check_grid_fits(geom, grid)
    if not math.isclose(grid.hx, grid.hy, rel_tol=1e-9):
        raise ValueError(f"the magnetic operator needs hx == hy, got {grid.hx} and {grid.hy}")
    cut = cut or CutSpec()
    sx, sy, _ = _cut_signs(grid, cut)
    unknown = np.ones(grid.shape, bool)
    # the missing edge to the ghost node contributes (u - (-u)) / h^2
    extra = np.zeros(grid.shape)
    extra[0, :] += 2 / grid.hx**2
    extra[-1, :] += 2 / grid.hx**2
    extra[:, 0] += 2 / grid.hy**2
    extra[:, -1] += 2 / grid.hy**2
    A, idx, P = _assemble_edges(grid, unknown, np.ones(grid.shape),
                                np.ones((grid.mx - 1, grid.my)), np.ones((grid.mx, grid.my - 1)),
                                sx, sy, extra)
    return SparseOperator(A, grid, idx, P, "magnetic_cut", cut=cut,
                          meta={"hopping_x": sx, "hopping_y": sy})


def plaquette_holonomy(op: SparseOperator) -> np.ndarray:
    """Product of hopping signs around each elementary plaquette.

    Entry ``[i, j]`` belongs to the square with lower-left node ``(i, j)``.
    """
    sx = op.meta.get("hopping_x")
    sy = op.meta.get("hopping_y")
    if sx is None:
        g = op.grid
        sx = np.ones((g.shape[0] - 1, g.shape[1]))
        sy = np.ones((g.shape[0], g.shape[1] - 1))
    return sx[:, :-1] * sy[1:, :] * sx[:, 1:] * sy[:-1, :]


def reflection_reduce(op: SparseOperator, node_perm: np.ndarray, zero_nodes: np.ndarray,
                      keep_side: np.ndarray | None = None) -> SparseOperator:
    """Restrict ``op`` to functions even under an involutive node symmetry.

    ``node_perm`` maps each flat grid node to its mirror image; it must map
    unknowns to unknowns and commute with the operator.  ``zero_nodes`` is a
    boolean grid of fixed nodes forced to zero (a Dirichlet piece of the
    mirror line).  The basis consists of normalised orbit indicators, so the
    reduced matrix is symmetric and its spectrum is the even-sector spectrum.
    ``keep_side`` selects the orbit representative used by ``index_map``.
    """
    g = op.grid
    unk = op.index_map.ravel()
    node_perm = np.asarray(node_perm).ravel()
    if not np.array_equal(node_perm[node_perm], np.arange(g.size)):
        raise ValueError("node_perm must be an involution")
    if not np.array_equal(unk >= 0, unk[node_perm] >= 0):
        raise ValueError("node_perm must map unknowns to unknowns")
    zero = np.asarray(zero_nodes, bool).ravel()
    if np.any(zero & (node_perm != np.arange(g.size))):
        raise ValueError("zero nodes must be fixed by the symmetry")
    n = op.dimension
    perm = np.empty(n, dtype=np.int64)
    nodes = np.flatnonzero(unk >= 0)
    perm[unk[nodes]] = unk[node_perm[nodes]]
    Pm = sp.csr_matrix((np.ones(n), (np.arange(n), perm)), shape=(n, n))
    comm = (Pm @ op.matrix - op.matrix @ Pm)
    if comm.nnz and np.max(np.abs(comm.data)) > 1e-9 * abs(op.matrix).max():
        raise ValueError("the operator does not commute with the symmetry")
    side = np.ones(g.size, bool) if keep_side is None else np.asarray(keep_side, bool).ravel()
    # representative of each orbit: the node on keep_side, else the smaller index
    ar = np.arange(g.size)
    rep_node = np.where(side & ~side[node_perm], ar,
                        np.where(~side & side[node_perm], node_perm, np.minimum(ar, node_perm)))
    keep = (unk >= 0) & ~zero
    reps = np.unique(rep_node[keep])
    col_of_node = -np.ones(g.size, dtype=np.int64)
    col_of_node[reps] = np.arange(len(reps))
    coeff_nodes = np.flatnonzero(keep)
    orbit_size = np.where(node_perm[coeff_nodes] == coeff_nodes, 1.0, 2.0)
    Q = sp.csr_matrix((1 / np.sqrt(orbit_size), (unk[coeff_nodes], col_of_node[rep_node[coeff_nodes]])),
                      shape=(n, len(reps)))
    A = (Q.T @ op.matrix @ Q).tocsr()
    A.sum_duplicates()
    idx = -np.ones(g.size, dtype=np.int64)
    idx[reps] = np.arange(len(reps))
    return SparseOperator(A, g, idx.reshape(g.shape), (op.prolong @ Q).tocsr(), op.kind,
                          op.boundary, op.cut, {"reduced_from": op.dimension})


def dirichlet_closed_form(grid: Grid, count: int) -> np.ndarray:
    """Lowest ``count`` eigenvalues of the 5-point Dirichlet Laplacian.

    ``(4/hx^2) sin^2(m pi hx / (2 Lx)) + (4/hy^2) sin^2(n pi hy / (2 Ly))``.
    """
    Lx, Ly = grid.xmax - grid.xmin, grid.ymax - grid.ymin
    m = np.arange(1, grid.nx + 1)
    n = np.arange(1, grid.ny + 1)
    ex = 4 / grid.hx**2 * np.sin(m * np.pi * grid.hx / (2 * Lx)) ** 2
    ey = 4 / grid.hy**2 * np.sin(n * np.pi * grid.hy / (2 * Ly)) ** 2
    vals = np.sort((ex[:, None] + ey[None, :]).ravel())
    return vals[:count]


def export_coo(op: SparseOperator, path) -> Path:
    """Write ``row col value`` lines, one per stored entry."""
    path = Path(path)
    A = op.matrix.tocoo()
    np.savetxt(path, np.column_stack([A.row, A.col, A.data]), fmt=["%d", "%d", "%.17g"])
    return path
