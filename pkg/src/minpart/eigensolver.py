"""Lowest eigenpairs of symmetric sparse operators.

The iterative path is ARPACK in shift-invert mode around a shift below the
spectrum, with a sparse LU factorisation supplying the inverse.  Ritz vectors
are re-orthonormalised by a small Rayleigh-Ritz step so that degenerate pairs
come back as an orthonormal block, and every residual is recomputed by an
explicit product.
"""

from __future__ import annotations

import contextlib
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .discretization import SparseOperator

__all__ = [
    "DEFAULT_SEED",
    "DEFAULT_TOL",
    "DENSE_CAP",
    "LEVEL_GAP",
    "SpectrumResult",
    "NonConvergenceError",
    "lowest_eigenpairs",
    "dense_reference",
    "group_levels",
    "operator_scale",
    "strict_convergence",
]

log = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED
DEFAULT_TOL = 1e-8
DENSE_CAP = 4000
# relative gap below which two eigenvalues count as one level
LEVEL_GAP = 1e-6


_STRICT = [False]


@contextlib.contextmanager
def strict_convergence():
    """Within this block every failed residual check raises.

    Used by the command-line front end, which runs one command per process
    and must map any unconverged solve, including those in worker threads,
    to its exit status.
    """
    old = _STRICT[0]
    _STRICT[0] = True
    try:
        yield
    finally:
        _STRICT[0] = old


class NonConvergenceError(RuntimeError):
    def __init__(self, message, partial: "SpectrumResult | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    solver: str
    iterations: int
    converged: bool = True
    tol: float = DEFAULT_TOL
    scale: float = 1.0

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def levels(self, gap: float = LEVEL_GAP) -> list[tuple[float, int]]:
        return group_levels(self.eigenvalues, gap)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "solver": self.solver,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _matrix(op):
    return op.matrix if isinstance(op, SparseOperator) else sp.csr_matrix(op)


def operator_scale(A) -> float:
    """Infinity norm, an upper bound of the spectral radius."""
    return float(abs(A).sum(axis=1).max())


def _residuals(A, vals, vecs) -> np.ndarray:
    return np.linalg.norm(A @ vecs - vecs * vals, axis=0)


def _rayleigh_ritz(A, V):
    Q, _ = np.linalg.qr(V)
    H = Q.T @ (A @ Q)
    w, Y = np.linalg.eigh((H + H.T) / 2)
    return w, Q @ Y


def _recover_missed(opinv, shift, vals, vecs, seed, tol, scale, max_rounds=None):
    """Add eigenpairs that a single-vector Krylov run skipped.

    Lanczos started from one vector only sees the projection of that vector
    onto a degenerate eigenspace, so the second member of a double eigenvalue
    may be missing from the converged set.  The shifted inverse restricted to
    the orthogonal complement of the found vectors is iterated again; any
    eigenvalue below the current largest one is merged in, and the loop
    repeats until the complement offers nothing lower.
    """
    n = vecs.shape[0]
    k = len(vals)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    rng = np.random.default_rng(seed + 1)
    for _ in range(max_rounds or k):
        Q, _ = np.linalg.qr(vecs)

        def deflated(x, Q=Q):
            x = np.asarray(x, dtype=float).reshape(-1)
            x = x - Q @ (Q.T @ x)
            y = opinv.matvec(x)
            return y - Q @ (Q.T @ y)

        op = sla.LinearOperator((n, n), matvec=deflated, dtype=float)
        try:
            mu, w = sla.eigsh(op, k=1, which="LA", v0=rng.standard_normal(n),
                              ncv=min(n - 1, 12), tol=min(tol, 1e-10), maxiter=int(10 * math.sqrt(n)) + 50)
        except sla.ArpackNoConvergence:
            break
        if mu[0] <= 0:
            break
        lam = shift + 1.0 / mu[0]
        if lam >= vals[-1] - tol * scale:
            break
        vals = np.append(vals, lam)
        vecs = np.column_stack([vecs, w[:, 0]])
        order = np.argsort(vals)[:k]
        vals, vecs = vals[order], vecs[:, order]
        log.debug("recovered a skipped eigenvalue %.12g", lam)
    return vals, vecs


def lowest_eigenpairs(op, k: int, tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED,
                      shift: float | None = None, raise_on_failure: bool = False) -> SpectrumResult:
    """The ``k`` smallest eigenvalues of a symmetric positive definite operator.

    Parameters
    ----------
    op : SparseOperator or sparse matrix
    k : int
        Number of pairs; must be smaller than the dimension.
    tol : float
        Required relative residual ``|Av - lambda v| <= tol * |A|_inf``.
    seed : int
        Seed of the ARPACK start vector; the result is deterministic.
    shift : float, optional
        Shift for the factorisation; the pairs closest to it are returned.
        Defaults to zero, which yields the lowest pairs for the positive
        definite operators assembled in this package.  Pass a lower bound of
        the spectrum for indefinite matrices.

    Returns
    -------
    SpectrumResult
        ``iterations`` counts applications of the shifted inverse.  When the
        iteration cap ``10 k sqrt(n)`` is hit the partial result is returned
        with ``converged=False`` (or raised if ``raise_on_failure``).
    """
    A = _matrix(op).tocsc()
    n = A.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n <= k + 1:
        raise ValueError(f"dimension {n} too small for k={k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = operator_scale(A)
    if shift is None:
        shift = 0.0
    try:
        lu = sla.splu((A - shift * sp.identity(n, format="csc")).tocsc(), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError:
        # singular at the shift (e.g. a zero eigenvalue): move slightly below
        shift -= 1e-6 * scale
        lu = sla.splu((A - shift * sp.identity(n, format="csc")).tocsc(), permc_spec="MMD_AT_PLUS_A")
    calls = [0]

    def solve(x):
        calls[0] += 1
        return lu.solve(np.asarray(x, dtype=float).reshape(-1))

    opinv = sla.LinearOperator((n, n), matvec=solve, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    ncv = min(n - 1, max(2 * k + 1, 12))
    maxiter = int(10 * k * math.sqrt(n))
    converged = True
    try:
        vals, vecs = sla.eigsh(A, k=k, sigma=shift, which="LM", OPinv=opinv, v0=v0,
                               ncv=ncv, maxiter=maxiter, tol=min(tol, 1e-10))
    except sla.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        converged = False
        log.warning("ARPACK stopped after the iteration cap with %d of %d pairs", len(vals), k)
    if converged and k >= 2:
        vals, vecs = _recover_missed(opinv, shift, vals, vecs, seed, tol, scale)
    if len(vals):
        vals, vecs = _rayleigh_ritz(A, vecs)
    res = _residuals(A, vals, vecs) if len(vals) else np.zeros(0)
    ok = bool(converged and len(vals) == k and np.all(res <= tol * scale))
    for j in range(vecs.shape[1] if len(vals) else 0):
        # fix the sign so that results are reproducible entry by entry
        p = np.argmax(np.abs(vecs[:, j]))
        if vecs[p, j] < 0:
            vecs[:, j] = -vecs[:, j]
    result = SpectrumResult(np.asarray(vals), np.asarray(vecs), res, "iterative", calls[0], ok, tol, scale)
    if not ok:
        log.warning("eigensolver residual check failed: max residual %.3e, scale %.3e",
                    float(res.max()) if len(res) else float("nan"), scale)
        if raise_on_failure or _STRICT[0]:
            raise NonConvergenceError("eigensolver did not reach the requested residual", result)
    return result


def dense_reference(op, k: int | None = None) -> SpectrumResult:
    """Full symmetric diagonalisation; the oracle for small problems."""
    A = _matrix(op)
    n = A.shape[0]
    if n > DENSE_CAP:
        raise ValueError(f"dense reference limited to dimension {DENSE_CAP}, got {n}")
    M = A.toarray()
    w, V = np.linalg.eigh((M + M.T) / 2)
    if k is not None:
        w, V = w[:k], V[:, :k]
    res = _residuals(A, w, V)
    return SpectrumResult(w, V, res, "dense", 1, True, DEFAULT_TOL, operator_scale(A))


def group_levels(values, gap: float = LEVEL_GAP) -> list[tuple[float, int]]:
    """Collapse sorted eigenvalues into ``(mean value, multiplicity)`` levels.

    Consecutive values whose relative distance is at most ``gap`` belong to
    the same level.
    """
    vals = np.sort(np.asarray(values, dtype=float))
    levels: list[list[float]] = []
    for v in vals:
        if levels and abs(v - levels[-1][-1]) <= gap * max(abs(levels[-1][-1]), abs(v)):
            levels[-1].append(v)
        else:
            levels.append([v])
    return [(float(np.mean(g)), len(g)) for g in levels]
