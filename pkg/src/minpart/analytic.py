"""Closed-form spectral data of the Dirichlet Laplacian on a rectangle.

The rectangle is ``]-a/2, a/2[ x ]-b/2, b/2[`` with ``0 < a <= b``.  Its
Dirichlet eigenvalues are ``pi^2 (m^2/a^2 + n^2/b^2)`` for positive integers
``m`` (half-waves along x) and ``n`` (half-waves along y); the eigenfunction of
mode ``(m, n)`` has ``m * n`` nodal domains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

__all__ = [
    "CRITICAL_EPS",
    "RATIONAL_DENOMINATOR_BOUND",
    "RectGeometry",
    "ModeIndex",
    "AnalyticLevel",
    "KDomainLevel",
    "CourantRule",
    "ThreePartitionEnergy",
    "squared_aspect",
    "is_rational_ratio",
    "eigenvalue",
    "spectrum_sorted",
    "lowest_with_k_domains",
    "courant_sharp_cases",
    "three_partition_energy",
]

# a/b at which lambda_{1,3} and lambda_{2,1} coincide
CRITICAL_EPS = math.sqrt(3.0 / 8.0)
RATIONAL_DENOMINATOR_BOUND = 10**6
# relative distance to p/q below which a float ratio is taken to *be* p/q
_RATIONAL_SNAP = 1e-14
_LEVEL_RTOL = 1e-12


@dataclass(frozen=True)
class RectGeometry:
    """Rectangle ``]-a/2, a/2[ x ]-b/2, b/2[`` with ``0 < a <= b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("side lengths must be finite")
        if not 0 < self.a <= self.b:
            raise ValueError(f"need 0 < a <= b, got a={self.a}, b={self.b}")

    @classmethod
    def from_eps(cls, eps: float) -> "RectGeometry":
        """Rectangle with ``a = pi * eps`` and ``b = pi``."""
        if not 0 < eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {eps}")
        return cls(math.pi * eps, math.pi)

    @property
    def eps(self) -> float:
        return self.a / self.b

    @property
    def is_square(self) -> bool:
        return math.isclose(self.a, self.b, rel_tol=1e-12)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (-self.a / 2, self.a / 2, -self.b / 2, self.b / 2)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "eps": self.eps}


@dataclass(frozen=True, order=True)
class ModeIndex:
    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise ValueError(f"mode indices must be positive integers, got ({self.m}, {self.n})")

    def as_list(self) -> list[int]:
        return [self.m, self.n]


@dataclass(frozen=True)
class AnalyticLevel:
    """One distinct eigenvalue together with every mode that realises it."""

    value: float
    modes: tuple[ModeIndex, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.modes)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "modes": [m.as_list() for m in self.modes],
            "multiplicity": self.multiplicity,
        }


@dataclass(frozen=True)
class KDomainLevel:
    value: float
    modes: tuple[ModeIndex, ...]
    rational_ratio: bool


@dataclass(frozen=True)
class CourantRule:
    mode: ModeIndex
    lower: Fraction
    upper: Fraction
    active: bool

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.as_list(),
            "interval": [str(self.lower), str(self.upper)],
            "active": self.active,
        }


@dataclass(frozen=True)
class ThreePartitionEnergy:
    value: float
    exact: bool
    note: str = field(default="")


def _snap_rational(r: float) -> Fraction | None:
    """Return p/q (q <= 10**6) if ``r`` equals it to rounding, else None."""
    if r == 0:
        return Fraction(0)
    f = Fraction(r).limit_denominator(RATIONAL_DENOMINATOR_BOUND)
    if abs(float(f) - r) <= _RATIONAL_SNAP * abs(r):
        return f
    return None


def squared_aspect(geom: RectGeometry) -> Fraction:
    """``a^2 / b^2`` as an exact fraction.

    Ratios that agree with a fraction of denominator at most 10**6 up to
    rounding are snapped to it, so that e.g. ``a = pi*sqrt(3/8), b = pi``
    yields exactly 3/8.
    """
    exact = Fraction(geom.a) ** 2 / Fraction(geom.b) ** 2
    snapped = _snap_rational(float(exact))
    return snapped if snapped is not None else exact


def is_rational_ratio(geom: RectGeometry) -> bool:
    return _snap_rational((geom.a / geom.b) ** 2) is not None


def eigenvalue(geom: RectGeometry, mode: ModeIndex) -> float:
    return math.pi**2 * (mode.m**2 / geom.a**2 + mode.n**2 / geom.b**2)


def _modes_below(geom: RectGeometry, cutoff: float) -> list[tuple[float, ModeIndex]]:
    out = []
    m_max = int(geom.a * math.sqrt(cutoff) / math.pi) + 1
    for m in range(1, m_max + 1):
        rest = cutoff / math.pi**2 - m**2 / geom.a**2
        if rest <= 0:
            break
        n_max = int(geom.b * math.sqrt(rest)) + 1
        for n in range(1, n_max + 1):
            mode = ModeIndex(m, n)
            lam = eigenvalue(geom, mode)
            if lam <= cutoff:
                out.append((lam, mode))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def _group(values: list[tuple[float, ModeIndex]]) -> list[AnalyticLevel]:
    levels: list[AnalyticLevel] = []
    current: list[tuple[float, ModeIndex]] = []
    for lam, mode in values:
        if current and not math.isclose(lam, current[0][0], rel_tol=_LEVEL_RTOL):
            levels.append(AnalyticLevel(current[0][0], tuple(sorted(m for _, m in current))))
            current = []
        current.append((lam, mode))
    if current:
        levels.append(AnalyticLevel(current[0][0], tuple(sorted(m for _, m in current))))
    return levels


def spectrum_sorted(geom: RectGeometry, count: int) -> list[AnalyticLevel]:
    """First ``count`` distinct eigenvalues in ascending order.

    Modes whose eigenvalues agree to a relative tolerance of 1e-12 are grouped
    into one level.  The enumeration is complete: every mode below the final
    cutoff is visited, so no level can be skipped.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cutoff = eigenvalue(geom, ModeIndex(1, 1)) * 2
    while True:
        levels = _group(_modes_below(geom, cutoff))
        # the last group might still be missing partners just above the cutoff
        if len(levels) > count:
            return levels[:count]
        cutoff *= 2


def lowest_with_k_domains(geom: RectGeometry, k: int) -> KDomainLevel:
    """Smallest eigenvalue whose eigenfunction ``u_{m,n}`` has ``k = m*n`` domains.

    Minimises over all factor pairs of ``k``; ties (the square) return every
    minimising pair.  ``rational_ratio`` flags rational ``a^2/b^2``, where the
    one-mode-per-eigenvalue picture behind this formula can break down.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pairs = [ModeIndex(m, k // m) for m in range(1, k + 1) if k % m == 0]
    vals = [(eigenvalue(geom, p), p) for p in pairs]
    best = min(v for v, _ in vals)
    modes = tuple(sorted(p for v, p in vals if math.isclose(v, best, rel_tol=_LEVEL_RTOL)))
    return KDomainLevel(best, modes, is_rational_ratio(geom))


def courant_sharp_cases(geom: RectGeometry) -> list[CourantRule]:
    """The known Courant-sharp rules and whether each applies to ``geom``.

    Rules: ``(3,2)`` for ``3/5 <= a^2/b^2 <= 5/8``, ``(2,2)`` for
    ``3/5 <= a^2/b^2 <= 1`` and ``(1,n)`` for ``a^2/b^2 <= 3/(n^2-1)``.
    The ``(1,n)`` rules are listed for ``n = 2 .. max(3, n_max)`` where
    ``n_max`` is the largest ``n`` the current ratio can satisfy.  For rational
    ratios the list is not known to be complete.
    """
    r = squared_aspect(geom)
    rules = [
        (ModeIndex(3, 2), Fraction(3, 5), Fraction(5, 8)),
        (ModeIndex(2, 2), Fraction(3, 5), Fraction(1)),
    ]
    # largest n with r <= 3/(n^2 - 1)  <=>  n^2 <= 1 + 3/r
    bound = 1 + 3 / r
    n_max = math.isqrt(bound.numerator // bound.denominator)
    while Fraction((n_max + 1) ** 2) <= bound:
        n_max += 1
    for n in range(2, max(3, n_max) + 1):
        rules.append((ModeIndex(1, n), Fraction(0), Fraction(3, n * n - 1)))
    return [CourantRule(mode, lo, hi, lo <= r <= hi) for mode, lo, hi in rules]


def three_partition_energy(eps: float) -> ThreePartitionEnergy:
    """Minimal 3-partition energy of ``R_{pi eps, pi}`` where it is known.

    For ``eps <= sqrt(3/8)`` the minimal partition is nodal and its energy is
    ``9 + 1/eps^2``.  Above the threshold the same number is only a strict upper
    bound; the actual value has to be estimated numerically.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    value = 9.0 + 1.0 / eps**2
    eps_sq = _snap_rational(eps * eps)
    eps_sq = eps_sq if eps_sq is not None else Fraction(eps) ** 2
    if eps_sq <= Fraction(3, 8):
        return ThreePartitionEnergy(value, True, "nodal: third eigenvalue is Courant-sharp")
    return ThreePartitionEnergy(value, False, "strict upper bound; minimal partition is not nodal")
