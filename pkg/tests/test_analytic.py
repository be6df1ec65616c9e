import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minpart.analytic import (
    CRITICAL_EPS,
    ModeIndex,
    RectGeometry,
    courant_sharp_cases,
    eigenvalue,
    is_rational_ratio,
    lowest_with_k_domains,
    spectrum_sorted,
    squared_aspect,
    three_partition_energy,
)

SQUARE = RectGeometry(math.pi, math.pi)
CRIT = RectGeometry.from_eps(CRITICAL_EPS)


def test_square_ground_state():
    assert eigenvalue(SQUARE, ModeIndex(1, 1)) == pytest.approx(2.0, rel=1e-15)


def test_critical_pair_is_degenerate():
    assert eigenvalue(CRIT, ModeIndex(1, 3)) == pytest.approx(35 / 3, rel=1e-14)
    assert eigenvalue(CRIT, ModeIndex(2, 1)) == pytest.approx(35 / 3, rel=1e-14)


def test_square_levels():
    levels = spectrum_sorted(SQUARE, 3)
    assert [round(lv.value, 12) for lv in levels] == [2.0, 5.0, 8.0]
    assert [lv.modes for lv in levels] == [
        (ModeIndex(1, 1),),
        (ModeIndex(1, 2), ModeIndex(2, 1)),
        (ModeIndex(2, 2),),
    ]


def test_critical_third_level_is_double():
    third = spectrum_sorted(CRIT, 4)[2]
    assert third.multiplicity == 2
    assert set(third.modes) == {ModeIndex(1, 3), ModeIndex(2, 1)}


def _brute_force_levels(geom, count, nmax=12):
    vals = sorted(eigenvalue(geom, ModeIndex(m, n)) for m in range(1, nmax) for n in range(1, nmax))
    distinct = []
    for v in vals:
        if not distinct or not math.isclose(v, distinct[-1], rel_tol=1e-12):
            distinct.append(v)
    return distinct[:count]


def test_half_width_levels_against_enumeration():
    geom = RectGeometry.from_eps(0.5)
    got = [lv.value for lv in spectrum_sorted(geom, 3)]
    assert got == pytest.approx([5.0, 8.0, 13.0], rel=1e-14)
    assert got == pytest.approx(_brute_force_levels(geom, 3), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 1.0))
def test_enumeration_is_complete(eps):
    geom = RectGeometry.from_eps(eps)
    got = [lv.value for lv in spectrum_sorted(geom, 8)]
    assert got == pytest.approx(_brute_force_levels(geom, 8, nmax=20), rel=1e-12)


@pytest.mark.parametrize(
    "geom, value, modes",
    [
        (SQUARE, 10.0, {(1, 3), (3, 1)}),
        (RectGeometry.from_eps(0.5), 13.0, {(1, 3)}),
        (CRIT, 35 / 3, {(1, 3)}),
    ],
)
def test_lowest_with_three_domains(geom, value, modes):
    lv = lowest_with_k_domains(geom, 3)
    assert lv.value == pytest.approx(value, rel=1e-13)
    assert {(m.m, m.n) for m in lv.modes} == modes


def _active(geom):
    return {(r.mode.m, r.mode.n): r.active for r in courant_sharp_cases(geom)}


def test_courant_rules_at_061():
    geom = RectGeometry(math.sqrt(0.61), 1.0)
    act = _active(geom)
    assert act[(3, 2)] and act[(2, 2)] and act[(1, 2)]
    assert not act[(1, 3)]


def test_courant_rules_square_endpoint():
    act = _active(SQUARE)
    assert act[(2, 2)] and not act[(3, 2)]


def test_courant_rule_13_at_critical_endpoint():
    assert squared_aspect(CRIT) == Fraction(3, 8)
    assert _active(CRIT)[(1, 3)]
    assert is_rational_ratio(CRIT)


def _direct(r: float, m: int, n: int) -> bool:
    # inequalities written out independently of the Fraction-based classifier
    if (m, n) == (3, 2):
        return 0.6 <= r <= 0.625
    if (m, n) == (2, 2):
        return 0.6 <= r <= 1.0
    assert m == 1
    return r * (n * n - 1) <= 3


@settings(max_examples=1000, deadline=None)
@given(st.floats(1e-3, 1.0, exclude_min=False))
def test_courant_classifier_matches_inequalities(r):
    # draw a^2/b^2 away from the rule endpoints by more than float rounding
    ends = [0.6, 0.625, 1.0] + [3 / (n * n - 1) for n in range(2, 60)]
    if any(abs(r - e) < 1e-12 for e in ends):
        return
    geom = RectGeometry(math.sqrt(r), 1.0)
    for rule in courant_sharp_cases(geom):
        assert rule.active == _direct(r, rule.mode.m, rule.mode.n), (r, rule)


def test_courant_list_covers_every_active_one_n_rule():
    geom = RectGeometry(0.1, 1.0)  # r = 0.01: (1, n) active for n <= 17
    ns = [r.mode.n for r in courant_sharp_cases(geom) if r.mode.m == 1 and r.active]
    assert ns == list(range(2, 18))


@pytest.mark.parametrize(
    "eps, value, exact",
    [(0.5, 13.0, True), (CRITICAL_EPS, 35 / 3, True), (1.0, 10.0, False)],
)
def test_three_partition_energy(eps, value, exact):
    e = three_partition_energy(eps)
    assert e.value == pytest.approx(value, rel=1e-14)
    assert e.exact is exact


def test_invalid_geometry():
    with pytest.raises(ValueError):
        RectGeometry(2.0, 1.0)
    with pytest.raises(ValueError):
        RectGeometry.from_eps(1.5)
    with pytest.raises(ValueError):
        spectrum_sorted(SQUARE, 0)
