import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from minpart.aharonov_bohm import (
    AXIS_HALVES,
    DIAGONAL_HALVES,
    ab_loop_sign_changes,
    ab_operator,
    ab_spectrum,
    dn_half_operator,
    dn_half_spectrum,
    isospec_battery,
    kreal_nodal_check,
)
from minpart.analytic import RectGeometry
from minpart.eigensolver import dense_reference, group_levels

SQUARE = RectGeometry(math.pi, math.pi)
H = math.pi / 40


@pytest.mark.parametrize("eps", [1.0, 0.8])
def test_ab_pairs(eps):
    geom = RectGeometry.from_eps(eps)
    w = ab_spectrum(geom, H, 6).eigenvalues
    assert_allclose(w[0::2], w[1::2], rtol=1e-6)


def test_axis_halves_identical():
    vals = [dn_half_spectrum(SQUARE, p, 4, H).eigenvalues for p in AXIS_HALVES]
    for v in vals[1:]:
        assert_allclose(v, vals[0], rtol=1e-12)


def test_diagonal_halves_identical_and_close_to_axis():
    uh = dn_half_spectrum(SQUARE, "uh", 4, H).eigenvalues
    vals = [dn_half_spectrum(SQUARE, p, 4, H).eigenvalues for p in DIAGONAL_HALVES]
    for v in vals:
        assert_allclose(v, vals[0], rtol=1e-12)
    assert_allclose(vals[0], uh, rtol=0.03)


def test_diagonal_requires_square():
    with pytest.raises(ValueError):
        dn_half_operator(RectGeometry.from_eps(0.8), "--dh", H)
    with pytest.raises(ValueError):
        dn_half_operator(SQUARE, "nope", H)


def test_half_problem_dimension_is_half():
    # the ab operator lives on the full rectangle, the halves on one half
    full = ab_operator(SQUARE, H).dimension
    half = dn_half_operator(SQUARE, "uh", H).dimension
    assert 0.4 * full < half < 0.6 * full


def test_dense_oracle_for_half_problem():
    op = dn_half_operator(SQUARE, "lh", math.pi / 20)
    assert_allclose(dn_half_spectrum(SQUARE, "lh", 5, math.pi / 20).eigenvalues,
                    dense_reference(op, 5).eigenvalues, rtol=1e-10)


def test_battery_report():
    rep = isospec_battery(SQUARE, 4, [math.pi / 30, math.pi / 60])
    assert rep.grids == sorted(rep.grids, reverse=True)
    assert all(v >= 0 for d in rep.deviations.values() for v in d)
    assert rep.deviation("ab", "uh") < 0.03
    assert rep.trend_decreasing("ab", "uh")
    for h in rep.grids:
        assert rep.multiplicity_relation[h]
        assert all(m % 2 == 0 for m in rep.ab_multiplicities[h])
    for p in ("lh", "leh", "rih"):
        assert rep.deviation("uh", p) < 1e-12
    d = rep.to_dict()
    assert {"label", "h", "eigenvalues"} <= set(d["problems"][0])
    assert {"pair", "value", "trend"} <= set(d["deviations"][0])


def test_battery_needs_two_grids():
    with pytest.raises(ValueError):
        isospec_battery(SQUARE, 2, [H])


def test_ab_level_multiplicity_from_grouping():
    w = ab_spectrum(SQUARE, H, 8).eigenvalues
    assert all(m % 2 == 0 for _, m in group_levels(w)[:-1])


def test_loop_count_parity_is_radius_independent():
    op = ab_operator(SQUARE, H)
    res = ab_spectrum(SQUARE, H, 2)
    u = op.nodal_values(res.eigenvectors[:, 0])
    counts = [ab_loop_sign_changes(op, u, r) for r in (3, 5, 8)]
    counts = [c for c in counts if c is not None]
    assert counts and all(c % 2 == 1 for c in counts)


def test_trivial_gauge_loop_is_even():
    # a real eigenvector of the plain operator has an even count on any loop
    op = ab_operator(SQUARE, H)
    u = np.outer(np.cos(op.grid.x), np.cos(op.grid.y)) + 0.3 * np.outer(np.sin(op.grid.x), np.ones(op.grid.shape[1]))
    sx, sy = op.meta["hopping_x"], op.meta["hopping_y"]
    plain = op.__class__(op.matrix, op.grid, op.index_map, op.prolong, op.kind, op.boundary, op.cut,
                         {"hopping_x": np.ones_like(sx), "hopping_y": np.ones_like(sy)})
    c = ab_loop_sign_changes(plain, u, 4)
    assert c is not None and c % 2 == 0


def test_kreal_parity():
    rep = kreal_nodal_check(SQUARE, math.pi / 60)
    assert len(rep.levels) == 3
    assert rep.all_odd
    first = rep.levels[0]
    assert all(c == 1 for cs in first.ab_counts.values() for c in cs)
    assert all(c == 1 for c in first.dn_counts.values())
    assert rep.to_dict()["levels"][0]["odd"]
