import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from minpart.analytic import CRITICAL_EPS
from minpart.nodal_family import (
    FamilyCoeffs,
    boundary_zeros,
    count_nodal_domains,
    eigenvalue_of_family,
    interior_critical_scan,
    nodal_contours,
    phi,
    phi_laplacian,
    psi,
    sign_labels,
)

EPS = CRITICAL_EPS
HALF_A = math.pi * EPS / 2


def test_phi_vanishes_on_horizontal_lines():
    c = FamilyCoeffs(1, 0)
    assert abs(phi(c, EPS, 0.0, math.pi / 6)) < 1e-15
    xs = np.linspace(-HALF_A * 0.99, HALF_A * 0.99, 11)
    assert_allclose(psi(c, EPS, xs, np.full_like(xs, math.pi / 6)), 0, atol=1e-14)


def test_psi_zero_at_left_midpoint():
    assert abs(psi(FamilyCoeffs(2, 1), EPS, -HALF_A, 0.0)) < 1e-14


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_family_solves_eigenvalue_equation(al, be, s, t):
    if abs(al) + abs(be) < 1e-3:
        return
    c = FamilyCoeffs(al, be)
    x = (2 * s - 1) * HALF_A
    y = (2 * t - 1) * math.pi / 2
    lam = eigenvalue_of_family(EPS)
    assert lam == pytest.approx(35 / 3)
    scale = abs(al) + abs(be)
    assert phi_laplacian(c, EPS, x, y) == pytest.approx(lam * phi(c, EPS, x, y), abs=1e-10 * scale)
    # independent route: centred second differences of phi itself
    d = 1e-3
    fd = -(phi(c, EPS, x + d, y) + phi(c, EPS, x - d, y) + phi(c, EPS, x, y + d) + phi(c, EPS, x, y - d)
           - 4 * phi(c, EPS, x, y)) / d**2
    assert fd == pytest.approx(lam * phi(c, EPS, x, y), abs=1e-4 * scale)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 10))
def test_nodal_count_is_projective(al, be, k):
    if abs(al) + abs(be) < 1e-2:
        return
    a = count_nodal_domains(FamilyCoeffs(al, be), EPS, 64).domain_count
    b = count_nodal_domains(FamilyCoeffs(k * al, k * be), EPS, 64).domain_count
    assert a == b


def test_horizontal_member_has_three_domains_and_flat_lines():
    c = FamilyCoeffs(1, 0)
    lab = count_nodal_domains(c, EPS, 256)
    assert lab.domain_count == 3 and lab.stable
    ns = nodal_contours(c, EPS, 256)
    h = math.pi / 256
    ys = sorted(float(np.mean(p[:, 1])) for p in ns.polylines)
    assert len(ys) == 2
    assert_allclose(ys, [-math.pi / 6, math.pi / 6], atol=h)
    assert not ns.interior_critical_points


def test_vertical_member():
    c = FamilyCoeffs(0, 1)
    ns = nodal_contours(c, EPS, 256)
    assert len(ns.polylines) == 1
    assert_allclose(ns.polylines[0][:, 0], 0.0, atol=math.pi / 256)
    assert count_nodal_domains(c, EPS, 256).domain_count == 2


@pytest.mark.parametrize("al, be, mu", [(1, 0, 3), (0, 1, 2), (2, 1, 3), (5, 1, 3), (1, 2, 2), (2, -1, 3)])
def test_domain_counts_stable_under_refinement(al, be, mu):
    lab = count_nodal_domains(FamilyCoeffs(al, be), EPS, 256)
    assert lab.domain_count == mu
    assert lab.refined_count == mu and lab.stable


def test_mirror_symmetry_of_counts():
    # phi(alpha, beta) and phi(alpha, -beta) differ by x -> -x
    for al, be in [(2, 1), (1, 3), (0.5, 0.2)]:
        assert (count_nodal_domains(FamilyCoeffs(al, be), EPS, 128).domain_count
                == count_nodal_domains(FamilyCoeffs(al, -be), EPS, 128).domain_count)


@pytest.mark.parametrize("al, be", [(5, 1), (2, 1), (1, 2), (0, 1), (1, 0)])
def test_no_interior_critical_point(al, be):
    scan = interior_critical_scan(FamilyCoeffs(al, be), EPS)
    assert scan.interior == []
    assert scan.gradient_bound > 0
    assert scan.samples > 0


def test_boundary_critical_point_for_two_one():
    pts = [p for p in boundary_zeros(FamilyCoeffs(2, 1), EPS) if p.valence == 2]
    assert len(pts) == 1
    assert pts[0].x == pytest.approx(-HALF_A, abs=1e-9)
    assert pts[0].y == pytest.approx(0.0, abs=math.pi / 256)
    ns = nodal_contours(FamilyCoeffs(2, 1), EPS, 256)
    assert len(ns.boundary_critical_points) == 1


def test_boundary_critical_point_for_two_minus_one():
    pts = [p for p in boundary_zeros(FamilyCoeffs(2, -1), EPS) if p.valence == 2]
    assert [(round(p.x, 9), round(p.y, 6)) for p in pts] == [(round(HALF_A, 9), 0.0)]


def test_zero_margin_scan_keeps_boundary_point_only():
    # alpha = 2 beta puts the double zero of psi at (a/2, 0) on the boundary;
    # no interior candidate may survive even with a zero margin
    scan = interior_critical_scan(FamilyCoeffs(2, -1), EPS, margin=0.0)
    assert scan.interior == []
    assert [(round(p.x, 9), p.valence) for p in scan.boundary] == [(round(HALF_A, 9), 2)]


def test_sign_labels_band():
    v = np.array([[1.0, -1.0], [1.0, 1e-12]])
    lab, n = sign_labels(v)
    assert n == 2
    assert lab[1, 1] == 0


def test_rejects_points_outside_rectangle():
    with pytest.raises(ValueError):
        phi(FamilyCoeffs(1, 0), EPS, 2.0, 0.0)
    with pytest.raises(ValueError):
        FamilyCoeffs(0, 0)
    with pytest.raises(ValueError):
        count_nodal_domains(FamilyCoeffs(1, 0), EPS, 16)
