"""Perpendicular census: counts, lengths, and column geometry."""

import math

import numpy as np
import pytest

from perplab.census import census_table
from perplab.convex import horoball, point_set, disk
from perplab.errors import BudgetExceeded, UnsupportedSet
from perplab.geometry import INFINITY, MoebiusInt, Point, UnitTangent, dist, flow
from perplab.lattice import GAMMA2, PSL2Z, enumerate_ball


def phi_sum(n):
    phi = list(range(n + 1))
    for i in range(2, n + 1):
        if phi[i] == i:
            for j in range(i, n + 1, i):
                phi[j] -= phi[j] // i
    return sum(phi[2 : n + 1])


def test_loop_counts_at_reference_radii():
    tab = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 6.0)
    assert len(tab) == 1213
    assert tab.count() == 1213.0
    tab2 = census_table(GAMMA2, point_set(0, 2), point_set(0, 2), 6.0)
    assert len(tab2) == 210


def test_loops_match_ball_elements():
    # one loop per nontrivial element, lengths equal orbit distances
    x0 = Point(0.0, 2.0)
    tab = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 4.0)
    ball = enumerate_ball(PSL2Z, (0, 2), 4.0)
    by_len = {}
    for g in ball:
        if g == MoebiusInt.identity():
            continue
        by_len[g.key()] = dist(x0, g.to_float()(x0))
    assert len(tab) == len(by_len)
    for i in range(len(tab)):
        rec = tab.record(i)
        assert rec.rep.key() in by_len
        assert rec.length == pytest.approx(by_len[rec.rep.key()], abs=1e-10)


def test_cusp_counts_are_totient_sums():
    H = horoball(INFINITY, 1.0)
    for t, cmax in ((5.0, 12), (2 * math.log(50), 50)):
        tab = census_table(PSL2Z, H, H, t)
        assert len(tab) == phi_sum(cmax)


def test_cusp_lengths_are_exact_logs():
    H = horoball(INFINITY, 1.0)
    tab = census_table(PSL2Z, H, H, 2 * math.log(40))
    # each translate at denominator c sits at distance exactly 2 log c
    err = np.abs(tab.length - 2.0 * np.log(tab.rep_c.astype(float)))
    assert float(err.max()) == 0.0


def test_gamma2_cusp_count():
    H = horoball(INFINITY, 1.0)
    tab = census_table(GAMMA2, H, H, 6.0)
    assert len(tab) == 90


def test_boundary_shell_included():
    # translates at length exactly t survive rounding of exp(t)
    H = horoball(INFINITY, 1.0)
    tab = census_table(PSL2Z, H, H, 2 * math.log(1000))
    assert int((tab.rep_c == 1000).sum()) > 0


def test_tangent_columns_connect():
    tab = census_table(PSL2Z, horoball(INFINITY, 1.0), point_set(0, 2), 5.0)
    assert len(tab) == 145
    for i in range(0, len(tab), 13):
        rec = tab.record(i)
        reached = flow(rec.u, rec.length)
        assert dist(reached.base, rec.v.base) < 1e-8
        da = (reached.angle - rec.v.angle) % (2 * math.pi)
        assert min(da, 2 * math.pi - da) < 1e-8


def test_census_weight_column_starts_at_one():
    tab = census_table(PSL2Z, point_set(0, 2), disk(0, 2, 0.25), 4.0)
    assert np.all(tab.weight == 1.0)
    assert np.all(tab.multiplicity > 0)


def test_census_is_sorted_and_deterministic():
    a = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 5.0)
    b = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 5.0)
    keys = list(zip(a.rep_a, a.rep_b, a.rep_c, a.rep_d))
    assert keys == sorted(keys)
    for col in ("rep_a", "length", "ux", "vangle", "multiplicity"):
        assert np.array_equal(getattr(a, col), getattr(b, col))


def test_census_budget_overflow():
    with pytest.raises(BudgetExceeded):
        census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 10.0, budget=50)


def test_unsupported_base_set():
    from perplab.convex import geodesic

    with pytest.raises(UnsupportedSet):
        census_table(PSL2Z, geodesic(0.0, INFINITY), point_set(0, 2), 4.0)


def test_elliptic_center_multiplicity():
    # loops at the order-2 fixed point: both stabilizers fold the
    # element count down by their order
    tab = census_table(PSL2Z, point_set(0, 1), point_set(0, 1), 5.0)
    assert len(tab) == 110
    x0 = Point(0.0, 1.0)
    ball = enumerate_ball(PSL2Z, (0, 1), 5.0)
    n_nontrivial = sum(
        1 for g in ball if dist(x0, g.to_float()(x0)) > 1e-9
    )
    assert tab.count() * 4 == pytest.approx(n_nontrivial, abs=1e-9)
