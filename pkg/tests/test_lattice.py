"""Lattice enumeration, the two ball routes, and domain reduction."""

import math
from fractions import Fraction

import numpy as np
import pytest

from perplab.errors import BudgetExceeded
from perplab.geometry import MoebiusInt, Point, dist
from perplab.lattice import (
    GAMMA2,
    PSL2Z,
    bfs_ball,
    enumerate_ball,
    fd_copies,
    get_group,
    reduce_fd,
    reduce_points,
    scan_pairs,
)

BASE = (0, 2)


def test_ball_counts_at_reference_radius():
    assert len(enumerate_ball(PSL2Z, BASE, 6.0)) == 1214
    assert len(enumerate_ball(GAMMA2, BASE, 6.0)) == 211


def test_ball_contains_identity_and_is_sorted():
    els = enumerate_ball(PSL2Z, BASE, 3.0)
    assert MoebiusInt.identity() in els
    keys = [g.key() for g in els]
    assert keys == sorted(keys)


def test_ball_radius_criterion():
    x0 = Point(0.0, 2.0)
    for group in (PSL2Z, GAMMA2):
        for g in enumerate_ball(group, BASE, 5.0):
            assert dist(x0, g.to_float()(x0)) <= 5.0 + 1e-9


def test_dual_route_balls_agree():
    for group in (PSL2Z, GAMMA2):
        for t in (2.0, 4.0, 5.0):
            a = {g.key() for g in enumerate_ball(group, BASE, t)}
            b = {g.key() for g in bfs_ball(group, BASE, t)}
            assert a == b


def test_gamma2_is_the_even_sublattice():
    # subgroup of the full lattice, picked out by parity conditions
    big = {g.key() for g in enumerate_ball(PSL2Z, BASE, 5.0)}
    for g in enumerate_ball(GAMMA2, BASE, 5.0):
        a, b, c, d = g.key()
        assert g.key() in big
        assert b % 2 == 0 and c % 2 == 0
        assert a % 2 == 1 and d % 2 == 1


def test_scan_pairs_asymmetric_basepoints():
    # d(x, gamma y) <= t criterion, checked directly
    src, tgt = (0, 2), (Fraction(1, 2), 1)
    x0, y0 = Point(0, 2), Point(0.5, 1.0)
    els = scan_pairs(PSL2Z, src, tgt, 4.0)
    assert len(els) > 0
    for g in els:
        assert dist(x0, g.to_float()(y0)) <= 4.0 + 1e-9
    # completeness against a brute-force scan over a bigger ball
    ball = enumerate_ball(PSL2Z, src, 8.0)
    brute = {g.key() for g in ball if dist(x0, g.to_float()(y0)) <= 4.0 + 1e-12}
    assert brute == {g.key() for g in els}


def test_budget_overflow_raises():
    with pytest.raises(BudgetExceeded):
        enumerate_ball(PSL2Z, BASE, 12.0, budget=100)


def test_get_group():
    assert get_group("PSL2Z") is PSL2Z
    assert get_group("GAMMA2") is GAMMA2
    with pytest.raises(KeyError):
        get_group("nope")


def test_reduce_fd_lands_in_domain():
    rng = np.random.default_rng(83)
    gamma2_copies = set(fd_copies(GAMMA2))
    for group in (PSL2Z, GAMMA2):
        for _ in range(300):
            z = Point(rng.uniform(-6, 6), math.exp(rng.uniform(math.log(0.05), math.log(40.0))))
            zr, g = reduce_fd(group, z)
            if group is PSL2Z:
                assert abs(zr.x) <= 0.5 + 1e-9
                assert zr.x * zr.x + zr.y * zr.y >= 1.0 - 1e-9
            else:
                # the domain is the union of the six coset copies of the
                # standard domain, so the copy carrying the point is a rep
                _, h = reduce_fd(PSL2Z, zr)
                assert h in gamma2_copies
            # the returned element carries the reduced point back
            assert dist(g.to_float()(zr), z) < 1e-9
            # reducing a reduced point is the identity
            zr2, g2 = reduce_fd(group, zr)
            assert dist(zr, zr2) < 1e-9


def test_reduce_points_matches_scalar_route():
    rng = np.random.default_rng(89)
    n = 400
    x = rng.uniform(-6, 6, n)
    y = np.exp(rng.uniform(math.log(0.05), math.log(40.0), n))
    for group in (PSL2Z, GAMMA2):
        xr, yr, ph = reduce_points(group, x.copy(), y.copy())
        for i in range(0, n, 7):
            zr, g = reduce_fd(group, Point(x[i], y[i]))
            assert xr[i] == pytest.approx(zr.x, abs=1e-9)
            assert yr[i] == pytest.approx(zr.y, abs=1e-9)


def test_reduce_points_phase_rotates_tangents():
    # phase is the derivative argument of the reducing map, so reduced
    # angle = angle + phase matches transporting the tangent directly
    from perplab.geometry import UnitTangent

    rng = np.random.default_rng(97)
    n = 200
    x = rng.uniform(-6, 6, n)
    y = np.exp(rng.uniform(math.log(0.1), math.log(20.0), n))
    ang = rng.uniform(-math.pi, math.pi, n)
    xr, yr, ph = reduce_points(PSL2Z, x.copy(), y.copy())
    for i in range(0, n, 11):
        _, g = reduce_fd(PSL2Z, Point(x[i], y[i]))
        moved = g.inverse().to_float()(UnitTangent(Point(x[i], y[i]), ang[i]))
        da = (ang[i] + ph[i] - moved.angle) % (2 * math.pi)
        assert min(da, 2 * math.pi - da) < 1e-9


def test_fd_copies_tile_without_overlap():
    rng = np.random.default_rng(101)
    assert len(fd_copies(PSL2Z)) == 1
    assert len(fd_copies(GAMMA2)) == 6
    # reduced points always land in the base copy, never strictly inside
    # a translate by a nontrivial element
    for _ in range(100):
        z = Point(rng.uniform(-0.49, 0.49), rng.uniform(1.01, 3.0))
        zr, g = reduce_fd(PSL2Z, z)
        assert g == MoebiusInt.identity()
        assert dist(z, zr) < 1e-12
