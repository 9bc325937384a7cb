"""Exact and property checks for the upper half-plane layer."""

import math
from fractions import Fraction

import numpy as np
import pytest

from perplab.geometry import (
    INFINITY,
    BoundaryPoint,
    HopfCoords,
    MoebiusInt,
    Point,
    UnitTangent,
    angle_toward,
    busemann,
    closest_point_on_line,
    direction_at,
    dist,
    flip,
    flow,
    geodesic_endpoints,
    hopf_coords,
    poisson_kernel,
    standardize_line,
    vector_from_hopf,
    visual_dist,
)
from perplab.measures import hopf_jacobian

T = MoebiusInt(1, 1, 0, 1)
S = MoebiusInt(0, -1, 1, 0)


def rand_point(rng):
    return Point(rng.uniform(-3.0, 3.0), math.exp(rng.uniform(math.log(0.05), math.log(20.0))))


def rand_word(rng, n=6):
    g = MoebiusInt.identity()
    for _ in range(rng.integers(1, n + 1)):
        g = g @ (T if rng.random() < 0.5 else S)
    return g


def test_dist_vertical_closed_form():
    # along a vertical line the distance is the log ratio of heights
    assert dist(Point(0, 1), Point(0, math.e)) == pytest.approx(1.0, abs=1e-15)
    assert dist(Point(2, 0.5), Point(2, 8.0)) == pytest.approx(math.log(16.0), abs=1e-14)


def test_dist_two_routes():
    # asinh formula vs the acosh of the chordal expression
    p, q = Point(-1, 1), Point(1, 1)
    d1 = dist(p, q)
    cosh_d = 1.0 + ((q.x - p.x) ** 2 + (q.y - p.y) ** 2) / (2.0 * p.y * q.y)
    assert d1 == pytest.approx(math.acosh(cosh_d), rel=1e-15)
    assert d1 == pytest.approx(2.0 * math.asinh(1.0), rel=1e-15)


def test_dist_symmetry_triangle_isometry():
    rng = np.random.default_rng(101)
    for _ in range(300):
        p, q, r = rand_point(rng), rand_point(rng), rand_point(rng)
        dpq = dist(p, q)
        assert dist(q, p) == pytest.approx(dpq, abs=1e-13)
        assert dist(p, r) <= dpq + dist(q, r) + 1e-12
        gf = rand_word(rng).to_float()
        assert dist(gf(p), gf(q)) == pytest.approx(dpq, rel=1e-11, abs=1e-12)


def test_dist_small_separation_stability():
    # asinh route keeps relative accuracy where cosh would cancel
    p = Point(0.0, 1.0)
    q = Point(1e-9, 1.0)
    assert dist(p, q) == pytest.approx(1e-9, rel=1e-9)


def test_busemann_vertical_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        p, q = rand_point(rng), rand_point(rng)
        assert busemann(INFINITY, p, q) == pytest.approx(math.log(q.y / p.y), abs=1e-13)
    # toward the origin the kernel is y/|z|^2
    assert busemann(BoundaryPoint(0.0), Point(0, 1), Point(0, 4)) == pytest.approx(
        math.log(0.25), abs=1e-14
    )


def test_busemann_cocycle_and_lipschitz():
    rng = np.random.default_rng(11)
    for _ in range(300):
        p, q, r = rand_point(rng), rand_point(rng), rand_point(rng)
        xi = BoundaryPoint(rng.uniform(-5, 5)) if rng.random() < 0.75 else INFINITY
        bpq = busemann(xi, p, q)
        assert busemann(xi, q, p) == pytest.approx(-bpq, abs=1e-12)
        assert busemann(xi, p, r) == pytest.approx(bpq + busemann(xi, q, r), abs=1e-12)
        assert abs(bpq) <= dist(p, q) * (1 + 1e-12) + 1e-12


def test_busemann_matches_poisson_kernel():
    rng = np.random.default_rng(13)
    for _ in range(100):
        p, q = rand_point(rng), rand_point(rng)
        xi = BoundaryPoint(rng.uniform(-5, 5))
        direct = busemann(xi, p, q)
        via_kernel = math.log(poisson_kernel(q, xi) / poisson_kernel(p, xi))
        assert direct == pytest.approx(via_kernel, abs=1e-12)


def test_visual_dist_sandwich_and_invariance():
    rng = np.random.default_rng(17)
    for _ in range(200):
        p = rand_point(rng)
        xi = BoundaryPoint(rng.uniform(-5, 5))
        eta = BoundaryPoint(rng.uniform(-5, 5))
        if xi == eta:
            continue
        vd = visual_dist(p, xi, eta)
        assert visual_dist(p, eta, xi) == pytest.approx(vd, rel=1e-12)
        d = dist(p, closest_point_on_line(xi, eta, p))
        assert math.exp(-d) * (1 - 1e-10) <= vd <= 2 * math.exp(-d) * (1 + 1e-10)
        gf = rand_word(rng).to_float()
        assert visual_dist(gf(p), gf(xi), gf(eta)) == pytest.approx(vd, rel=1e-9)


def test_visual_dist_on_line_is_one():
    # 1/cosh of the distance to the line, so exactly 1 on the line
    assert visual_dist(Point(0, 5), BoundaryPoint(0.0), INFINITY) == pytest.approx(1.0, abs=1e-15)


def test_flow_unit_speed_and_additivity():
    rng = np.random.default_rng(19)
    for _ in range(200):
        v = UnitTangent(rand_point(rng), rng.uniform(-math.pi, math.pi))
        s, t = rng.uniform(-4, 4), rng.uniform(-4, 4)
        assert dist(v.base, flow(v, s).base) == pytest.approx(abs(s), rel=1e-11, abs=1e-12)
        w1, w2 = flow(flow(v, s), t), flow(v, s + t)
        assert dist(w1.base, w2.base) < 1e-10
        da = (w1.angle - w2.angle) % (2 * math.pi)
        assert min(da, 2 * math.pi - da) < 1e-10


def test_flow_preserves_endpoints():
    rng = np.random.default_rng(23)
    for _ in range(100):
        v = UnitTangent(rand_point(rng), rng.uniform(-math.pi, math.pi))
        b0, f0 = geodesic_endpoints(v)
        b1, f1 = geodesic_endpoints(flow(v, rng.uniform(-3, 3)))
        for a, b in ((b0, b1), (f0, f1)):
            if a.is_infinity or b.is_infinity:
                assert a.is_infinity and b.is_infinity
            else:
                assert a.as_float() == pytest.approx(b.as_float(), rel=1e-8, abs=1e-8)


def test_flip_reverses_the_flow():
    rng = np.random.default_rng(29)
    for _ in range(100):
        v = UnitTangent(rand_point(rng), rng.uniform(-math.pi, math.pi))
        s = rng.uniform(-3, 3)
        assert dist(flow(flip(v), s).base, flow(v, -s).base) < 1e-11
        bwd, fwd = geodesic_endpoints(v)
        fb, ff = geodesic_endpoints(flip(v))
        assert (fb.is_infinity and fwd.is_infinity) or fb.as_float() == pytest.approx(
            fwd.as_float(), abs=1e-9
        )
        assert (ff.is_infinity and bwd.is_infinity) or ff.as_float() == pytest.approx(
            bwd.as_float(), abs=1e-9
        )


def test_direction_at_reaches_the_endpoint():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p = rand_point(rng)
        eta = BoundaryPoint(rng.uniform(-5, 5)) if rng.random() < 0.8 else INFINITY
        v = UnitTangent(p, direction_at(p, eta))
        _, fwd = geodesic_endpoints(v)
        if eta.is_infinity:
            assert fwd.is_infinity
        else:
            assert fwd.as_float() == pytest.approx(eta.as_float(), rel=1e-9, abs=1e-9)


def test_angle_toward_agrees_with_flow():
    rng = np.random.default_rng(37)
    for _ in range(100):
        p, q = rand_point(rng), rand_point(rng)
        d = dist(p, q)
        reached = flow(UnitTangent(p, angle_toward(p, q)), d).base
        assert dist(reached, q) < 1e-9 * (1 + d)


def test_closest_point_on_line_minimizes():
    rng = np.random.default_rng(41)
    for _ in range(50):
        xi = BoundaryPoint(rng.uniform(-5, 5))
        eta = BoundaryPoint(rng.uniform(-5, 5))
        if xi == eta:
            continue
        p = rand_point(rng)
        foot = closest_point_on_line(xi, eta, p)
        d0 = dist(p, foot)
        g = standardize_line(xi, eta)
        w = g(foot)
        # foot lies on the line (the standardized image is vertical)
        assert abs(w.x) < 1e-9 * (1 + abs(w.y))
        for ds in (-0.2, -0.01, 0.01, 0.2):
            other = g.inverse()(Point(0.0, w.y * math.exp(ds)))
            assert dist(p, other) >= d0 - 1e-12


def test_standardize_line_sends_endpoints():
    rng = np.random.default_rng(43)
    for _ in range(100):
        xi = BoundaryPoint(rng.uniform(-5, 5))
        eta = BoundaryPoint(rng.uniform(-5, 5)) if rng.random() < 0.8 else INFINITY
        if xi == eta:
            continue
        g = standardize_line(xi, eta)
        img_xi = g(xi)
        img_eta = g(eta)
        assert not img_xi.is_infinity and abs(img_xi.as_float()) < 1e-10
        assert img_eta.is_infinity


def test_hopf_round_trip():
    rng = np.random.default_rng(47)
    base = Point(0.3, 1.7)
    for _ in range(200):
        v = UnitTangent(rand_point(rng), rng.uniform(-math.pi, math.pi))
        h = hopf_coords(v, base)
        w = vector_from_hopf(h)
        assert dist(v.base, w.base) < 1e-10
        da = (v.angle - w.angle) % (2 * math.pi)
        assert min(da, 2 * math.pi - da) < 1e-10


def test_hopf_jacobian_finite_difference():
    rng = np.random.default_rng(53)
    base = Point(0.0, 1.0)
    h = 1e-6
    for _ in range(40):
        v = UnitTangent(rand_point(rng), rng.uniform(-math.pi, math.pi))
        bwd, fwd = geodesic_endpoints(v)
        if bwd.is_infinity or fwd.is_infinity:
            continue

        def chart(x, y, th):
            hc = hopf_coords(UnitTangent(Point(x, y), th), base)
            return np.array([hc.v_minus.as_float(), hc.v_plus.as_float(), hc.s])

        J = np.zeros((3, 3))
        args = [v.base.x, v.base.y, v.angle]
        for j in range(3):
            hi, lo = list(args), list(args)
            hi[j] += h
            lo[j] -= h
            J[:, j] = (chart(*hi) - chart(*lo)) / (2 * h)
        det = abs(np.linalg.det(J))
        assert det == pytest.approx(hopf_jacobian(v), rel=5e-5)


def test_moebius_int_exactness():
    with pytest.raises(ValueError):
        MoebiusInt(2, 0, 0, 1)
    # sign canonicalization identifies M with -M
    assert MoebiusInt(-1, 0, 0, -1) == MoebiusInt.identity()
    g = T @ S @ T @ T @ S
    assert g @ g.inverse() == MoebiusInt.identity()
    # exact rational boundary transport
    b = g(BoundaryPoint(Fraction(3, 7)))
    assert isinstance(b.value, Fraction)
    gf = g.to_float()
    assert float(b.value) == pytest.approx(gf(BoundaryPoint(3 / 7)).as_float(), rel=1e-12)


def test_moebius_word_agrees_with_float_composition():
    rng = np.random.default_rng(59)
    for _ in range(100):
        g1, g2 = rand_word(rng), rand_word(rng)
        p = rand_point(rng)
        lhs = (g1 @ g2).to_float()(p)
        rhs = g1.to_float()(g2.to_float()(p))
        assert dist(lhs, rhs) < 1e-10
