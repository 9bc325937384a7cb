"""Densities, total masses, and skinning totals."""

import math
import random

import pytest

from perplab.convex import disk, geodesic, horoball, point_set
from perplab.errors import QuadratureDiverged, UnsupportedSet
from perplab.geometry import (
    INFINITY,
    BoundaryPoint,
    Point,
    UnitTangent,
    busemann,
    geodesic_endpoints,
)
from perplab.lattice import GAMMA2, PSL2Z
from perplab.measures import (
    MassQuadrature,
    MeasureContext,
    bm_integrate,
    bm_line_density,
    bm_total_mass,
    bm_total_mass_line_chart,
    bm_vector_density,
    liouville_total,
    measure_context,
    ps_density,
    ps_total,
    skinning_measure,
)

TWO_PI = 2.0 * math.pi


def rand_point(rng):
    return Point(rng.uniform(-3, 3), math.exp(rng.uniform(-2, 2)))


def test_total_masses_closed_form():
    v, diag = bm_total_mass(PSL2Z)
    assert v == pytest.approx(4 * math.pi**2 / 3, rel=1e-12)
    assert diag["rel_spread"] < 1e-6
    v2, _ = bm_total_mass(GAMMA2)
    assert v2 == pytest.approx(8 * math.pi**2, rel=1e-12)
    assert v2 / v == pytest.approx(6.0, rel=1e-12)


def test_line_chart_cross_route():
    # fully independent coordinates, so only quadrature-level agreement
    alt = bm_total_mass_line_chart(PSL2Z)
    assert alt == pytest.approx(4 * math.pi**2 / 3, rel=1e-4)
    with pytest.raises(ValueError):
        bm_total_mass_line_chart(GAMMA2)


def test_liouville_total_is_phase_volume():
    assert liouville_total(PSL2Z) == pytest.approx(TWO_PI * math.pi / 3, rel=1e-14)
    assert liouville_total(GAMMA2) == pytest.approx(TWO_PI * 2 * math.pi, rel=1e-14)


def test_ps_density_conformal_ratio():
    rng = random.Random(7)
    for _ in range(200):
        p, q = rand_point(rng), rand_point(rng)
        xi = BoundaryPoint(rng.uniform(-4, 4))
        lhs = ps_density(q, xi) / ps_density(p, xi)
        rhs = math.exp(busemann(xi, p, q))
        assert lhs == pytest.approx(rhs, rel=1e-11)
    assert ps_total(rand_point(rng)) == pytest.approx(TWO_PI, rel=1e-14)


def test_line_density_closed_form_and_base_independence():
    rng = random.Random(11)
    for _ in range(150):
        xi = BoundaryPoint(rng.uniform(-4, 4))
        eta = BoundaryPoint(rng.uniform(-4, 4))
        if abs(xi.value - eta.value) < 1e-3:
            continue
        want = 4.0 / (xi.value - eta.value) ** 2
        a = bm_line_density(rand_point(rng), xi, eta)
        b = bm_line_density(rand_point(rng), xi, eta)
        assert a == pytest.approx(want, rel=1e-10)
        assert a == pytest.approx(b, rel=1e-10)


def test_vector_density_matches_line_density():
    rng = random.Random(13)
    for _ in range(150):
        v = UnitTangent(rand_point(rng), rng.uniform(0, TWO_PI))
        xi, eta = geodesic_endpoints(v)
        if xi.is_infinity or eta.is_infinity:
            continue
        d1 = bm_vector_density(v, rand_point(rng))
        d2 = bm_line_density(rand_point(rng), xi, eta)
        assert d1 == pytest.approx(d2, rel=1e-9)


def test_constant_mass_below_cap():
    # everything under the cutoff, cusp tail removed in closed form
    for group, total, copies in ((PSL2Z, 4 * math.pi**2 / 3, 1), (GAMMA2, 8 * math.pi**2, 6)):
        Y = 5.0
        got = bm_integrate(group, lambda x, y, th: (y < Y) * 1.0, Y)
        want = total - copies * 2.0 * TWO_PI / Y
        assert got == pytest.approx(want, rel=1e-9)


def test_quadrature_self_check_raises():
    coarse = MassQuadrature(
        nx=2, ny_per_unit=1, ntheta_panels=2, gauss_order=2, self_check_tol=1e-12
    )
    with pytest.raises(QuadratureDiverged):
        bm_total_mass(PSL2Z, coarse)


def test_skinning_points_and_stabilizers():
    assert skinning_measure(PSL2Z, point_set(0, 2)).induced_total == pytest.approx(
        TWO_PI
    )
    sk = skinning_measure(PSL2Z, point_set(0, 1))
    assert sk.stabilizer_order == 2
    assert sk.induced_total == pytest.approx(math.pi)
    # the same point is torsion-free in the congruence subgroup
    assert skinning_measure(GAMMA2, point_set(0, 1)).stabilizer_order == 1


def test_skinning_horoballs():
    assert skinning_measure(PSL2Z, horoball(INFINITY, 1.0)).induced_total == 2.0
    assert skinning_measure(GAMMA2, horoball(INFINITY, 1.0)).induced_total == 4.0
    # the rotated image of the standard cusp ball has the same total
    assert skinning_measure(PSL2Z, horoball(0.0, 1.0)).induced_total == pytest.approx(
        2.0
    )
    assert skinning_measure(PSL2Z, horoball(0.5, 0.25)).induced_total == pytest.approx(
        2.0 * 0.25 * 4
    )


def test_skinning_disk_exponential_law():
    for r in (0.25, 0.5, 1.0, 2.0):
        sk = skinning_measure(PSL2Z, disk(0.3, 2.0, r))
        assert sk.total == pytest.approx(TWO_PI * math.exp(r), rel=1e-10)


def test_skinning_geodesic_needs_period():
    line = geodesic(-1.0, 1.0)
    with pytest.raises(UnsupportedSet):
        skinning_measure(PSL2Z, line)
    sk = skinning_measure(PSL2Z, line, period=3.5)
    assert sk.total == pytest.approx(7.0)


def test_context_json_round_trip(tmp_path):
    ctx = measure_context(PSL2Z)
    ctx.skinning(point_set(0, 2))
    clone = MeasureContext.from_json(ctx.to_json())
    assert clone.group_name == ctx.group_name
    assert clone.delta == ctx.delta
    assert clone.bm_total == ctx.bm_total
    assert clone.skinning_totals == ctx.skinning_totals

    path = tmp_path / "ctx.json"
    first = measure_context(PSL2Z, cache_path=str(path))
    assert path.exists()
    second = measure_context(PSL2Z, cache_path=str(path))
    assert second.bm_total == first.bm_total
    # mismatched cache content is recomputed, not trusted
    third = measure_context(GAMMA2, cache_path=str(path))
    assert third.bm_total == pytest.approx(8 * math.pi**2, rel=1e-12)
