"""Experiment engine: quadrature, run modes, reports, and file formats."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from perplab.census import census_table
from perplab.convex import Disk, GeodesicLine, Horoball, PointSet, point_set
from perplab.errors import InsufficientData
from perplab.geometry import UnitTangent, Point, flow
from perplab.lab import (
    ExperimentConfig,
    TestFunction,
    builtin_test_functions,
    config_from_toml,
    convex_from_config,
    leb_integrate,
    leb_table_sums,
    mass_plateau,
    read_census_csv,
    render_loops_svg,
    residual_fit,
    run_count,
    run_directions,
    run_equi,
    run_weighted,
    write_census_csv,
    write_report_csv,
)
from perplab.lab import test_function_from_config as psi_from_config
from perplab.lab import _flow_points
from perplab.lattice import PSL2Z, reduce_points


def phi_sum(n):
    phi = list(range(n + 1))
    for i in range(2, n + 1):
        if phi[i] == i:
            for j in range(i, n + 1, i):
                phi[j] -= phi[j] // i
    return sum(phi[2 : n + 1])


def loop_config(t_grid, **kw):
    return ExperimentConfig(t_grid=t_grid, **kw)


def riemann_line_integral(perp, psi, n):
    s = (np.arange(n) + 0.5) * (perp.length / n)
    x, y, ang = _flow_points(
        perp.u.base.x, perp.u.base.y, perp.u.angle, s
    )
    xr, yr, phase = reduce_points(PSL2Z, x, y)
    return float(psi.values(xr, yr, ang + phase).sum()) * perp.length / n


def test_leb_integrate_against_riemann():
    psis = builtin_test_functions()
    perp = SimpleNamespace(length=4.3, u=UnitTangent(Point(0.21, 1.4), 0.83))
    for psi in psis:
        got = leb_integrate(perp, psi)
        want = riemann_line_integral(perp, psi, 400_000)
        assert got == pytest.approx(want, rel=2e-6, abs=1e-12)


def test_leb_integrate_split_additivity():
    psi = builtin_test_functions()[1]
    u = UnitTangent(Point(-0.3, 0.9), 1.9)
    whole = SimpleNamespace(length=3.8, u=u)
    first = SimpleNamespace(length=1.9, u=u)
    second = SimpleNamespace(length=1.9, u=flow(u, 1.9))
    total = leb_integrate(whole, psi)
    assert leb_integrate(first, psi) + leb_integrate(second, psi) == pytest.approx(
        total, abs=1e-8
    )


def test_table_sums_match_scalar_integrals():
    table = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 5.0)
    psis = list(builtin_test_functions()) + [mass_plateau()]
    sums = leb_table_sums(PSL2Z, table, psis)
    assert sums.shape == (4, len(table))
    for i in range(0, len(table), 37):
        rec = table.record(i)
        for k, psi in enumerate(psis):
            assert sums[k, i] == pytest.approx(
                leb_integrate(rec, psi), rel=2e-4, abs=5e-7
            )


def test_table_sums_thread_invariance():
    table = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 5.0)
    psis = list(builtin_test_functions())
    one = leb_table_sums(PSL2Z, table, psis, threads=1)
    four = leb_table_sums(PSL2Z, table, psis, threads=4)
    assert np.array_equal(one, four)


def test_builtin_functions_respect_walls():
    h, xy, xya = builtin_test_functions()
    x = np.array([0.5, -0.5, 0.0])
    y = np.array([1.2, 1.2, 1.2])
    a = np.zeros(3)
    vals = xy.values(x, y, a)
    assert vals[0] == 0.0 and vals[1] == 0.0 and vals[2] > 0.0
    # height bump ignores x and angle entirely
    hv = h.values(np.array([-0.4, 0.4]), np.array([2.2, 2.2]), np.array([0.0, 3.0]))
    assert hv[0] == hv[1] > 0.0
    assert h.values(np.array([0.0]), np.array([60.0]), a[:1])[0] == 0.0
    pl = mass_plateau()
    pv = pl.values(np.zeros(3), np.array([11.0, 14.0, 17.0]), np.zeros(3))
    assert pv[0] == 1.0 and 0.0 < pv[1] < 1.0 and pv[2] == 0.0
    assert pl.y_cap == 16.0
    assert xya.values(np.array([0.05]), np.array([1.5]), np.array([0.3]))[0] > 0.0


def test_psi_from_config():
    by_name = psi_from_config("height_bump")
    assert isinstance(by_name, TestFunction)
    custom = psi_from_config(
        {"id": "w", "kind": "gauss", "params": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]}
    )
    assert custom.psi_id == "w" and custom.params == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    # config() round-trips through the parser
    clone = psi_from_config(by_name.config())
    assert clone == by_name
    with pytest.raises(ValueError):
        psi_from_config("no_such_bump")


def test_run_count_cusp_normalization():
    cfg = ExperimentConfig(
        set_minus={"kind": "horoball", "center": "inf", "height": 1.0},
        set_plus={"kind": "horoball", "center": "inf", "height": 1.0},
        t_grid=(2 * math.log(5), 2 * math.log(12), 2 * math.log(40)),
    )
    rep = run_count(cfg)
    assert rep.kind == "count"
    raw = [r.n_weighted for r in rep.rows]
    assert raw == [phi_sum(5), phi_sum(12), phi_sum(40)]
    assert rep.meta["constant"] == pytest.approx(3 / math.pi**2, rel=1e-12)
    assert rep.rows[-1].n_normalized == pytest.approx(1.0, abs=0.05)
    assert math.isnan(rep.rows[0].mu_psi)


def test_run_equi_rows_and_masses():
    cfg = loop_config((4.0, 5.0), test_functions=("height_bump", "xy_bump"))
    rep = run_equi(cfg)
    assert rep.kind == "equi"
    ids = {r.psi_id for r in rep.rows}
    assert ids == {"height_bump", "xy_bump"}
    for r in rep.rows:
        assert r.target_psi > 0.0
        assert np.isfinite(r.rel_err)
        assert r.total_mass > 0.0
    assert rep.meta["delta_F"] == 1.0
    assert rep.meta["fitted_normalization"] is False
    assert rep.meta["plateau_target"] > 0.0
    # rows at one t share the single total-mass estimate
    by_t = {}
    for r in rep.rows:
        by_t.setdefault(r.t, set()).add(r.total_mass)
    assert all(len(v) == 1 for v in by_t.values())
    # both t rows share the one census pass
    assert len(rep.rows_for("height_bump")) == 2


def test_weighted_constant_zero_is_identical_to_equi():
    cfg = loop_config((4.0, 5.0), potential={"kind": "constant", "value": 0.0})
    plain = run_equi(cfg)
    weighted = run_weighted(cfg)
    assert weighted.kind == "weighted"
    for a, b in zip(plain.rows, weighted.rows):
        assert a.psi_id == b.psi_id
        for f in ("t", "n_weighted", "mu_psi", "target_psi",
                  "rel_err", "total_mass"):
            va, vb = getattr(a, f), getattr(b, f)
            assert va == vb or (math.isnan(va) and math.isnan(vb))


def test_weighted_constant_shifts_counts():
    cfg = loop_config((4.0, 5.0), potential={"kind": "constant", "value": 0.3})
    rep = run_weighted(cfg)
    assert rep.meta["delta_F"] == pytest.approx(1.3)
    assert rep.meta["fitted_normalization"] is False
    tab = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 5.0)
    mask = tab.length <= 4.0 + 1e-12
    want = float((tab.multiplicity[mask] * np.exp(0.3 * tab.length[mask])).sum())
    assert rep.rows[0].n_weighted == pytest.approx(want, rel=1e-12)


def test_weighted_band_uses_fitted_normalization():
    cfg = loop_config(
        (4.0, 5.0),
        potential={"kind": "height_band", "amplitude": 0.3},
        test_functions=("height_bump",),
    )
    rep = run_weighted(cfg)
    assert rep.meta["fitted_normalization"] is True
    assert "delta_F_uncertainty" in rep.meta
    assert rep.meta["delta_F"] != 1.0
    plain = run_equi(loop_config((4.0, 5.0), test_functions=("height_bump",)))
    n_plain = {r.t: r.n_weighted for r in plain.rows_for("height_bump")}
    for r in rep.rows_for("height_bump"):
        assert r.n_weighted != n_plain[r.t]


def test_run_directions_histograms():
    cfg = loop_config((4.0, 5.0))
    rep = run_directions(cfg)
    assert rep["bins"] == 36
    for row in rep["rows"]:
        init = np.array(row["initial"])
        term = np.array(row["terminal"])
        assert init.sum() == pytest.approx(row["n"])
        assert term.sum() == pytest.approx(row["n"])
        # time reversal flips every loop, so the histograms agree
        # after a half turn
        assert np.array_equal(init, np.roll(term, 18))
        assert 0.0 <= row["tv_initial"] <= 1.0
        assert 0.0 <= row["tv_terminal"] <= 1.0


def test_residual_fit_synthetic():
    ts = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
    one_over_t = residual_fit([(t, 1.0 / t) for t in ts])
    assert one_over_t["a"] == pytest.approx(1.0, abs=1e-8)
    assert one_over_t["bounded"] is True
    flat = residual_fit([(t, 0.5) for t in ts])
    assert flat["bounded"] is False
    with pytest.raises(InsufficientData):
        residual_fit([(5.0, 0.1), (6.0, 0.05), (7.0, 0.02)])


def test_census_csv_round_trip(tmp_path):
    table = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 4.0)
    path = tmp_path / "census.csv"
    write_census_csv(table, str(path))
    header = path.read_text().splitlines()[0]
    assert header == (
        "index,a,b,c,d,length,u_x,u_y,u_angle,v_x,v_y,v_angle,multiplicity,weight"
    )
    back = read_census_csv(str(path))
    assert np.array_equal(back["a"], table.rep_a)
    assert np.array_equal(back["d"], table.rep_d)
    # %.17g is lossless for doubles
    assert np.array_equal(back["length"], table.length)
    assert np.array_equal(back["u_angle"], table.uangle)
    assert np.array_equal(back["index"], np.arange(len(table)))


def test_report_csv_round_trip(tmp_path):
    rep = run_count(
        ExperimentConfig(
            set_minus={"kind": "horoball", "center": "inf", "height": 1.0},
            set_plus={"kind": "horoball", "center": "inf", "height": 1.0},
            t_grid=(2 * math.log(5), 2 * math.log(12)),
        )
    )
    path = tmp_path / "report.csv"
    write_report_csv(rep, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,N,N_normalized,psi_id,mu_t_psi,target_psi,rel_err,total_mass"
    assert len(lines) == 1 + len(rep.rows)
    cells = lines[1].split(",")
    assert float(cells[0]) == rep.rows[0].t
    assert float(cells[1]) == rep.rows[0].n_weighted
    assert float(cells[2]) == rep.rows[0].n_normalized


def test_svg_piece_counts_and_stability():
    cfg = loop_config((4.0,))
    below = render_loops_svg(cfg, 0.4)
    assert below.startswith("<svg")
    # shortest loop has length 2 asinh(1/4), so only the domain outline
    assert below.count("<polyline") == 1
    small = render_loops_svg(cfg, 0.6)
    assert small.count("<polyline") == 5
    again = render_loops_svg(cfg, 0.6)
    assert small == again


def test_config_validation_and_convex_kinds():
    with pytest.raises(ValueError):
        ExperimentConfig(t_grid=(5.0, 5.0))
    with pytest.raises(ValueError):
        ExperimentConfig(t_grid=(6.0, 5.0))
    assert isinstance(convex_from_config({"kind": "point", "x": 1, "y": 3}), PointSet)
    hb = convex_from_config({"kind": "horoball", "center": "oo", "height": 2.0})
    assert isinstance(hb, Horoball) and hb.center.is_infinity
    fin = convex_from_config({"kind": "horoball", "center": 0.5, "size": 0.2})
    assert isinstance(fin, Horoball) and not fin.center.is_infinity
    assert isinstance(convex_from_config({"kind": "disk", "radius": 0.5}), Disk)
    assert isinstance(
        convex_from_config({"kind": "geodesic", "a": -1.0, "b": 1.0}), GeodesicLine
    )
    with pytest.raises(ValueError):
        convex_from_config({"kind": "banana"})
    with pytest.raises(ValueError):
        convex_from_config({"kind": "horoball", "center": "nowhere"})


def test_config_from_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        """
group = "GAMMA2"
t_grid = [4.0, 5.0]
basepoint = [0.0, 2.0]
threads = 2
seed = 99
test_functions = ["height_bump"]

[set_minus]
kind = "point"
x = 0.0
y = 2.0

[set_plus]
kind = "horoball"
center = "inf"
height = 1.0

[potential]
kind = "constant"
value = 0.25
"""
    )
    cfg = config_from_toml(str(path))
    assert cfg.group_name == "GAMMA2"
    assert cfg.t_grid == (4.0, 5.0)
    assert cfg.threads == 2
    assert cfg.seed == 99
    assert cfg.test_functions == ("height_bump",)
    assert cfg.set_plus["kind"] == "horoball"
    assert cfg.potential == {"kind": "constant", "value": 0.25}
    assert cfg.group.name == "GAMMA2"
    assert cfg.t_max == 5.0
