"""Acceptance battery: one callable per shipped guarantee.

Each criterion function returns (name, ok, detail) and enforces its own
wall-clock budget. The battery is what tests/test_acceptance.py prints
one PASS/FAIL line from, and the CLI selftest runs a fast subset.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from fractions import Fraction

import numpy as np

from .census import census_table
from .convex import horoball, point_set
from .geometry import (
    INFINITY,
    BoundaryPoint,
    MoebiusInt,
    Point,
    UnitTangent,
    busemann,
    closest_point_on_line,
    dist,
    flow,
    visual_dist,
)
from .gibbs import (
    ConstantPotential,
    GibbsContext,
    HeightBandPotential,
    delta_F_estimate,
    gibbs_cocycle,
    reweight_table,
)
from .lattice import GAMMA2, PSL2Z, bfs_ball, enumerate_ball
from .lab import (
    ExperimentConfig,
    leb_table_sums,
    read_census_csv,
    run_count,
    run_directions,
    run_equi,
    run_weighted,
    write_census_csv,
)
from .measures import (
    MassQuadrature,
    bm_total_mass,
    bm_vector_density,
    measure_context,
    ps_density,
)

THREE_OVER_PI2 = 3.0 / math.pi**2


def _cusp_config(t_grid) -> ExperimentConfig:
    return ExperimentConfig(
        set_minus={"kind": "horoball", "center": "inf", "height": 1.0},
        set_plus={"kind": "horoball", "center": "inf", "height": 1.0},
        t_grid=t_grid,
    )


def _rand_point(rng) -> Point:
    return Point(rng.uniform(-3.0, 3.0), math.exp(rng.uniform(math.log(0.05), math.log(20.0))))


def _rand_word(rng) -> MoebiusInt:
    T = MoebiusInt(1, 1, 0, 1)
    S = MoebiusInt(0, -1, 1, 0)
    g = MoebiusInt.identity()
    for _ in range(rng.integers(1, 7)):
        g = g @ (T if rng.random() < 0.5 else S)
    return g


def criterion_1() -> tuple:
    """Exact geometry identities on seeded random data, under 5 s."""
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = 0.0
    checks = 0
    for _ in range(300):
        p, q, r = _rand_point(rng), _rand_point(rng), _rand_point(rng)
        dpq, dqp = dist(p, q), dist(q, p)
        worst = max(worst, abs(dpq - dqp))
        worst = max(worst, max(0.0, dist(p, r) - (dpq + dist(q, r))) / (1.0 + dist(p, r)))
        g = _rand_word(rng)
        gf = g.to_float()
        worst = max(worst, abs(dist(gf(p), gf(q)) - dpq) / (1.0 + dpq))
        xi = BoundaryPoint(rng.uniform(-4.0, 4.0)) if rng.random() < 0.7 else INFINITY
        bpq = busemann(xi, p, q)
        worst = max(worst, abs(bpq + busemann(xi, q, p)))
        worst = max(worst, abs(busemann(xi, p, r) - bpq - busemann(xi, q, r)))
        worst = max(worst, max(0.0, abs(bpq) - dpq) / (1.0 + dpq))
        if xi.is_infinity:
            worst = max(worst, abs(bpq - math.log(q.y / p.y)))
        xi2 = BoundaryPoint(rng.uniform(-4.0, 4.0))
        if xi != xi2:
            vd = visual_dist(p, xi, xi2)
            worst = max(worst, abs(vd - visual_dist(p, xi2, xi)) / vd)
            worst = max(worst, abs(visual_dist(gf(p), gf(xi), gf(xi2)) - vd) / vd)
            dline = dist(p, closest_point_on_line(xi, xi2, p))
            assert math.exp(-dline) * (1 - 1e-9) <= vd <= 2 * math.exp(-dline) * (1 + 1e-9)
        v = UnitTangent(p, rng.uniform(-math.pi, math.pi))
        s, t = rng.uniform(-3, 3), rng.uniform(-3, 3)
        w1, w2 = flow(flow(v, s), t), flow(v, s + t)
        worst = max(worst, dist(w1.base, w2.base))
        checks += 10
    dt = time.time() - t0
    ok = worst < 1e-11 and dt < 5.0
    return ("C1 geometry exact suite", ok, f"{checks} identities, worst {worst:.2e}, {dt:.2f}s")


def criterion_2() -> tuple:
    """Row-scan ball equals breadth-first ball at 2i, t = 6, both groups."""
    t0 = time.time()
    details = []
    ok = True
    for group in (PSL2Z, GAMMA2):
        a = {g.key() for g in enumerate_ball(group, (0, 2), 6.0)}
        b = {g.key() for g in bfs_ball(group, (0, 2), 6.0)}
        ok = ok and a == b
        details.append(f"{group.name}: scan {len(a)} vs bfs {len(b)}")
    dt = time.time() - t0
    ok = ok and dt < 30.0
    return ("C2 enumeration dual route", ok, "; ".join(details) + f", {dt:.1f}s")


def criterion_3() -> tuple:
    """Cusp census equals the totient sums exactly, with exact lengths."""
    t0 = time.time()
    grid = (2 * math.log(50), 2 * math.log(200), 2 * math.log(1000))
    rep = run_count(_cusp_config(grid))

    def phi_sum(n):
        phi = list(range(n + 1))
        for i in range(2, n + 1):
            if phi[i] == i:
                for j in range(i, n + 1, i):
                    phi[j] -= phi[j] // i
        return sum(phi[2 : n + 1])

    wants = [phi_sum(50), phi_sum(200), phi_sum(1000)]
    counts_ok = all(r.n_raw == w for r, w in zip(rep.rows, wants))
    table = census_table(PSL2Z, horoball(INFINITY, 1.0), horoball(INFINITY, 1.0), grid[-1])
    len_err = float(np.abs(table.length - 2.0 * np.log(table.rep_c)).max())
    ratio = rep.rows[-1].n_normalized
    dt = time.time() - t0
    ok = counts_ok and len_err < 1e-12 and 0.98 <= ratio <= 1.02 and dt < 120.0
    return (
        "C3 cusp census totients",
        ok,
        f"counts {[r.n_raw for r in rep.rows]} vs {wants}, length err {len_err:.1e}, "
        f"ratio {ratio:.5f}, {dt:.1f}s",
    )


def criterion_4() -> tuple:
    """Counting constants close up: cusp constant vs 3/pi^2 and loop
    normalization vs 1 at t = 12, improving from t = 8."""
    t0 = time.time()
    cusp = run_count(_cusp_config((2 * math.log(30),)))
    cusp_const = 1.0 / (cusp.meta["bm_total"] / (cusp.meta["sigma_minus"] * cusp.meta["sigma_plus"]))
    cusp_ok = abs(cusp_const / THREE_OVER_PI2 - 1.0) < 0.02
    loops = run_count(ExperimentConfig(t_grid=(8.0, 12.0)))
    r8, r12 = (abs(r.n_normalized - 1.0) for r in loops.rows)
    dt = time.time() - t0
    ok = cusp_ok and r12 < 0.2 and r12 < r8 and dt < 600.0
    return (
        "C4 constant closure",
        ok,
        f"cusp const {cusp_const:.6f} vs {THREE_OVER_PI2:.6f}, loop residual "
        f"{r8:.5f}@8 -> {r12:.5f}@12, {dt:.1f}s",
    )


def criterion_5() -> tuple:
    """Mass ratio exactly 6 and density invariances at 1e-9."""
    t0 = time.time()
    m1, _ = bm_total_mass(PSL2Z)
    m2, _ = bm_total_mass(GAMMA2)
    ratio = m2 / m1
    ratio_ok = abs(ratio / 6.0 - 1.0) < 0.005
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(1000):
        p, q = _rand_point(rng), _rand_point(rng)
        xi = BoundaryPoint(rng.uniform(-4.0, 4.0)) if rng.random() < 0.8 else INFINITY
        # unit-exponent conformal family (busemann is the log Poisson ratio)
        lhs = ps_density(q, xi) / ps_density(p, xi)
        rhs = math.exp(busemann(xi, p, q))
        worst = max(worst, abs(lhs - rhs) / rhs)
        v = UnitTangent(p, rng.uniform(-math.pi, math.pi))
        d1 = bm_vector_density(v, p)
        d2 = bm_vector_density(v, q)
        worst = max(worst, abs(d1 - d2) / d1)
    dt = time.time() - t0
    ok = ratio_ok and worst < 1e-9 and dt < 120.0
    return (
        "C5 masses and conformality",
        ok,
        f"ratio {ratio:.10f}, worst density err {worst:.2e} on 1000 samples, {dt:.1f}s",
    )


def criterion_6(threads: int = 4) -> tuple:
    """Equidistribution: three test functions within 20% at t = 12,
    each improving on t = 9, truncated mass in [0.8, 1.1] trending 1."""
    t0 = time.time()
    rep = run_equi(ExperimentConfig(t_grid=(8.0, 9.0, 12.0), threads=threads))
    by_t = {}
    for r in rep.rows:
        by_t.setdefault(r.t, {})[r.psi_id] = r
    ok = True
    parts = []
    for psi_id in ("height_bump", "xy_bump", "xya_bump"):
        r9, r12 = by_t[9.0][psi_id].rel_err, by_t[12.0][psi_id].rel_err
        ok = ok and r12 <= 0.2 and r12 < r9
        parts.append(f"{psi_id} {r9:.3f}->{r12:.3f}")
    m8 = by_t[8.0]["height_bump"].total_mass
    m12 = by_t[12.0]["height_bump"].total_mass
    mass_ok = 0.8 <= m12 <= 1.1 and abs(m12 - 1.0) < abs(m8 - 1.0)
    ok = ok and mass_ok
    dt = time.time() - t0
    ok = ok and dt < 600.0
    return (
        "C6 equidistribution",
        ok,
        "; ".join(parts) + f"; mass {m8:.3f}->{m12:.3f}, {dt:.1f}s",
    )


def criterion_7() -> tuple:
    """Direction histograms approach uniform: TV below 0.05 at t = 12
    and below the t = 9 value."""
    t0 = time.time()
    rep = run_directions(ExperimentConfig(t_grid=(9.0, 12.0)))
    row9, row12 = rep["rows"]
    tv9 = max(row9["tv_initial"], row9["tv_terminal"])
    tv12 = max(row12["tv_initial"], row12["tv_terminal"])
    n_ok = all(
        abs(sum(row[k]) - row["n"]) < 1e-6 for row in (row9, row12) for k in ("initial", "terminal")
    )
    dt = time.time() - t0
    ok = tv12 < 0.05 and tv12 < tv9 and n_ok and dt < 600.0
    return ("C7 direction uniformity", ok, f"TV {tv9:.4f}@9 -> {tv12:.4f}@12, {dt:.1f}s")


def criterion_8(threads: int = 2) -> tuple:
    """Weighted runs: zero potential reproduces the unweighted run
    bitwise, a constant potential is an exact census reweighting, and
    the pressure shift matches the constant."""
    t0 = time.time()
    grid = (5.0, 6.0, 7.0)
    base = ExperimentConfig(t_grid=grid, threads=threads)
    equi = run_equi(base)
    w0 = run_weighted(
        ExperimentConfig(t_grid=grid, threads=threads, potential={"kind": "constant", "value": 0.0})
    )
    bitwise = all(
        a.mu_psi == b.mu_psi and a.total_mass == b.total_mass and a.target_psi == b.target_psi
        for a, b in zip(equi.rows, w0.rows)
    )

    # constant reweighting equals e^{c l} applied to the stored census
    cfg3 = ExperimentConfig(t_grid=grid, threads=threads, potential={"kind": "constant", "value": 0.3})
    w3 = run_weighted(cfg3)
    table = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), grid[-1])
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "census.csv")
        write_census_csv(table, path)
        cols = read_census_csv(path)
    psis = cfg3.psis()
    sums = leb_table_sums(PSL2Z, table, psis, threads=threads)
    mctx = measure_context(PSL2Z, MassQuadrature(), None)
    sig = mctx.skinning(point_set(0, 2)).induced_total
    delta_f = 1.3
    norm_const = delta_f * mctx.bm_total / (sig * sig)
    reweight_err = 0.0
    for r in w3.rows:
        mask = cols["length"] <= r.t + 1e-12
        contrib = cols["multiplicity"][mask] * np.exp(0.3 * cols["length"][mask])
        i = [p.psi_id for p in psis].index(r.psi_id)
        mu = norm_const / (r.t * math.exp(delta_f * r.t)) * float((contrib * sums[i][mask]).sum())
        reweight_err = max(reweight_err, abs(mu - r.mu_psi) / (abs(r.mu_psi) + 1e-300))

    d0, _ = delta_F_estimate(PSL2Z, ConstantPotential(0.0), t_max=12.0)
    d3, _ = delta_F_estimate(PSL2Z, ConstantPotential(0.3), t_max=12.0)
    shift_err = abs((d3 - d0) - 0.3)
    dt = time.time() - t0
    ok = bitwise and reweight_err < 1e-12 and shift_err <= 0.3 / 12.0 and dt < 600.0
    return (
        "C8 weighted identities",
        ok,
        f"zero-potential bitwise {bitwise}, reweight err {reweight_err:.1e}, "
        f"pressure shift err {shift_err:.1e}, {dt:.1f}s",
    )


def _exact_image(g: MoebiusInt, fx: Fraction, fy: Fraction) -> tuple:
    cd = g.c * fx + g.d
    den = cd * cd + (g.c * fy) ** 2
    nx = (g.a * fx + g.b) * cd + g.a * g.c * fy * fy
    return nx / den, fy / den


def criterion_9() -> tuple:
    """Gibbs cocycles: the constant closed form matches the numeric ray
    route, horizon doubling moves band values below 1e-6, and the
    cocycle is additive and lattice-equivariant at 1e-8."""
    t0 = time.time()
    rng = np.random.default_rng(47)

    # dual route: amplitude-zero band integrates a constant numerically
    const_ctx = GibbsContext(ConstantPotential(0.3), 1.3)
    flat_ctx = GibbsContext(HeightBandPotential(0.0), 1.0, horizon=24.0)
    route_err = 0.0
    for _ in range(60):
        p, q = _rand_point(rng), _rand_point(rng)
        xi = BoundaryPoint(Fraction(rng.integers(-40, 40), int(rng.integers(1, 12))))
        c1 = gibbs_cocycle(xi, p, q, const_ctx)
        c2 = gibbs_cocycle(xi, p, q, flat_ctx)
        route_err = max(route_err, abs(c1 - c2))

    band_ctx = GibbsContext(HeightBandPotential(0.5), 1.0, horizon=30.0, tolerance=1e-5)
    trunc = 0.0
    add_err = 0.0
    for _ in range(60):
        p, q, r = _rand_point(rng), _rand_point(rng), _rand_point(rng)
        # generic boundary points have unbounded excursion patterns, so
        # the horizon-doubling estimate measures a genuine tail
        xi = BoundaryPoint(rng.uniform(-4.0, 4.0))
        v, est = gibbs_cocycle(xi, p, q, band_ctx, return_estimate=True)
        trunc = max(trunc, est)
        add_err = max(
            add_err,
            abs(
                gibbs_cocycle(xi, p, r, band_ctx)
                - v
                - gibbs_cocycle(xi, q, r, band_ctx)
            ),
        )

    equi_err = 0.0
    gens = [MoebiusInt(1, 1, 0, 1), MoebiusInt(0, -1, 1, 0), MoebiusInt(1, -1, 1, 0)]
    n_equi = 500
    for k in range(n_equi):
        fx = Fraction(int(rng.integers(-30, 30)), 16)
        fy = Fraction(int(rng.integers(4, 64)), 16)
        fx2 = Fraction(int(rng.integers(-30, 30)), 16)
        fy2 = Fraction(int(rng.integers(4, 64)), 16)
        xi = BoundaryPoint(Fraction(int(rng.integers(-40, 40)), int(rng.integers(1, 12))))
        g = gens[k % 3] @ gens[(k // 3) % 3]
        ix, iy = _exact_image(g, fx, fy)
        jx, jy = _exact_image(g, fx2, fy2)
        lhs = gibbs_cocycle(
            g(xi),
            Point(float(ix), float(iy)),
            Point(float(jx), float(jy)),
            band_ctx,
        )
        rhs = gibbs_cocycle(
            xi, Point(float(fx), float(fy)), Point(float(fx2), float(fy2)), band_ctx
        )
        equi_err = max(equi_err, abs(lhs - rhs))
    dt = time.time() - t0
    ok = route_err < 1e-12 and trunc < 1e-6 and add_err < 1e-8 and equi_err < 1e-8 and dt < 600.0
    return (
        "C9 cocycle identities",
        ok,
        f"const-vs-ray {route_err:.1e}, truncation {trunc:.1e}, additivity {add_err:.1e}, "
        f"equivariance {equi_err:.1e} on {n_equi} samples, {dt:.1f}s",
    )


def criterion_10() -> tuple:
    """CLI outputs are byte-identical across thread counts and repeat
    runs; the loop picture at t = 4 is byte-stable."""
    from .cli import main as cli_main

    t0 = time.time()
    cfg_text = 't_grid = [5.0, 6.0]\n'
    with tempfile.TemporaryDirectory() as tmp:
        cfgp = os.path.join(tmp, "exp.toml")
        with open(cfgp, "w", encoding="utf-8") as fh:
            fh.write(cfg_text)
        outs = []
        for threads in (1, 4):
            out = os.path.join(tmp, f"equi{threads}.csv")
            code = cli_main(
                ["equi", "--config", cfgp, "--out", out, "--threads", str(threads)]
            )
            assert code == 0, code
            with open(out, "rb") as fh:
                outs.append(fh.read())
        threads_ok = outs[0] == outs[1] and len(outs[0]) > 0

        svgs = []
        for run in range(2):
            out = os.path.join(tmp, f"loops{run}.svg")
            code = cli_main(["loops-svg", "--config", cfgp, "--out", out, "--t-max", "4"])
            assert code == 0, code
            with open(out, "rb") as fh:
                svgs.append(fh.read())
        svg_ok = svgs[0] == svgs[1] and svgs[0].startswith(b"<svg")
    dt = time.time() - t0
    ok = threads_ok and svg_ok and dt < 600.0
    return (
        "C10 deterministic outputs",
        ok,
        f"equi csv threads 1 vs 4 identical {threads_ok}, svg stable {svg_ok} "
        f"({len(svgs[0])} bytes), {dt:.1f}s",
    )


ALL_CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
)


def run_all() -> list:
    return [fn() for fn in ALL_CRITERIA]


def selftest_checks() -> list:
    """Fast subset for the CLI selftest: structure and exactness spot
    checks that finish in a few seconds."""
    out = []

    t0 = time.time()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        p, q, r = _rand_point(rng), _rand_point(rng), _rand_point(rng)
        xi = BoundaryPoint(rng.uniform(-4.0, 4.0))
        worst = max(worst, abs(dist(p, q) - dist(q, p)))
        worst = max(
            worst, abs(busemann(xi, p, r) - busemann(xi, p, q) - busemann(xi, q, r))
        )
    out.append(("geometry identities", worst < 1e-11, f"worst {worst:.1e}, {time.time()-t0:.2f}s"))

    t0 = time.time()
    a = {g.key() for g in enumerate_ball(PSL2Z, (0, 2), 4.0)}
    b = {g.key() for g in bfs_ball(PSL2Z, (0, 2), 4.0)}
    out.append(("enumeration dual route t=4", a == b, f"{len(a)} elements, {time.time()-t0:.2f}s"))

    t0 = time.time()
    rep = run_count(_cusp_config((2 * math.log(50),)))
    out.append(
        ("cusp count 2 ln 50", rep.rows[0].n_raw == 773, f"N={rep.rows[0].n_raw}, {time.time()-t0:.2f}s")
    )

    t0 = time.time()
    table = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 4.0)
    w3 = reweight_table(ConstantPotential(0.3), table)
    err = float(np.abs(w3.weight - np.exp(0.3 * table.length)).max())
    out.append(("constant reweight", err < 1e-14, f"err {err:.1e}, {time.time()-t0:.2f}s"))

    t0 = time.time()
    from .lab import render_loops_svg

    svg = render_loops_svg(ExperimentConfig(), 0.6)
    n = svg.count("<polyline")
    out.append(("loop picture pieces", n == 5, f"{n} polylines at t=0.6, {time.time()-t0:.2f}s"))
    return out
