"""Experiment engine: normalized perpendicular measures against targets.

Builds a census of common perpendiculars once at the largest cutoff,
then evaluates the normalized counting measures

    mu_t = (delta ||m|| / (t e^{delta t} ||sigma+|| ||sigma-||)) *
           sum over perpendiculars of weight * Leb along the segment

against built-in test functions and against the invariant measure
computed by quadrature. Weighted variants multiply each segment by the
exponential of its potential amplitude; for constant potentials the
exact weighted normalization reuses the unweighted masses, and the
unweighted run is literally the constant-zero weighted run, so their
outputs agree bitwise.

Determinism contract: node generation for the Leb quadrature follows
the canonical census order, is laid out in record-aligned chunks with a
fixed 2^16-sample target, and worker threads only process whole chunks
whose results are written to disjoint slices. Output bytes therefore do
not depend on the thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .census import CensusTable, census_table
from .convex import ConvexSet, CommonPerp, disk, geodesic, horoball, point_set
from .errors import InsufficientData
from .geometry import Point
from .gibbs import (
    ConstantPotential,
    GibbsContext,
    Potential,
    gibbs_context,
    potential_from_config,
    reweight_table,
    weighted_context,
)
from .lattice import LatticeGroup, PSL2Z, get_group, reduce_fd, reduce_points
from .measures import MassQuadrature, MeasureContext, bm_integrate, measure_context

CHUNK = 1 << 16


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """Bounded test function on the unit tangent bundle of the quotient.

    Gaussian kinds factor over the charts Re z, log Im z and direction
    angle; each factor is truncated at six sigmas so the support is
    exactly compact. A non-positive sigma disables its factor. Supports
    are chosen to vanish (to ~1e-5 or better) near the gluing walls of
    the standard domains, so the functions are continuous on the
    quotient to that accuracy. The plateau kind depends on the height
    only: one below y_flat, a squared-cosine roll-off to zero at y_zero,
    used for the truncated total-mass diagnostics.
    """

    psi_id: str
    kind: str
    params: tuple

    __test__ = False  # keep pytest from collecting this class

    def values(self, x, y, ang) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "plateau":
            y_flat, y_zero = self.params
            out = np.zeros_like(y)
            out[y <= y_flat] = 1.0
            roll = (y > y_flat) & (y < y_zero)
            u = (y[roll] - y_flat) / (y_zero - y_flat)
            out[roll] = np.cos(0.5 * math.pi * u) ** 2
            return out
        if self.kind == "gauss":
            cx, sx, cy, sy, ca, sa = self.params
            out = np.ones_like(y)
            if sx > 0:
                out = out * _gauss_factor((x - cx) / sx)
            if sy > 0:
                out = out * _gauss_factor((np.log(y) - cy) / sy)
            if sa > 0:
                ang = np.asarray(ang, dtype=np.float64)
                d = np.mod(ang - ca + math.pi, 2.0 * math.pi) - math.pi
                out = out * _gauss_factor(d / sa)
            return out
        raise ValueError(f"unknown test function kind {self.kind!r}")

    @property
    def y_cap(self) -> float:
        """Height above which the function vanishes (for targets)."""
        if self.kind == "plateau":
            return float(self.params[1])
        _, _, cy, sy, _, _ = self.params
        return float(np.exp(cy + 6.0 * sy)) if sy > 0 else 20.0

    def config(self) -> dict:
        return {"id": self.psi_id, "kind": self.kind, "params": list(self.params)}


def _gauss_factor(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.exp(-0.5 * u * u)
    out[np.abs(u) >= 6.0] = 0.0
    return out


def builtin_test_functions() -> list[TestFunction]:
    """Three narrow-convergence probes: height-only, position, and full
    position-direction bumps, all supported away from the domain walls."""
    return [
        TestFunction("height_bump", "gauss", (0.0, -1.0, math.log(2.2), 0.3, 0.0, -1.0)),
        TestFunction("xy_bump", "gauss", (0.0, 0.08, math.log(1.6), 0.15, 0.0, -1.0)),
        TestFunction("xya_bump", "gauss", (0.05, 0.07, math.log(1.5), 0.13, 0.3, 0.4)),
    ]


def mass_plateau() -> TestFunction:
    return TestFunction("plateau_12_16", "plateau", (12.0, 16.0))


def test_function_from_config(cfg: dict) -> TestFunction:
    if isinstance(cfg, str):
        for tf in builtin_test_functions() + [mass_plateau()]:
            if tf.psi_id == cfg:
                return tf
        raise ValueError(f"unknown test function id {cfg!r}")
    return TestFunction(cfg["id"], cfg["kind"], tuple(cfg["params"]))


# ---------------------------------------------------------------------------
# flow sampling and Leb integrals


def _flow_points(x0, y0, ang, s):
    """Unit-speed geodesic flow in closed form, vectorized.

    With sin/cos of the starting angle, the point after arc s is
        y(s) = y0 / (cosh s - sin(ang) sinh s),
        x(s) = x0 + y0 cos(ang) sinh s * (y(s)/y0),
    and the direction angle is atan2(sin(ang) cosh s - sinh s, cos(ang)).
    The denominator never vanishes, so vertical rays need no branch.
    """
    si, co = np.sin(ang), np.cos(ang)
    ch, sh = np.cosh(s), np.sinh(s)
    den = ch - si * sh
    y = y0 / den
    x = x0 + y0 * co * sh / den
    th = np.arctan2(si * ch - sh, co)
    return x, y, th


def leb_integrate(perp: CommonPerp, psi: TestFunction, group: LatticeGroup = PSL2Z,
                  tol: float = 1e-9) -> float:
    """Integral of psi along the reduced flow line of one perpendicular.

    Adaptive: panel width halves from 0.5 until two refinements agree
    within tol (absolute plus relative), which also makes the value
    additive under segment splitting to the same tolerance.
    """
    L = perp.length
    if L <= 0:
        return 0.0
    x0, y0, a0 = perp.u.base.x, perp.u.base.y, perp.u.angle
    xg, wg = np.polynomial.legendre.leggauss(6)

    def eval_h(h):
        n = max(1, int(math.ceil(L / h)))
        pw = L / n
        s = ((np.arange(n)[:, None] + 0.5 + 0.5 * xg[None, :]) * pw).ravel()
        w = np.broadcast_to(0.5 * pw * wg[None, :], (n, len(wg))).ravel()
        x, y, th = _flow_points(x0, y0, a0, s)
        xr, yr, ph = reduce_points(group, x, y)
        return float(np.dot(psi.values(xr, yr, th + ph), w))

    prev = eval_h(0.5)
    h = 0.25
    for _ in range(6):
        cur = eval_h(h)
        if abs(cur - prev) <= tol * (1.0 + abs(cur)):
            return cur
        prev, h = cur, 0.5 * h
    return prev


def _chunk_ranges(node_counts: np.ndarray) -> list[tuple[int, int]]:
    """Record-aligned chunks targeting CHUNK nodes each; a fixed
    function of the census, independent of threading."""
    cum = np.cumsum(node_counts)
    total = int(cum[-1]) if len(cum) else 0
    if total == 0:
        return []
    n_chunks = (total + CHUNK - 1) // CHUNK
    marks = np.searchsorted(cum, np.arange(1, n_chunks) * CHUNK, side="left") + 1
    bounds = [0] + sorted(set(int(m) for m in marks if m < len(node_counts))) + [len(node_counts)]
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def leb_table_sums(
    group: LatticeGroup,
    table: CensusTable,
    psis: list[TestFunction],
    *,
    h: float = 0.125,
    order: int = 6,
    threads: int = 1,
) -> np.ndarray:
    """Per-record Leb integrals for every test function, shape
    (len(psis), len(table)). Fixed-panel Gauss quadrature along each
    segment; all samples reduced in bulk."""
    n_rec = len(table)
    out = np.zeros((len(psis), n_rec))
    if n_rec == 0:
        return out
    xg, wg = np.polynomial.legendre.leggauss(order)
    n_panels = np.maximum(1, np.ceil(table.length / h).astype(np.int64))
    node_counts = n_panels * order
    ranges = _chunk_ranges(node_counts)

    def do_range(lo_hi):
        lo, hi = lo_hi
        npan = n_panels[lo:hi]
        counts = npan * order
        total = int(counts.sum())
        rec = np.repeat(np.arange(lo, hi), counts)
        local = np.repeat(np.arange(hi - lo), counts)
        k = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        pan, j = k // order, k % order
        pw = (table.length[lo:hi] / npan)[local]
        s = (pan + 0.5 + 0.5 * xg[j]) * pw
        w = 0.5 * pw * wg[j]
        x, y, th = _flow_points(table.ux[rec], table.uy[rec], table.uangle[rec], s)
        xr, yr, ph = reduce_points(group, x, y)
        ang = th + ph
        block = np.zeros((len(psis), hi - lo))
        for i, psi in enumerate(psis):
            np.add.at(block[i], rec - lo, psi.values(xr, yr, ang) * w)
        return lo, hi, block

    if threads <= 1:
        parts = [do_range(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(do_range, ranges))
    for lo, hi, block in parts:
        out[:, lo:hi] += block
    return out


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass(frozen=True)
class ExperimentConfig:
    group_name: str = "PSL2Z"
    set_minus: dict = field(default_factory=lambda: {"kind": "point", "x": 0.0, "y": 2.0})
    set_plus: dict = field(default_factory=lambda: {"kind": "point", "x": 0.0, "y": 2.0})
    basepoint: tuple = (0.0, 2.0)
    t_grid: tuple = (8.0, 9.0, 10.0, 11.0, 12.0)
    potential: dict | None = None
    test_functions: tuple = ("height_bump", "xy_bump", "xya_bump")
    quadrature: dict = field(default_factory=dict)
    seed: int = 20260823
    out_dir: str = "."
    cache_path: str | None = None
    threads: int = 1
    budget: int = 50_000_000

    def __post_init__(self):
        grid = tuple(self.t_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")

    @property
    def group(self) -> LatticeGroup:
        return get_group(self.group_name)

    @property
    def t_max(self) -> float:
        return float(self.t_grid[-1])

    def psis(self) -> list[TestFunction]:
        return [test_function_from_config(t) for t in self.test_functions]

    def quad_h(self) -> float:
        return float(self.quadrature.get("h", 0.125))

    def quad_order(self) -> int:
        return int(self.quadrature.get("order", 6))


def convex_from_config(cfg: dict) -> ConvexSet:
    kind = cfg.get("kind", "point")
    if kind == "point":
        return point_set(cfg.get("x", 0.0), cfg.get("y", 2.0))
    if kind == "horoball":
        center = cfg.get("center", "inf")
        if isinstance(center, str):
            if center not in ("inf", "oo"):
                raise ValueError(f"bad horoball center {center!r}")
            from .geometry import INFINITY

            return horoball(INFINITY, cfg.get("height", 1.0))
        return horoball(float(center), cfg.get("size", cfg.get("height", 1.0)))
    if kind == "disk":
        return disk(cfg.get("x", 0.0), cfg.get("y", 2.0), cfg["radius"])
    if kind == "geodesic":
        return geodesic(cfg["a"], cfg["b"])
    raise ValueError(f"unknown convex set kind {kind!r}")


def config_from_toml(path: str) -> ExperimentConfig:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    kw = {}
    for key in (
        "group_name", "set_minus", "set_plus", "potential", "seed",
        "out_dir", "cache_path", "threads", "budget", "quadrature",
    ):
        if key in raw:
            kw[key] = raw[key]
    if "group" in raw:
        kw["group_name"] = raw["group"]
    if "t_grid" in raw:
        kw["t_grid"] = tuple(float(t) for t in raw["t_grid"])
    if "basepoint" in raw:
        kw["basepoint"] = tuple(float(v) for v in raw["basepoint"])
    if "test_functions" in raw:
        kw["test_functions"] = tuple(raw["test_functions"])
    return ExperimentConfig(**kw)


@dataclass(frozen=True)
class ReportRow:
    t: float
    n_weighted: float
    n_raw: int
    n_normalized: float
    psi_id: str
    mu_psi: float
    target_psi: float
    rel_err: float
    total_mass: float


@dataclass
class ExperimentReport:
    group_name: str
    kind: str
    rows: list
    meta: dict = field(default_factory=dict)

    def rows_for(self, psi_id: str) -> list:
        return [r for r in self.rows if r.psi_id == psi_id]


# ---------------------------------------------------------------------------
# experiment runs

_TARGET_CACHE: dict = {}


def bm_target(group: LatticeGroup, psi: TestFunction, bm_total: float) -> float:
    """m(psi)/||m|| through the quadrature of the invariant measure."""
    key = (group.name, psi.psi_id, psi.params)
    if key not in _TARGET_CACHE:
        y_cap = max(6.0, psi.y_cap)
        _TARGET_CACHE[key] = bm_integrate(group, psi.values, y_cap)
    return _TARGET_CACHE[key] / bm_total


def _measure_setup(config: ExperimentConfig):
    group = config.group
    dm = convex_from_config(config.set_minus)
    dp = convex_from_config(config.set_plus)
    mctx = measure_context(group, MassQuadrature(), config.cache_path)
    table = census_table(group, dm, dp, config.t_max, budget=config.budget)
    return group, dm, dp, mctx, table


def _norms(mctx: MeasureContext, dm, dp) -> tuple[float, float]:
    return mctx.skinning(dm).induced_total, mctx.skinning(dp).induced_total


def run_count(config: ExperimentConfig) -> ExperimentReport:
    """Counting report: N(t) and its normalization by the predicted
    constant, which must trend to 1."""
    group, dm, dp, mctx, table = _measure_setup(config)
    s_minus, s_plus = _norms(mctx, dm, dp)
    const = mctx.delta * mctx.bm_total / (s_minus * s_plus)
    rows = []
    for t in config.t_grid:
        mask = table.length <= t + 1e-12
        n_w = float(table.multiplicity[mask].sum())
        rows.append(
            ReportRow(
                t=float(t),
                n_weighted=n_w,
                n_raw=int(mask.sum()),
                n_normalized=n_w * const / math.exp(mctx.delta * t),
                psi_id="",
                mu_psi=math.nan,
                target_psi=math.nan,
                rel_err=math.nan,
                total_mass=math.nan,
            )
        )
    return ExperimentReport(
        group.name, "count", rows,
        {"constant": 1.0 / const, "sigma_minus": s_minus, "sigma_plus": s_plus,
         "bm_total": mctx.bm_total},
    )


def _run_measure(config: ExperimentConfig, gctx: GibbsContext) -> ExperimentReport:
    """Shared engine for the unweighted and weighted equidistribution
    runs; the unweighted run is the constant-zero weighted run."""
    group, dm, dp, mctx, table = _measure_setup(config)
    s_minus, s_plus = _norms(mctx, dm, dp)
    table = reweight_table(gctx.potential, table)

    fitted = not isinstance(gctx.potential, ConstantPotential)
    if fitted:
        # no exact equilibrium masses: fit the normalization constant so
        # the weighted length sum at t_max matches its unweighted shape
        delta_f = gctx.delta_F
        wsum = float((table.multiplicity * table.weight * table.length).sum())
        t_ref = config.t_max
        norm_const = t_ref * math.exp(delta_f * t_ref) / wsum if wsum > 0 else math.nan
        target_ctx = mctx
    else:
        wctx = weighted_context(gctx, mctx)
        delta_f = wctx.delta
        norm_const = delta_f * wctx.bm_total / (s_minus * s_plus)
        target_ctx = wctx

    psis = config.psis()
    plateau = mass_plateau()
    all_psis = psis + [plateau]
    sums = leb_table_sums(
        group, table, all_psis,
        h=config.quad_h(), order=config.quad_order(), threads=config.threads,
    )
    contrib = table.multiplicity * table.weight
    targets = [bm_target(group, psi, target_ctx.bm_total) for psi in all_psis]

    rows = []
    for t in config.t_grid:
        mask = table.length <= t + 1e-12
        n_w = float(contrib[mask].sum())
        norm = norm_const / (t * math.exp(delta_f * t))
        mass = norm * float((contrib[mask] * sums[-1, mask]).sum())
        for i, psi in enumerate(psis):
            mu = norm * float((contrib[mask] * sums[i, mask]).sum())
            tgt = targets[i]
            rows.append(
                ReportRow(
                    t=float(t),
                    n_weighted=n_w,
                    n_raw=int(mask.sum()),
                    n_normalized=math.nan,
                    psi_id=psi.psi_id,
                    mu_psi=mu,
                    target_psi=tgt,
                    rel_err=abs(mu - tgt) / abs(tgt) if tgt else math.inf,
                    total_mass=mass,
                )
            )
    meta = {
        "delta_F": delta_f,
        "potential": gctx.potential.config(),
        "fitted_normalization": fitted,
        "plateau_target": targets[-1],
        "sigma_minus": s_minus,
        "sigma_plus": s_plus,
    }
    if fitted:
        meta["delta_F_uncertainty"] = gctx.delta_F_uncertainty
    return ExperimentReport(group.name, "weighted" if fitted or
                            getattr(gctx.potential, "value", None) else "equi",
                            rows, meta)


def run_equi(config: ExperimentConfig) -> ExperimentReport:
    """Equidistribution report for the unweighted counting measures."""
    gctx = GibbsContext(ConstantPotential(0.0), 1.0)
    report = _run_measure(config, gctx)
    report.kind = "equi"
    return report


def run_weighted(config: ExperimentConfig) -> ExperimentReport:
    """Weighted equidistribution report for the configured potential."""
    if config.potential is None:
        raise ValueError("run_weighted requires a potential in the config")
    pot = potential_from_config(config.potential, config.group)
    if isinstance(pot, ConstantPotential):
        gctx = GibbsContext(pot, 1.0 + pot.value)
    else:
        x0 = Point(*config.basepoint)
        gctx = gibbs_context(pot, t_max=min(6.0, config.t_max), x0=x0)
    report = _run_measure(config, gctx)
    report.kind = "weighted"
    return report


def run_directions(config: ExperimentConfig) -> dict:
    """36-bin histograms of initial and terminal loop directions with
    their total-variation distance to the uniform law."""
    group, dm, dp, mctx, table = _measure_setup(config)
    n_bins = 36
    report = {"group": group.name, "bins": n_bins, "rows": []}
    # terminal tangents reduced into the standard domain
    _, _, phase = reduce_points(group, table.vx.copy(), table.vy.copy())
    term_ang = table.vangle + phase
    for t in config.t_grid:
        mask = table.length <= t + 1e-12
        row = {"t": float(t), "n": float(table.multiplicity[mask].sum())}
        for name, ang in (("initial", table.uangle[mask]),
                          ("terminal", term_ang[mask])):
            idx = np.mod(np.floor((ang + math.pi) / (2.0 * math.pi / n_bins)).astype(int), n_bins)
            hist = np.zeros(n_bins)
            np.add.at(hist, idx, table.multiplicity[mask])
            total = hist.sum()
            tv = 0.5 * float(np.abs(hist / total - 1.0 / n_bins).sum()) if total else 1.0
            row[name] = hist.tolist()
            row[f"tv_{name}"] = tv
        report["rows"].append(row)
    return report


def residual_fit(report, psi_id: str | None = None) -> dict:
    """Fit |mu_t - target| against a/t + b e^{-kappa t}.

    Accepts an ExperimentReport (selecting one test function) or a bare
    list of (t, residual) pairs. Reports the best-fitting coefficients
    over a kappa grid and whether the sequence t * residual stays
    bounded (slope test), supporting the O(1/t) error claim
    qualitatively.
    """
    if isinstance(report, ExperimentReport):
        if psi_id is None:
            psi_id = report.rows[0].psi_id
        pts = [(r.t, abs(r.mu_psi - r.target_psi)) for r in report.rows_for(psi_id)]
    else:
        pts = [(float(t), float(r)) for t, r in report]
    if len(pts) < 4:
        raise InsufficientData("residual fit needs at least 4 t-values")
    t = np.array([p[0] for p in pts])
    r = np.array([p[1] for p in pts])
    best = None
    for kappa in (0.125, 0.25, 0.5, 0.75, 1.0, 1.5):
        A = np.column_stack([1.0 / t, np.exp(-kappa * t)])
        coef, res, _, _ = np.linalg.lstsq(A, r, rcond=None)
        rss = float(((A @ coef - r) ** 2).sum())
        if best is None or rss < best["rss"]:
            best = {"a": float(coef[0]), "b": float(coef[1]), "kappa": kappa, "rss": rss}
    tr = t * r
    slope = float(np.polyfit(t, tr, 1)[0])
    span = float(t[-1] - t[0])
    best["bounded"] = bool(abs(slope) * span <= 0.25 * float(np.mean(tr)) + 1e-12)
    best["t_residuals"] = tr.tolist()
    return best


# ---------------------------------------------------------------------------
# CSV and SVG output

_FMT = "%.17g"


def write_census_csv(table: CensusTable, path: str) -> None:
    cols = "index,a,b,c,d,length,u_x,u_y,u_angle,v_x,v_y,v_angle,multiplicity,weight"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(cols + "\n")
        for i in range(len(table)):
            vals = [
                str(i),
                str(int(table.rep_a[i])), str(int(table.rep_b[i])),
                str(int(table.rep_c[i])), str(int(table.rep_d[i])),
                _FMT % table.length[i],
                _FMT % table.ux[i], _FMT % table.uy[i], _FMT % table.uangle[i],
                _FMT % table.vx[i], _FMT % table.vy[i], _FMT % table.vangle[i],
                _FMT % table.multiplicity[i], _FMT % table.weight[i],
            ]
            fh.write(",".join(vals) + "\n")


def read_census_csv(path: str) -> dict:
    """Independent reader: parses the census CSV back into arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out = {}
    for j, name in enumerate(header):
        col = [row[j] for row in rows]
        if name in ("index", "a", "b", "c", "d"):
            out[name] = np.array([int(v) for v in col], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in col])
    return out


def write_report_csv(report: ExperimentReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,N,N_normalized,psi_id,mu_t_psi,target_psi,rel_err,total_mass\n")
        for r in report.rows:
            fh.write(",".join([
                _FMT % r.t, _FMT % r.n_weighted, _FMT % r.n_normalized,
                r.psi_id, _FMT % r.mu_psi, _FMT % r.target_psi,
                _FMT % r.rel_err, _FMT % r.total_mass,
            ]) + "\n")


def write_directions_json(report: dict, path: str) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")


# canvas map: px = 400 + 480 x, py = 600 - 140 y (documented, fixed)
_SVG_SX, _SVG_SY, _SVG_OX, _SVG_OY = 480.0, 140.0, 400.0, 600.0


def _svg_xy(x: float, y: float) -> str:
    return "%.6f,%.6f" % (_SVG_OX + _SVG_SX * x, _SVG_OY - _SVG_SY * y)


def render_loops_svg(config: ExperimentConfig, t: float) -> str:
    """Deterministic picture of all loops of length <= t at the
    configured base point, reduced into the standard domain.

    Loops are drawn in census-canonical order; every sample point is
    reduced and a new polyline starts whenever the reducing element
    changes. The canvas transform is the fixed affine map documented
    above.
    """
    group = config.group
    dm = convex_from_config(config.set_minus)
    dp = convex_from_config(config.set_plus)
    table = census_table(group, dm, dp, t, budget=config.budget)

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" '
        'viewBox="0 0 800 600">',
        '<rect width="800" height="600" fill="white"/>',
    ]
    y_top = (_SVG_OY - 10.0) / _SVG_SY
    outline = [_svg_xy(-0.5, y_top), _svg_xy(-0.5, math.sqrt(3.0) / 2.0)]
    for k in range(101):
        ang = (2.0 * math.pi / 3.0) - k * (math.pi / 3.0) / 100.0
        outline.append(_svg_xy(math.cos(ang), math.sin(ang)))
    outline.append(_svg_xy(0.5, y_top))
    parts.append(
        '<polyline fill="none" stroke="#888888" stroke-width="1.2" points="%s"/>'
        % " ".join(outline)
    )

    for i in range(len(table)):
        x0, y0 = float(table.ux[i]), float(table.uy[i])
        a0 = float(table.uangle[i])
        L = float(table.length[i])
        s, samples = 0.0, []
        while s < L:
            samples.append(s)
            x, y, _ = _flow_points(x0, y0, a0, s)
            # adaptive: denser where the picture moves faster
            s += max(0.004, min(0.08, 2.0 / (_SVG_SY * max(float(y), 0.2))))
        samples.append(L)
        pieces, cur, cur_key = [], [], None
        for sv in samples:
            x, y, _ = _flow_points(x0, y0, a0, sv)
            z_red, g = reduce_fd(group, Point(float(x), float(y)))
            key = g.key()
            if key != cur_key and cur:
                pieces.append(cur)
                cur = []
            cur_key = key
            cur.append(_svg_xy(z_red.x, z_red.y))
        if cur:
            pieces.append(cur)
        for piece in pieces:
            if len(piece) >= 2:
                parts.append(
                    '<polyline fill="none" stroke="#1f3a93" stroke-width="0.8" '
                    'points="%s"/>' % " ".join(piece)
                )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
