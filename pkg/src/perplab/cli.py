"""Command-line front end for the perpendicular laboratory.

Subcommands map one-to-one onto the experiment engine: masses, census,
count, equi, directions, weighted, loops-svg, selftest. Every run is
configured by an optional TOML file plus a few overriding flags, and
writes its artifact (CSV, JSON or SVG) to --out.

Exit codes: 0 success, 1 usage or configuration error, 2 enumeration
budget overflow, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .errors import BudgetExceeded, LatticeOverflow, PerpLabError
from .lab import (
    ExperimentConfig,
    config_from_toml,
    convex_from_config,
    render_loops_svg,
    run_count,
    run_directions,
    run_equi,
    run_weighted,
    write_census_csv,
    write_directions_json,
    write_report_csv,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perplab",
        description="numerical laboratory for common perpendiculars in the hyperbolic plane",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("masses", "invariant and skinning masses for the configured group and sets"),
        ("census", "write the perpendicular census as CSV"),
        ("count", "counting report N(t) with its normalization"),
        ("equi", "equidistribution report against the invariant measure"),
        ("directions", "direction histograms of initial and terminal tangents"),
        ("weighted", "potential-weighted equidistribution report"),
        ("loops-svg", "deterministic SVG picture of loops in the standard domain"),
        ("selftest", "fast internal consistency checks"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", help="TOML experiment configuration")
        p.add_argument("--out", help="output file path")
        p.add_argument("--threads", type=int, help="worker threads for quadrature")
        p.add_argument("--t-max", type=float, dest="t_max", help="largest cutoff length")
        p.add_argument("--cache", help="JSON cache path for quadrature masses")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config:
        if not os.path.exists(args.config):
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg = config_from_toml(args.config)
    else:
        cfg = ExperimentConfig()
    kw = {}
    if args.threads is not None:
        kw["threads"] = args.threads
    if args.cache is not None:
        kw["cache_path"] = args.cache
    if args.t_max is not None:
        grid = tuple(t for t in cfg.t_grid if t < args.t_max - 1e-12) + (args.t_max,)
        kw["t_grid"] = grid
    if kw:
        from dataclasses import replace

        cfg = replace(cfg, **kw)
    return cfg


def _out_path(args, cfg: ExperimentConfig, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(cfg.out_dir, default_name)


def _cmd_masses(args) -> int:
    from .measures import MassQuadrature, measure_context

    cfg = _load_config(args)
    mctx = measure_context(cfg.group, MassQuadrature(), cfg.cache_path)
    dm = convex_from_config(cfg.set_minus)
    dp = convex_from_config(cfg.set_plus)
    payload = {
        "group": cfg.group_name,
        "delta": mctx.delta,
        "bm_total": mctx.bm_total,
        "sigma_minus": mctx.skinning(dm).induced_total,
        "sigma_plus": mctx.skinning(dp).induced_total,
        "diagnostics": dict(mctx.diagnostics),
    }
    text = json.dumps(payload, sort_keys=True, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_census(args) -> int:
    from .census import census_table

    cfg = _load_config(args)
    table = census_table(
        cfg.group,
        convex_from_config(cfg.set_minus),
        convex_from_config(cfg.set_plus),
        cfg.t_max,
        budget=cfg.budget,
    )
    path = _out_path(args, cfg, "census.csv")
    write_census_csv(table, path)
    print(f"census: {len(table)} rows (weighted count {table.count():.6g}) "
          f"to t={cfg.t_max:g} -> {path}")
    return 0


def _print_report(report) -> None:
    for r in report.rows:
        if r.psi_id:
            print(f"t={r.t:6.2f}  {r.psi_id:14s} mu={r.mu_psi:.8g}  "
                  f"target={r.target_psi:.8g}  rel_err={r.rel_err:.4f}")
        else:
            print(f"t={r.t:6.2f}  N={r.n_weighted:.6g}  normalized={r.n_normalized:.6f}")


def _cmd_count(args) -> int:
    cfg = _load_config(args)
    report = run_count(cfg)
    write_report_csv(report, _out_path(args, cfg, "count.csv"))
    _print_report(report)
    return 0


def _cmd_equi(args) -> int:
    cfg = _load_config(args)
    report = run_equi(cfg)
    write_report_csv(report, _out_path(args, cfg, "equi.csv"))
    _print_report(report)
    return 0


def _cmd_weighted(args) -> int:
    cfg = _load_config(args)
    if cfg.potential is None:
        from dataclasses import replace

        cfg = replace(cfg, potential={"kind": "constant", "value": 0.0})
    report = run_weighted(cfg)
    write_report_csv(report, _out_path(args, cfg, "weighted.csv"))
    print(f"delta_F={report.meta['delta_F']:.8g}  "
          f"fitted={report.meta['fitted_normalization']}")
    _print_report(report)
    return 0


def _cmd_directions(args) -> int:
    cfg = _load_config(args)
    report = run_directions(cfg)
    write_directions_json(report, _out_path(args, cfg, "directions.json"))
    for row in report["rows"]:
        print(f"t={row['t']:6.2f}  n={row['n']:.6g}  "
              f"tv_initial={row['tv_initial']:.5f}  tv_terminal={row['tv_terminal']:.5f}")
    return 0


def _cmd_loops_svg(args) -> int:
    cfg = _load_config(args)
    t = args.t_max if args.t_max is not None else 4.0
    svg = render_loops_svg(cfg, t)
    path = _out_path(args, cfg, "loops.svg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"loops-svg: t={t:g}, {svg.count(chr(60) + 'polyline')} polylines -> {path}")
    return 0


def _cmd_selftest(args) -> int:
    from .acceptance import selftest_checks

    failures = 0
    for name, ok, detail in selftest_checks():
        status = "ok" if ok else "FAIL"
        print(f"selftest {name}: {status} ({detail})")
        if not ok:
            failures += 1
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 3
    print("selftest: all checks passed")
    return 0


_COMMANDS = {
    "masses": _cmd_masses,
    "census": _cmd_census,
    "count": _cmd_count,
    "equi": _cmd_equi,
    "directions": _cmd_directions,
    "weighted": _cmd_weighted,
    "loops-svg": _cmd_loops_svg,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (BudgetExceeded, LatticeOverflow) as exc:
        print(f"perplab: enumeration budget exceeded: {exc}", file=sys.stderr)
        return 2
    except (PerpLabError, OSError, ValueError) as exc:
        print(f"perplab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
