"""Command-line entry point: run, sweep, rrf and oracle subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Dict, List, Optional

from .errors import ConfigurationError, InvalidInputError
from .geometry import Point
from .harness import (
    ScenarioConfig,
    Strategy,
    SweepSpec,
    TABLE_AXES,
    assign_orientations,
    deploy_random,
    evaluate,
    prepare,
    rows_to_csv,
    run_scenario,
    sweep,
)
from .render import render_svg
from .rrf import PositionMode, compute_all_rrf
from .selfcheck import run_oracle
from .voronoi import Deployment, build_voronoi


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--config", help="JSON file with scenario fields; flags override it")
    g.add_argument("--region", nargs=2, type=float, metavar=("W", "H"))
    g.add_argument("--sensors", type=int, metavar="M")
    g.add_argument("--range", type=float, metavar="R", dest="r_s")
    g.add_argument("--angle", type=float, metavar="DEG", help="view angle in degrees")
    g.add_argument("--rho-min", type=float)
    g.add_argument("--rho-max", type=float)
    g.add_argument("--epsilon", type=float, help="boundary threshold (default range/3)")
    g.add_argument("--strategy", choices=[s.value for s in Strategy])
    g.add_argument("--case", choices=["I", "II", "III"])
    g.add_argument("--runs", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--tol", type=float, help="RRF bisection tolerance")


def build_config(args: argparse.Namespace) -> ScenarioConfig:
    data: Dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
    flags = {
        "region": args.region,
        "m": args.sensors,
        "r_s": args.r_s,
        "theta_s": args.angle,
        "rho_min": args.rho_min,
        "rho_max": args.rho_max,
        "epsilon": args.epsilon,
        "strategy": args.strategy,
        "mode": args.case,
        "runs": args.runs,
        "seed": args.seed,
        "tol": args.tol,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    return ScenarioConfig.from_mapping(data)


def _cmd_run(args) -> int:
    cfg = build_config(args)
    res = run_scenario(cfg, args.run_index, union_samples=args.union_samples)
    out = res.metrics()
    out["config"] = {
        "region": list(cfg.region), "m": cfg.m, "r_s": cfg.r_s, "theta_deg": cfg.theta_deg,
        "rho_min": cfg.rho_min, "rho_max": cfg.rho_max, "epsilon": cfg.epsilon,
        "strategy": cfg.strategy.value, "case": cfg.mode.value, "seed": cfg.seed,
        "run_index": args.run_index,
    }
    if args.trace and res.trace is not None:
        out["trace"] = res.trace.to_lines()
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    if args.svg:
        _, diagram, _ = prepare(cfg, args.run_index)
        render_svg(res.states, diagram, cfg, args.svg)
    return 0


def _rho_pair(text: str):
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}") from None


def _cmd_sweep(args) -> int:
    cfg = build_config(args)
    axes = []
    if args.table is not None:
        axes = list(TABLE_AXES[args.table])
    for name, vals in (
        ("theta_s", args.angles), ("r_s", args.ranges), ("m", args.sensor_counts),
        ("rho", args.rho_pairs),
    ):
        if vals:
            axes = [a for a in axes if a[0] != name] + [(name, tuple(vals))]
    if not axes:
        axes = [("theta_s", (cfg.theta_deg,))]
    spec = SweepSpec(
        base=cfg,
        axes=tuple(axes),
        strategies=tuple(args.strategies or list(Strategy)),
        modes=tuple(args.cases or list(PositionMode)),
    )
    text = rows_to_csv(sweep(spec))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_rrf(args) -> int:
    cfg = build_config(args)
    if args.positions:
        with open(args.positions, encoding="utf-8") as fh:
            pts = json.load(fh)
        dep = Deployment(cfg.region_obj, tuple(Point(float(x), float(y)) for x, y in pts))
    else:
        dep = deploy_random(cfg, args.run_index)
    diagram = build_voronoi(dep)
    res = compute_all_rrf(diagram, dep, cfg.rho_min, cfg.rho_max, cfg.tol)
    rows = [
        {"sensor": i, "x": p.x, "y": p.y, "rho_raw": r.rho_raw, "rho": r.rho,
         "active_neighbor": r.active_neighbor}
        for i, (p, r) in enumerate(zip(dep.positions, res))
    ]
    json.dump(rows, sys.stdout, indent=2, allow_nan=True)
    sys.stdout.write("\n")
    return 0


def _cmd_oracle(args) -> int:
    recs = run_oracle(args.instances, args.samples, args.seed)
    bad = 0
    for r in recs:
        bad += not r.ok
        print(
            f"{'PASS' if r.ok else 'FAIL'} instance={r.instance} exact={r.exact:.3f} "
            f"mc={r.estimate:.3f} diff={abs(r.exact - r.estimate):.3f} allowed={r.allowed:.3f}"
        )
    print(f"{len(recs) - bad}/{len(recs)} instances within tolerance")
    return 1 if bad else 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robustcover", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one realisation; metrics as JSON")
    _scenario_flags(run)
    run.add_argument("--run-index", type=int, default=0)
    run.add_argument("--svg", metavar="PATH")
    run.add_argument("--union-samples", type=int, default=10**5)
    run.add_argument("--trace", action="store_true", help="include the reorientation log")
    run.set_defaults(func=_cmd_run)

    sw = sub.add_parser("sweep", help="parameter grid; CSV output")
    _scenario_flags(sw)
    sw.add_argument("--table", type=int, choices=sorted(TABLE_AXES))
    sw.add_argument("--angles", type=float, nargs="+", metavar="DEG")
    sw.add_argument("--ranges", type=float, nargs="+", metavar="R")
    sw.add_argument("--sensor-counts", type=int, nargs="+", metavar="M")
    sw.add_argument("--rho-pairs", type=_rho_pair, nargs="+", metavar="MIN:MAX")
    sw.add_argument("--strategies", nargs="+", choices=[s.value for s in Strategy])
    sw.add_argument("--cases", nargs="+", choices=["I", "II", "III"])
    sw.add_argument("--out", metavar="PATH")
    sw.set_defaults(func=_cmd_sweep)

    rr = sub.add_parser("rrf", help="per-sensor RRF for a deployment")
    _scenario_flags(rr)
    rr.add_argument("--positions", metavar="JSON", help="file with a list of [x, y] pairs")
    rr.add_argument("--run-index", type=int, default=0)
    rr.set_defaults(func=_cmd_rrf)

    orc = sub.add_parser("oracle", help="Monte-Carlo check of the area routines")
    orc.add_argument("--instances", type=int, default=20)
    orc.add_argument("--samples", type=int, default=10**5)
    orc.add_argument("--seed", type=int, default=0)
    orc.set_defaults(func=_cmd_oracle)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
