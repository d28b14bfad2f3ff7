"""Command-line entry point.

Subcommands cover the full workflow: ``simulate`` one engagement under a
chosen model, ``optimize`` defender control points, ``montecarlo`` a seeded
stochastic ensemble, ``compare`` all models against the ensemble, and
``tradeoff`` the defenders-vs-cost sweep. Outputs are deterministic given
flags; report commands also render a PNG figure next to the delimited
output (on by default for compare/tradeoff, opt-in elsewhere).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bernstein import load_control_points, save_control_points
from .engagement import Model, propagate, result_to_csv
from .errors import SwarmDefError
from .experiments import (WEAPON_CONFIGS, comparison_to_csv, run_comparison,
                          tradeoff_sweep, tradeoff_to_csv)
from .montecarlo import mc_ensemble, mcstats_to_csv, mcstats_to_json
from .optimizer import (OptimizerOptions, initialize_control_points, optimize,
                        trace_to_json)
from .scenario import load_scenario

_MODEL_CHOICES = [m.value for m in Model]
_MODE_CHOICES = ["finite-difference", "simultaneous-perturbation", "pattern"]
_INIT_CHOICES = ["hold", "radial-picket", "line-to-threat"]


def _team_sizes(text: str) -> list[int]:
    """Parse '1:12', '4', or '1,3,5' into a list of team sizes."""
    try:
        if ":" in text:
            lo, hi = text.split(":")
            sizes = list(range(int(lo), int(hi) + 1))
        else:
            sizes = [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected M, lo:hi, or a comma list, got {text!r}")
    if not sizes or any(m < 1 for m in sizes):
        raise argparse.ArgumentTypeError("team sizes must be positive")
    return sizes


def _figure_path(out: str) -> Path:
    return Path(out).with_suffix(".png")


def _load_cp(args, cfg):
    if args.trajectories:
        return load_control_points(args.trajectories)
    return initialize_control_points(cfg, "hold")


def _seed(args, cfg) -> int:
    return cfg.rng_seed if args.seed is None else args.seed


def _optimizer_options(args) -> OptimizerOptions:
    return OptimizerOptions(
        max_iterations=args.iterations,
        gradient_mode=args.mode,
        step_seed=args.seed if args.seed is not None else 0,
    )


def _cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    cp = _load_cp(args, cfg)
    result = propagate(Model.parse(args.model), cfg, cp)
    result_to_csv(result, cfg, args.out, include_positions=args.positions)
    if args.figures:
        from . import plots
        plots.engagement_figure(result, cfg, _figure_path(args.out))
    print(f"cost J = {result.cost!r} ({cfg.n_steps} steps, model {args.model})")
    return 0


def _cmd_optimize(args) -> int:
    cfg = load_scenario(args.scenario)
    model = Model.parse(args.model)
    init_cp = initialize_control_points(cfg, args.init)
    trace = optimize(model, cfg, init_cp, _optimizer_options(args))
    save_control_points(trace.best_cp, args.out)
    if args.trace:
        trace_to_json(trace, args.trace)
    if args.figures:
        from . import plots
        plots.trace_figure(trace, _figure_path(args.out))
    status = "feasible" if trace.feasible else "infeasible"
    print(f"optimized J = {trace.best_cost!r} ({status}, "
          f"{trace.evaluations} evaluations)")
    return 0


def _cmd_montecarlo(args) -> int:
    cfg = load_scenario(args.scenario)
    cp = _load_cp(args, cfg)
    stats = mc_ensemble(cfg, cp, args.runs, _seed(args, cfg))
    mcstats_to_csv(stats, cfg, args.out)
    if args.summary:
        mcstats_to_json(stats, args.summary)
    if args.figures:
        from . import plots
        plots.mc_figure(stats, cfg, _figure_path(args.out))
    print(f"HVU survival frequency = {stats.hvu_frequency[-1]!r} "
          f"over {stats.n_runs} runs")
    return 0


def _cmd_compare(args) -> int:
    cfg = load_scenario(args.scenario)
    cp = _load_cp(args, cfg)
    report = run_comparison(cfg, cp, args.runs, _seed(args, cfg))
    comparison_to_csv(report, args.out)
    if not args.no_figures:
        from . import plots
        plots.comparison_figure(report, _figure_path(args.out))
    final = {m.value: report.q0[m][-1] for m in Model}
    print("final HVU survival: "
          + ", ".join(f"{name}={value!r}" for name, value in final.items())
          + f", mc={report.mc.hvu_frequency[-1]!r}")
    return 0


def _cmd_tradeoff(args) -> int:
    cfg = load_scenario(args.scenario)
    model = Model.parse(args.model)
    rows = tradeoff_sweep(
        cfg, model, args.defenders, args.weapon_config,
        _optimizer_options(args), record_timings=args.timings)
    tradeoff_to_csv(rows, args.out)
    if not args.no_figures:
        from . import plots
        plots.tradeoff_figure(rows, _figure_path(args.out))
    print(f"{len(rows)} rows written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmdef",
        description="Swarm-vs-swarm engagement simulation and defender "
                    "trajectory optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, trajectories=True):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        if trajectories:
            p.add_argument("--trajectories",
                           help="control-points JSON (default: hold in place)")
        p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("simulate", help="propagate one engagement")
    p.add_argument("--model", required=True, choices=_MODEL_CHOICES)
    add_common(p)
    p.add_argument("--positions", action="store_true",
                   help="append per-agent position columns")
    p.add_argument("--figures", action="store_true",
                   help="render a PNG next to the CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize", help="optimize defender control points")
    p.add_argument("--model", required=True, choices=_MODEL_CHOICES)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output control-points JSON")
    p.add_argument("--trace", help="also write the iterate trace JSON here")
    p.add_argument("--init", default="radial-picket", choices=_INIT_CHOICES)
    p.add_argument("--mode", default="finite-difference", choices=_MODE_CHOICES)
    p.add_argument("--iterations", type=int, default=60,
                   help="inner iterations per penalty stage")
    p.add_argument("--seed", type=int, default=None,
                   help="search seed (stochastic modes)")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("montecarlo", help="run a seeded stochastic ensemble")
    add_common(p)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (default: scenario rng_seed)")
    p.add_argument("--summary", help="also write a summary JSON here")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("compare", help="all models vs the stochastic ensemble")
    add_common(p)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("tradeoff", help="defenders-vs-cost sweep")
    p.add_argument("--model", required=True, choices=_MODEL_CHOICES)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--defenders", type=_team_sizes, required=True,
                   metavar="LO:HI", help="team sizes: 4, 1:12, or 1,3,5")
    p.add_argument("--weapon-config", default="symmetric",
                   choices=list(WEAPON_CONFIGS))
    p.add_argument("--mode", default="finite-difference", choices=_MODE_CHOICES)
    p.add_argument("--iterations", type=int, default=60)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--timings", action="store_true",
                   help="record wall time per row (nondeterministic column)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_tradeoff)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SwarmDefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
