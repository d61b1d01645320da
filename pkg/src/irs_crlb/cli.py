"""Command-line entry point ``irs-crlb``."""

import argparse
import csv
from dataclasses import replace
import logging
import sys

from .errors import ConfigError
from .experiment import (
    build_scene,
    design_phases,
    emit_csv,
    emit_trace_log,
    load_scenario,
    parse_grid,
    phases_to_rows,
    preset,
    run_gamma_sweep,
    run_sigma_sweep,
)
from .fisher import assemble_full_fim, crlb, fim_blocks
from .geometry import ChannelSet
from .optimizer import OptimizerConfig
from .signal_model import NoiseModel
from .verify import run_all


def _scenario(args):
    if args.config:
        return load_scenario(args.config)
    return preset(args.preset)


def _optimizer_cfg(args):
    return OptimizerConfig(
        restarts=args.restarts,
        residual_eps=args.eps,
        max_outer_iters=args.max_iters,
        seed=args.seed if args.seed is not None else 0,
    )


def _add_common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", default="paper-3irs", help="built-in scenario (default: paper-3irs)")
    src.add_argument("--config", help="JSON scenario file")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--eps", type=float, default=1e-6, help="coupling residual tolerance")
    p.add_argument("--max-iters", type=int, default=20, help="AO passes per penalty round")
    p.add_argument("--no-optimize", action="store_true", help="use random phases instead of AO")


def cmd_sweep(args):
    cfg = _scenario(args)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    grid = parse_grid(args.grid)
    scenarios = tuple(int(s) for s in args.scenarios.split(","))
    kw = dict(scenarios=scenarios, optimizer_cfg=_optimizer_cfg(args), optimize=not args.no_optimize, workers=args.workers)
    if args.axis == "sigma2":
        results = run_sigma_sweep(cfg, grid, **kw)
    else:
        results = run_gamma_sweep(cfg, grid, sigma2=args.sigma2, **kw)
    emit_csv(results, args.out)
    if args.trace:
        emit_trace_log(results, args.trace)
    bad = sum(not ok for r in results for ok in r.converged)
    print(f"wrote {sum(len(r.axis_values) for r in results)} rows to {args.out}" + (f" ({bad} flagged)" if bad else ""))
    return 0


def cmd_design(args):
    cfg = _scenario(args)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    scene = build_scene(cfg)
    phases, ok, _ = design_phases(scene, cfg.sigma2, _optimizer_cfg(args), optimize=not args.no_optimize)
    if phases is None:
        print("design failed", file=sys.stderr)
        return 1
    channels = ChannelSet(scene.channels.h_los, scene.problem(cfg.sigma2).consistent_h(phases))
    res = crlb(assemble_full_fim(fim_blocks(scene.radar, channels, scene.target, NoiseModel(sigma2=cfg.sigma2))))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("irs", "element", "phase_rad"))
        for k, m, p in phases_to_rows(phases):
            writer.writerow((k, m, f"{p:.17g}"))
    print(f"trace CRLB {res.trace_total:.6g}  surrogate {res.surrogate:.6g}  converged {ok}")
    return 0 if ok else 2


def cmd_verify(args):
    results = run_all()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="irs-crlb", description="CRLB analysis and phase design for multi-IRS radar")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="CRLB versus noise variance or LSR")
    _add_common(p)
    p.add_argument("--axis", choices=("sigma2", "gamma"), required=True)
    p.add_argument("--grid", required=True, help="start:stop:log|lin:count or comma list")
    p.add_argument("--scenarios", default="0,1,3", help="IRS counts to compare (default 0,1,3)")
    p.add_argument("--sigma2", type=float, default=0.1, help="noise variance for the gamma sweep")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="write optimizer traces as JSON lines")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("design", help="optimize IRS phases for one scenario")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="run analytic-versus-oracle checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
