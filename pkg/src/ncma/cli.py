"""Command line entry point: ``ncma run | sweep | oracle``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config
from .oracles import oracle_suite
from .phy import DecoderMode
from .sim import TIERS, emit_results, run_many, simulate_phy, write_trace

# user C sweeps 7.5, 8.5, ..., 14.5 and then 15 dB
FIG_SWEEP = tuple(7.5 + i for i in range(8)) + (15.0,)
EXP_SWEEP = tuple(float(s) for s in range(8, 15))

PRESETS = {
    "fig4": ([DecoderMode.RATE_IDENTICAL_QPSK, DecoderMode.RATE_IDENTICAL_BPSK], 7.0, FIG_SWEEP, 2000),
    "fig7": ([DecoderMode.DR_NCMA, DecoderMode.SR_NCMA], 7.0, FIG_SWEEP, 2000),
    "exp": (list(DecoderMode), 8.0, EXP_SWEEP, 1000),
}


def preset_configs(name: str, seed: int = 0, n_beacons: int | None = None) -> list[ScenarioConfig]:
    modes, snr_ab, sweep, beacons = PRESETS[name]
    return [ScenarioConfig(mode=m, snr_a_db=snr_ab, snr_b_db=snr_ab, snr_c_db=sweep,
                           n_beacons=n_beacons or beacons, seed=seed) for m in modes]


def _print_summary(records) -> None:
    for rec in records:
        th = "  ".join(f"{t}={rec.throughput[t]['sys']:.3f}" for t in TIERS)
        print(f"{rec.mode.value:8s} C={rec.snr_c_db:5.1f} dB  Th_sys {th}  "
              f"(A={rec.throughput['mac']['A']:.3f} B={rec.throughput['mac']['B']:.3f} "
              f"C={rec.throughput['mac']['C']:.3f})")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    records = run_many([(cfg, s) for s in cfg.snr_c_db], args.jobs)
    emit_results(records, args.out)
    if args.trace:
        write_trace(simulate_phy(cfg, cfg.snr_c_db[0]), args.trace)
    _print_summary(records)
    return 0


def cmd_sweep(args) -> int:
    cfgs = preset_configs(args.preset, seed=args.seed or 0, n_beacons=args.beacons)
    records = run_many([(c, s) for c in cfgs for s in c.snr_c_db], args.jobs)
    emit_results(records, args.out or f"{args.preset}.csv")
    _print_summary(records)
    return 0


def cmd_oracle(args) -> int:
    report = oracle_suite(args.seed or 0)
    print(report)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    def global_options(suppress: bool) -> argparse.ArgumentParser:
        # accepted before or after the subcommand; the subcommand copy must not reset defaults
        p = argparse.ArgumentParser(add_help=False)
        kw = {"default": argparse.SUPPRESS} if suppress else {}
        p.add_argument("--seed", type=int, help="run seed (overrides the config)", **({"default": None} | kw))
        p.add_argument("--jobs", type=int, help="worker processes for sweep points", **({"default": 1} | kw))
        p.add_argument("-v", "--verbose", action="store_true", **kw)
        return p

    common = global_options(suppress=True)
    parser = argparse.ArgumentParser(prog="ncma", parents=[global_options(suppress=False)],
                                     description="Rate-diverse network-coded multiple access simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="simulate one config file")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", required=True, type=Path, help="results CSV")
    run.add_argument("--trace", type=Path, help="per-slot decoder trace CSV (first sweep point)")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", parents=[common], help="run a built-in sweep")
    sweep.add_argument("--preset", required=True, choices=sorted(PRESETS))
    sweep.add_argument("--out", type=Path)
    sweep.add_argument("--beacons", type=int, help="slots per sweep point")
    sweep.set_defaults(func=cmd_sweep)

    oracle = sub.add_parser("oracle", parents=[common], help="run the reference-implementation checks")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
