"""``sim`` command line entry point.

    sim exact --lattice 1d:3:periodic --N 2 --U 0 --kappa 1
    sim lowdim-evolve --preset fig2 --out runs/fig2
    sim --list

Settings are layered: preset, then ``--config`` file, then flags.
Output goes to ``--out``, else ``$SIM_OUTPUT_DIR/<experiment>``, else
``./sim-output/<experiment>``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, PRESETS, ConfigError, deep_merge, load_config_file, normalized_json, parse_config
from .experiments import run
from .output import write_result

log = logging.getLogger("dissipative_lattice")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _lattice_flag(text: str) -> dict:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected d:M[:boundary], got {text!r}")
    try:
        out = {"d": int(parts[0].rstrip("dD")), "M": int(parts[1])}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected d:M[:boundary], got {text!r}") from None
    if len(parts) == 3:
        out["boundary"] = parts[2]
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Dissipative Bose/Fermi-Hubbard simulations.")
    p.add_argument("experiment", nargs="?", choices=sorted(EXPERIMENTS), help="experiment kind")
    p.add_argument("--list", action="store_true", help="list experiments and presets, then exit")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a shipped configuration")
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", choices=("csv", "jsonl", "both"), help="table format (default: both)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--seed", type=int, help="RNG seed for random initial states")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    g = p.add_argument_group("parameter overrides")
    g.add_argument("--lattice", type=_lattice_flag, metavar="d:M[:boundary]")
    g.add_argument("--N", type=int, help="particle (or doublon) number")
    g.add_argument("--J", type=float)
    g.add_argument("--U", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--n", type=float, help="density")
    g.add_argument("--jumps", help="jump family kind")
    g.add_argument("--t-max", type=float, help="last time of a linear grid")
    g.add_argument("--t-num", type=int, help="number of time points")

    v = p.add_mutually_exclusive_group()
    v.add_argument("--quiet", action="store_true")
    v.add_argument("--verbose", action="store_true")
    return p


def _overrides(args) -> dict:
    out: dict = {}
    if args.experiment:
        out["experiment"] = args.experiment
    if args.lattice:
        out["lattice"] = args.lattice
    params = {k: getattr(args, k) for k in ("J", "U", "kappa", "n") if getattr(args, k) is not None}
    if params:
        out["params"] = params
    if args.N is not None:
        out["N"] = args.N
    if args.jumps:
        out["jumps"] = {"kind": args.jumps}
    times = {}
    if args.t_max is not None:
        times["stop"] = args.t_max
    if args.t_num is not None:
        times["num"] = args.t_num
    if times:
        out["times"] = times
    if args.seed is not None:
        out["seed"] = args.seed
    if args.format:
        out["output"] = {"formats": ["csv", "jsonl"] if args.format == "both" else [args.format]}
    return out


def _print_list(stream) -> None:
    print("experiments:", file=stream)
    for name, text in EXPERIMENTS.items():
        print(f"  {name:<14} {text}", file=stream)
    print("presets:", file=stream)
    for name, preset in PRESETS.items():
        print(f"  {name:<16} ({preset['experiment']})", file=stream)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.quiet:
        warnings.simplefilter("ignore")

    if args.list:
        _print_list(sys.stdout)
        return EXIT_OK

    try:
        data: dict = dict(PRESETS[args.preset]) if args.preset else {}
        if args.config:
            data = deep_merge(data, load_config_file(args.config))
        data = deep_merge(data, _overrides(args))
        cfg = parse_config(data)
    except ConfigError as err:
        print(f"sim: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if args.jobs < 1:
        print("sim: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        out_dir = args.out
    else:
        out_dir = Path(os.environ.get("SIM_OUTPUT_DIR", "sim-output")) / cfg.experiment

    log.info("running %s -> %s", cfg.experiment, out_dir)
    start = time.perf_counter()
    try:
        result = run(cfg, jobs=args.jobs)
    except (ValueError, ArithmeticError, RuntimeError) as err:
        print(f"sim: {cfg.experiment} failed: {err}", file=sys.stderr)
        return EXIT_FAILURE
    wall = time.perf_counter() - start
    files = write_result(out_dir, result, normalized_json(cfg), __version__, cfg.seed, cfg.output.formats, wall)
    log.info("wrote %d files in %.2f s", len(files), wall)
    if not args.quiet:
        for key, value in result.summary.items():
            print(f"{key}: {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
