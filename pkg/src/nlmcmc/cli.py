"""Command-line experiment runner.

Subcommands: run, validate, oracle-suite, poc, mmd-selftest, compare-dm.
Exit codes: 0 ok, 1 config error, 2 diverged run, 3 self-check failure.
"""

import argparse
import sys
from pathlib import Path

from .config import (
    EXPERIMENTS,
    ORACLE_DEFAULTS,
    POC_DEFAULTS,
    SELFTEST_DEFAULTS,
    load_config,
    resolve_config,
    require_valid,
    validate_config,
)
from .core import ConfigError
from .experiments import (
    run_compare_dm,
    run_mmd_selftest,
    run_oracle_suite,
    run_particles,
    run_poc,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_CHECK_FAILED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlmcmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", type=Path, required=config_required, help="YAML run config")
        p.add_argument("--out", type=Path, default=None, help="output directory override")
        p.add_argument("--seeds", type=int, nargs="+", default=None, help="seed list override")
        p.add_argument("--threads", type=int, default=1, help="parallel seeds (1 = sequential)")

    add_common(sub.add_parser("run", help="run the experiment named in the config"))
    add_common(sub.add_parser("validate", help="validate a config without running"))
    add_common(sub.add_parser("oracle-suite", help="finite-instance theory report"), False)
    add_common(sub.add_parser("poc", help="bias-versus-N particle experiment"), False)
    add_common(sub.add_parser("mmd-selftest", help="MMD estimator self checks"), False)
    add_common(sub.add_parser("compare-dm", help="fixed-N versus growing-history comparison"))
    return parser


def _load(args, fallback_experiment=None) -> dict:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = resolve_config({"experiment": fallback_experiment})
    if fallback_experiment is not None and cfg["experiment"] != fallback_experiment:
        raise ConfigError("experiment", f"expected {fallback_experiment!r}, got {cfg['experiment']!r}")
    if args.seeds is not None:
        cfg["seeds"] = list(args.seeds)
    if args.out is not None:
        cfg["output"] = str(args.out)
    return cfg


def _dispatch(cfg: dict, args) -> int:
    out = Path(cfg["output"])
    experiment = cfg["experiment"]
    if experiment == "run2d":
        status = run_particles(cfg, out, threads=args.threads)
        return EXIT_OK if status == "ok" else EXIT_DIVERGED
    if experiment == "compare-dm":
        status = run_compare_dm(cfg, out, threads=args.threads)
        return EXIT_OK if status == "ok" else EXIT_DIVERGED
    if experiment == "oracle-suite":
        run_oracle_suite(cfg, out)
        return EXIT_OK
    if experiment == "poc":
        run_poc(cfg, out)
        return EXIT_OK
    if experiment == "mmd-selftest":
        return EXIT_OK if run_mmd_selftest(cfg, out) else EXIT_CHECK_FAILED
    raise ConfigError("experiment", f"unknown experiment {experiment!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    source = str(args.config) if args.config else "<defaults>"
    forced = {
        "oracle-suite": "oracle-suite",
        "poc": "poc",
        "mmd-selftest": "mmd-selftest",
        "compare-dm": "compare-dm",
    }.get(args.command)

    try:
        cfg = _load(args, fallback_experiment=forced)
    except (ConfigError, OSError, ValueError) as err:
        print(f"error: {source}: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        problems = validate_config(cfg)
        if problems:
            for key, msg in problems:
                print(f"{source}: {key}: {msg}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"{source}: ok ({cfg['experiment']})")
        return EXIT_OK

    try:
        require_valid(cfg, source)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    return _dispatch(cfg, args)


if __name__ == "__main__":
    sys.exit(main())
