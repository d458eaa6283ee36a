"""dgcrl-bench command line.

Exit status: 0 success, 2 usage or configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import bounds, nav_env
from .config import ConfigError, ExperimentConfig, parse_config
from .demos import Repository, write_repository
from .experiment import (
    DEMO_FILE,
    DEMO_POOL_FILE,
    TASKS_FILE,
    generate_demo_pool,
    generate_tasks,
    initial_repository,
    run_experiment,
)
from .numerics import ContractError
from .report import write_report

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if getattr(args, "method", None):
        cfg.method = args.method
    cfg.validate()
    return cfg


def _out(args, cfg) -> str:
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def cmd_gen_tasks(args):
    cfg = _load(args)
    path = os.path.join(_out(args, cfg), TASKS_FILE)
    nav_env.write_tasks(path, generate_tasks(cfg))
    print(path)


def cmd_gen_demos(args):
    cfg = _load(args)
    out = _out(args, cfg)
    pool = generate_demo_pool(cfg)
    write_repository(os.path.join(out, DEMO_POOL_FILE), Repository(pool))
    path = os.path.join(out, DEMO_FILE)
    write_repository(path, initial_repository(cfg, pool))
    print(path)


def cmd_run(args):
    cfg = _load(args)
    for path in run_experiment(cfg, _out(args, cfg)):
        print(path)


def cmd_report(args):
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    log_dir = args.log_dir or args.out or cfg.output_dir
    _, table = write_report(log_dir, args.out or log_dir, C=cfg.ft_offset,
                            confidence=cfg.confidence, resamples=cfg.bootstrap_resamples,
                            png=not args.no_png)
    sys.stdout.write(table)


def cmd_bound(args):
    regret = bounds.total_regret_bound(args.C, args.H, args.K, args.T)
    complexity = bounds.sample_complexity(args.C, args.H, args.K, args.delta)
    print(f"C={args.C!r} H={args.H!r} K={args.K!r} T={args.T!r} delta={args.delta!r}")
    print(f"total_regret_bound = {regret!r}")
    print(f"sample_complexity = {complexity!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgcrl-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
        return p

    common(sub.add_parser("gen-tasks", help="write the task-set file")).set_defaults(fn=cmd_gen_tasks)
    common(sub.add_parser("gen-demos", help="train bootstrap agents and write the repository")
           ).set_defaults(fn=cmd_gen_demos)
    p = common(sub.add_parser("run", help="run one method over all seeds"))
    p.add_argument("--method", choices=("dgcrl", "naive", "itr", "etr", "scratch"))
    p.set_defaults(fn=cmd_run)
    p = common(sub.add_parser("report", help="summary table and learning-curve figures"))
    p.add_argument("log_dir", nargs="?", help="directory with <method>_seed<N>.csv logs")
    p.add_argument("--no-png", action="store_true", help="skip the matplotlib figure")
    p.set_defaults(fn=cmd_report)
    p = sub.add_parser("bound", help="regret bound and sample complexity")
    for name in ("C", "H", "K", "T", "delta"):
        p.add_argument(name, type=float)
    p.set_defaults(fn=cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as exc:
        if args.command == "bound":
            parser.print_usage(sys.stderr)
            print(f"dgcrl-bench bound: error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
