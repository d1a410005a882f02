"""Command-line entry point: ``ccncs run|suite|validate|version``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, parse_config, parse_suite

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("ccncs")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccncs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a single experiment")
    r.add_argument("config", help="experiment JSON file")
    r.add_argument("--workers", type=int, default=None,
                   help="evaluation workers (overrides config and CCNCS_WORKERS)")
    s = sub.add_parser("suite", help="run a grid of experiments x seeds")
    s.add_argument("config", help="suite JSON file")
    s.add_argument("--summary", default=None, help="summary CSV path (overrides the suite file)")
    s.add_argument("--parallel-cells", type=int, default=None, help="cells run concurrently")
    v = sub.add_parser("validate", help="parse and validate a config without running it")
    v.add_argument("config", help="experiment or suite JSON file")
    v.add_argument("--suite", action="store_true", help="validate as a suite file")
    sub.add_parser("version", help="print the package version")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        if args.command == "validate":
            cfg = parse_suite(args.config) if args.suite else parse_config(args.config)
            if not args.suite:
                from .harness import build_problem
                build_problem(cfg)
            print(f"{args.config}: ok")
            return EXIT_OK
        if args.command == "run":
            cfg = parse_config(args.config)
            if args.workers is not None and args.workers < 1:
                raise ConfigError("--workers", f"must be positive, got {args.workers}")
        else:
            suite = parse_suite(args.config)
            suite.cells()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .harness import run_experiment, run_suite
    try:
        if args.command == "run":
            res = run_experiment(cfg, workers=args.workers)
            print(json.dumps({k: v for k, v in res.summary.items() if k != "config"}, indent=2))
        else:
            table = run_suite(suite, summary_path=args.summary, parallel_cells=args.parallel_cells)
            failed = [r for r in table if r.get("status") == "failed"]
            print(f"{len(table)} summary rows written; {len(failed)} failed cells")
            if failed:
                return EXIT_RUNTIME
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
