"""``simcli`` command-line entry point.

    simcli case1|case2|case3|selftest [--config PATH] --out PATH
           [--seed INT] [--trials N] [--workers N]

Exit codes: 0 success, 1 selftest failure, 2 invalid configuration,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigInvalid
from .sim import SimConfig, emit_csv, run_case1, run_case2, run_case3

log = logging.getLogger("gmdofdma")

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simcli", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=["case1", "case2", "case3", "selftest"])
    p.add_argument("--config", help="key = value config file (defaults if omitted)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--trials", type=int, help="channel draws per point (overrides config)")
    p.add_argument("--workers", type=int, help="worker processes (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else SimConfig()
        overrides = {k: getattr(args, k) for k in ("seed", "trials", "workers") if getattr(args, k) is not None}
        cfg = cfg.replace(**overrides).validate()
    except ConfigInvalid as exc:
        print(f"simcli: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"simcli: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    status = EXIT_OK
    log.info("running %s with %d trials, seed %d", args.command, cfg.trials, cfg.seed)
    if args.command == "selftest":
        from .selftest import run_selftest, selftest_rows

        results = run_selftest(cfg.seed)
        rows = selftest_rows(results)
        if not all(ok for _, ok, _, _ in results):
            status = EXIT_SELFTEST
    else:
        runner = {"case1": run_case1, "case2": run_case2, "case3": run_case3}[args.command]
        try:
            rows = runner(cfg)
        except ConfigInvalid as exc:
            print(f"simcli: invalid configuration: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    try:
        emit_csv(rows, args.out)
    except OSError as exc:
        print(f"simcli: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
