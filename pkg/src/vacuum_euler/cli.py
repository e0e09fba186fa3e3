"""Command-line entry point: ``vacuum-euler {run,ansatz,verify,fit,sweep}``."""
from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from dataclasses import asdict

from . import harness
from .diagnostics import fit_rate
from .errors import VacuumEulerError


def _window(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'lo,hi', got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vacuum-euler", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write its bundle")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="bundle directory (overrides output_dir)")

    p = sub.add_parser("ansatz", help="integrate the ansatz ODE and write ansatz.csv")
    p.add_argument("config")
    p.add_argument("-o", "--output")

    p = sub.add_parser("verify", help="recheck the fits and verdicts of a bundle")
    p.add_argument("bundle")

    p = sub.add_parser("fit", help="power-law fit of one CSV column against 1+t")
    p.add_argument("csv")
    p.add_argument("--column", required=True)
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--time-column", default="t")

    p = sub.add_parser("sweep", help="run every config matching a glob")
    p.add_argument("pattern")
    p.add_argument("-o", "--output", default="sweep")
    p.add_argument("-j", "--workers", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = harness.load_config(args.config)
            bundle = harness.run_scenario(cfg, args.output)
            print(f"{bundle.directory}: {bundle.status}" + (f" ({bundle.stage}: {bundle.error})" if bundle.error else ""))
            if bundle.report is not None:
                for v in bundle.report.verdicts:
                    print(f"  {v['status']:>12}  {v['name']}  value={v['value']}")
            return bundle.exit_code
        if args.command == "ansatz":
            cfg = harness.load_config(args.config)
            summary = harness.run_ansatz(cfg, args.output)
            print(json.dumps(harness._clean(summary), indent=2, sort_keys=True))
            return harness.EXIT_OK
        if args.command == "verify":
            code, msgs = harness.verify_bundle(args.bundle)
            print("\n".join(msgs))
            return code
        if args.command == "fit":
            table = harness.read_table(args.csv)
            if args.column not in table or args.time_column not in table:
                print(f"column not found; available: {', '.join(table)}", file=sys.stderr)
                return harness.EXIT_STAGE
            fit = fit_rate(table[args.time_column], table[args.column], args.window)
            print(json.dumps(harness._clean(asdict(fit)), indent=2, sort_keys=True))
            return harness.EXIT_OK
        if args.command == "sweep":
            paths = sorted(glob.glob(args.pattern))
            if not paths:
                print(f"no config matches {args.pattern!r}", file=sys.stderr)
                return harness.EXIT_STAGE
            rows = harness.sweep(paths, args.output, args.workers)
            for r in rows:
                print(f"{r['index']:3d}  {r['status']:>12}  {r.get('error', '')}")
            return max(r["exit_code"] for r in rows)
    except (VacuumEulerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_STAGE
    return harness.EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
