"""Command line: ``kpzlab run <config.json>`` and ``kpzlab verify``.

Exit codes: 0 success, 2 an acceptance threshold failed, 1 error.
"""

from __future__ import annotations

import argparse
import sys

from kpzlab.experiments import emit_report, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpzlab",
                                description="two-time growth-fluctuation lab")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("config", help="path to the experiment config (JSON)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config field or parameter")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory")

    ver = sub.add_parser("verify", help="run the full acceptance suite")
    ver.add_argument("--quick", action="store_true",
                     help="reduced replica counts (smoke run)")
    ver.add_argument("--workers", type=int, default=1)
    ver.add_argument("--seed", type=int, default=1)
    ver.add_argument("--out", default="verify-out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config, overrides=args.set,
                              workers=args.workers, output_dir=args.out)
            bundle = run_experiment(cfg)
            paths = emit_report(bundle, cfg.output_dir)
            for fmt, path in sorted(paths.items()):
                print(f"wrote {path}")
            status = "PASS" if bundle.passed else "FAIL"
            print(f"{status} {bundle.name}"
                  + (f": {'; '.join(bundle.messages)}" if bundle.messages else ""))
            return 0 if bundle.passed else 2
        if args.command == "verify":
            from kpzlab.verify import verify

            ok, _ = verify(output_dir=args.out, workers=args.workers,
                           seed=args.seed, quick=args.quick)
            return 0 if ok else 2
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
