"""Run every worked example over a range of seeds and tabulate the checks."""
import argparse
import logging
import time

from uiobank import catalog


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--examples", type=int, nargs="+", default=list(range(1, 7)))
    args = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    failed = 0
    for ex in args.examples:
        t0 = time.perf_counter()
        bad = {}
        for seed in range(args.seeds):
            _, _, checks = catalog.reproduce(ex, seed)
            for c in checks:
                if not c.passed:
                    bad.setdefault(c.name, []).append(seed)
        dt = time.perf_counter() - t0
        status = "ok" if not bad else f"failures {bad}"
        print(f"example {ex}: {args.seeds} seeds in {dt:.2f} s, {status}")
        failed += bool(bad)
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
