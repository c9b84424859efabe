"""Regenerate the golden example traces used by the regression tests."""
import argparse
from pathlib import Path

from uiobank import catalog, documents, simulate

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "tests" / "golden"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ex in range(1, 7):
        t = simulate(catalog.scenario(ex, seed=args.seed))
        documents.write_trace_csv(t, out / f"example{ex}_seed{args.seed}.csv")
    print(f"wrote golden traces to {out}")


if __name__ == "__main__":
    main()
