"""List which members of a partial observer bank can be designed, and why the rest cannot."""
import argparse

from uiobank import catalog, documents
from uiobank.matrix_core import DEFAULT_TOL
from uiobank.uio import _decoupling, subsets


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--example", type=int, default=2)
    ap.add_argument("--plant", help="plant JSON instead of a built-in example")
    ap.add_argument("--q1", type=int, default=1)
    ap.add_argument("--q2", type=int, default=1)
    args = ap.parse_args()
    P = documents.load_plant(args.plant) if args.plant else catalog.plant(args.example)
    keys = [(Ju, Js) for Ju in subsets(P.n_u, args.q1) for Js in subsets(P.n_y, P.n_y - args.q2)]
    keys += [(Su, Ss) for Su in subsets(P.n_u, 2 * args.q1)
             for Ss in subsets(P.n_y, P.n_y - 2 * args.q2)]
    bad = 0
    for Ju, Js in keys:
        _, _, reason = _decoupling(P, P.columns(Ju), Js, DEFAULT_TOL)
        bad += reason is not None
        print(f"J_u={Ju!r:9} J_s={Js!r:11} {'ok' if reason is None else reason}")
    print(f"{len(keys) - bad}/{len(keys)} designable")


if __name__ == "__main__":
    main()
