"""Visits to 0 as n grows, for every preset.

Reflection-type walks stay below the square-root occupation bound, so their
rescaled occupation vanishes; walks with holding at 0 keep a positive one.
"""

import argparse

from fellerlab.harness import occupation_scaling
from fellerlab.scaling import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="10,20,50,100")
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    n_list = [int(v) for v in args.n.split(",")]
    print("preset,n,steps,mean_visits,bound,rescaled_occupation")
    for name in PRESETS:
        for r in occupation_scaling(name, n_list, args.t, args.paths, args.seed):
            print(f"{name},{r.n},{r.steps},{r.mean_visits:.3f},{r.bound:.3f},{r.rescaled_occupation:.5f}")


if __name__ == "__main__":
    main()
