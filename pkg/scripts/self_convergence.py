"""Sticky and elastic walks against a finer walk of the same preset.

No closed-form marginals are available for these presets, so the walk at
resolution ``n_ref`` serves as the reference for kill mass, occupation of 0
and the KS distance of the endpoint law.
"""

import argparse

from fellerlab.harness import ks_statistic
from fellerlab.reference import endpoint_sample, fine_grid_reference
from fellerlab.scaling import preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="10,25,50,100")
    ap.add_argument("--n-ref", dest="n_ref", type=int, default=400)
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    n_list = [int(v) for v in args.n.split(",")]
    print("preset,x0,n,ks,kill,kill_ref,occupation,occupation_ref")
    for name, x0 in (("elastic", 1.0), ("sticky", 0.0)):
        p = preset(name)
        ref = fine_grid_reference(p.params, p.regime, x0, 1.0, args.n_ref, args.paths, args.seed + 1,
                                  largest_n=max(n_list))
        for n in n_list:
            sample, ens = endpoint_sample(p.params, p.regime, x0, 1.0, n, args.paths, args.seed)
            occ = ens.visits_to_zero.mean() / n ** 2
            ks = ks_statistic(sample, ref.law).statistic
            print(f"{name},{x0},{n},{ks:.4f},{sample.kill_fraction:.4f},{ref.law.kill_mass:.4f},"
                  f"{occ:.4f},{ref.occupation.mean:.4f}")


if __name__ == "__main__":
    main()
