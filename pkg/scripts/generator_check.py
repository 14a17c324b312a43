"""Scaled generator against f''/2 for domain test functions of every preset.

For each preset and each pair of decay rates, prints the interior maximum
against its bound and the boundary residual as n grows.
"""

import argparse

from fellerlab.generator import consistency_residuals, make_domain_function
from fellerlab.scaling import PRESETS, preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="10,100,1000,10000")
    ap.add_argument("--lambdas", default="1:2,0.5:3,2:5")
    args = ap.parse_args()

    n_list = [int(v) for v in args.n.split(",")]
    pairs = [tuple(float(x) for x in item.split(":")) for item in args.lambdas.split(",")]
    print("preset,lambda1,lambda2,n,interior_max,interior_bound,boundary_residual")
    for name in PRESETS:
        p = preset(name)
        for l1, l2 in pairs:
            tf = make_domain_function(p.params, l1, l2)
            for r in consistency_residuals(p.params, p.regime, tf, n_list):
                print(f"{name},{l1},{l2},{r.n},{r.interior_max:.3e},{r.interior_bound:.3e},{r.boundary:.3e}")


if __name__ == "__main__":
    main()
