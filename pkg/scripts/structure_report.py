#!/usr/bin/env python3
"""Fourier/expansion structure report for a Cayley domain [n]^l.

Prints the spectrum, level masses of a random Boolean invariant function, the
fourth-moment bounds, and the expansion-certificate record as JSON.

Example:
    python scripts/structure_report.py --n 3 --l 3 --t 1 --r 1 --gamma 0.3
"""

import argparse
import json

import numpy as np

from ugjohnson import cayley


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--l", type=int, default=3)
    ap.add_argument("--t", type=int, default=1)
    ap.add_argument("--r", type=int, default=1)
    ap.add_argument("--gamma", type=float, default=0.3)
    ap.add_argument("--density", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    dom = cayley.CayleyDomain(args.n, args.l, args.t)
    rng = np.random.default_rng(args.seed)
    F = cayley.symmetrize_perm(dom, (rng.random(dom.shape) < args.density)
                               .astype(float))
    F = (F > 0.5).astype(float)
    dec = cayley.level_decompose(dom, F)
    report = {
        "domain": {"n": args.n, "l": args.l, "t": args.t},
        "levels": [{"i": i, "eta": float(dec.eta[i]),
                    "lambda": dom.eigenvalue(i)} for i in range(args.l + 1)],
        "parseval_residual": dec.parseval_residual(),
        "pseudorandomness": vars(cayley.pseudorandomness(dom, F, args.r,
                                                         args.gamma)),
        "fourth_moment": [cayley.fourth_moment_bounds(dom, F, i, 0.3, args.gamma)
                          for i in range(min(args.r + 1, args.l + 1))],
        "expansion_certificate": cayley.expansion_certificate(dom, F, args.r,
                                                                args.gamma),
    }
    print(json.dumps(report, indent=1, sort_keys=True, default=str))


if __name__ == "__main__":
    main()
