"""Exact E N_t(d)/F(t) for PowerLaw families across gamma.

Below gamma = 1 the small-degree proportions settle on p_gamma; at gamma = 1
they drain away. Output is CSV on stdout: gamma,t,d,ratio,limit.
"""
import argparse
import csv
import sys

from edgestep import PowerLaw
from edgestep.theory import evolve_expectations, expected_ratio, p_gamma


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gammas", default="0,0.25,0.5,0.75,0.9,1.0")
    ap.add_argument("--checkpoints", default="1000,10000,100000")
    ap.add_argument("--d", type=int, default=5, help="report degrees 1..d")
    args = ap.parse_args()

    gammas = [float(g) for g in args.gammas.split(",")]
    cps = [int(t) for t in args.checkpoints.split(",")]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["gamma", "t", "d", "ratio", "limit"])
    for g in gammas:
        table = evolve_expectations(PowerLaw(c=1.0, gamma=g), cps, d_max=64)
        for t in cps:
            for d in range(1, args.d + 1):
                limit = repr(p_gamma(g, d)) if g < 1 else ""
                w.writerow([g, t, d, repr(expected_ratio(table, t, d)), limit])


if __name__ == "__main__":
    main()
