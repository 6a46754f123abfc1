"""Monte Carlo vs exact expectations for a grid of edge-step functions.

Prints the number of degree cells (d <= 10) whose mean count sits more
than 4 standard errors from the recursion, per spec.

    python scripts/oracle_agreement.py --t 5000 --replicas 2000
"""
import argparse
import time

from edgestep import Constant, PowerLaw
from edgestep.stats import compare_to_theory, run_ensemble
from edgestep.theory import evolve_expectations


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=int, default=5000)
    ap.add_argument("--replicas", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    specs = [PowerLaw(c=1.0, gamma=g) for g in (0.0, 0.25, 0.5, 0.75, 1.0)] + [Constant(p=0.5)]
    print(f"{'spec':<28} {'gate':>4} {'max|z|':>7} {'secs':>6}")
    for spec in specs:
        start = time.perf_counter()
        ens = run_ensemble(spec, 0.0, [args.t], args.replicas, base_seed=args.seed, threads=args.threads)
        table = evolve_expectations(spec, [args.t], d_max=64)
        report = compare_to_theory(ens, table, A=3.0, alpha=0.5)
        zmax = max(abs(r.z_score) for r in report.rows if r.d <= 10)
        label = f"{spec.family} gamma={spec.gamma}"
        print(f"{label:<28} {report.gate[args.t]:>4} {zmax:>7.2f} {time.perf_counter() - start:>6.1f}")


if __name__ == "__main__":
    main()
