"""Throughput and peak traced memory of a single replica."""
import argparse
import time
import tracemalloc

from edgestep import PowerLaw, new_initial, run_to


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1e7)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--delta", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    spec = PowerLaw(c=1.0, gamma=args.gamma)
    run_to(new_initial(spec, delta=args.delta, seed=0), 1000)  # JIT warmup
    t = int(args.t)
    tracemalloc.start()
    start = time.perf_counter()
    state = run_to(new_initial(spec, delta=args.delta, seed=args.seed), t)
    elapsed = time.perf_counter() - start
    peak = tracemalloc.get_traced_memory()[1] / 2**20
    tracemalloc.stop()
    print(f"t={t} vertices={state.vertex_count} max_degree={int(state.degrees.max())}")
    print(f"{elapsed:.3f} s ({t / elapsed / 1e6:.1f} M steps/s), peak {peak:.1f} MB")


if __name__ == "__main__":
    main()
