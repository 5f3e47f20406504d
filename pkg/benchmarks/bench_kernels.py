"""Time the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--requests 20000]
"""

import argparse
import timeit

import numpy as np

from poissonmla import kernels
from poissonmla.instances import random_tree
from poissonmla.opt import edge_groups


def service_weight_case(rng, n_vertices, n_requests, n_services):
    inst = random_tree(rng, n_vertices, max_depth=8)
    t = inst.tree
    locs = rng.integers(1, t.n, n_requests)
    assign = np.sort(rng.integers(0, n_services, n_requests))
    return lambda backend: kernels.service_weights(t.parent, t.weight, t.root, locs, assign, n_services,
                                                   backend=backend)


def subset_dp_case(rng, m):
    inst = random_tree(rng, 8)
    times = np.sort(rng.uniform(0, 5, m))
    locs = rng.integers(1, inst.tree.n, m)
    masks, gw = edge_groups(inst.tree, locs)
    return lambda backend: kernels.opt_subset_dp(masks, gw, times, backend=backend)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--requests", type=int, default=20000)
    ap.add_argument("--m", type=int, default=10, help="requests in the exact-OPT case")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled kernels are not available; only the Python backend can be timed")
    rng = np.random.default_rng(args.seed)
    cases = [
        (f"service_weights n=200 m={args.requests}", service_weight_case(rng, 200, args.requests, args.requests // 4)),
        (f"opt_subset_dp m={args.m}", subset_dp_case(rng, args.m)),
    ]
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'case':<36}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases:
        best = {}
        for b in backends:
            fn(b)  # warm up
            best[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        row = f"{name:<36}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{best['python'] / best['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
