"""Compare the compiled and pure-Python rank kernels.

    python3 benchmarks/bench_kernels.py [--n 16 32 64] [--repeat 5]

Times each kernel on random inputs, then whole simulation runs with each
backend, and prints one line per measurement plus the speed-up.
"""

import argparse
import random
import sys
import timeit

from buildmst.kernels import PyRankKernel
from buildmst.simulator import Scheduler, generate_initial, run
from buildmst.tree_metric import build_metric, generate_random_tree

try:
    from buildmst._ckernels import RankKernel as CRankKernel
except ImportError:
    CRankKernel = None


def kernel_workload(kernel, n, n_pairs, seed):
    rng = random.Random(seed)
    orders = []
    for _ in range(50):
        v = rng.randrange(n)
        orders.append((v, [x for x in rng.sample(range(n), n) if x != v]))
    masks = [bytes(rng.random() < 0.3 for _ in range(n_pairs)) for _ in range(50)]
    valid = bytes(rng.random() < 0.1 for _ in range(n_pairs))

    def work():
        for v, order in orders:
            kernel.select_delegates(v, order)
        for mask in masks:
            chosen, _, _ = kernel.spanning_forest(mask)
            kernel.find_witness(chosen)
            kernel.longest_invalid(mask, valid)

    return work


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[16, 32, 64])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if CRankKernel is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1

    for n in args.n:
        m = build_metric(generate_random_tree(n, n // 2, seed=n))
        py = best_of(kernel_workload(PyRankKernel(m.rank, m.pair_a, m.pair_b), n, len(m.pair_a), 1), args.repeat)
        cy = best_of(kernel_workload(CRankKernel(m.rank, m.pair_a, m.pair_b), n, len(m.pair_a), 1), args.repeat)
        print(f"kernels n={n:<3} python={py * 1e3:8.2f}ms cython={cy * 1e3:8.2f}ms speedup={py / cy:5.1f}x")

    for n in args.n:
        m = build_metric(generate_random_tree(n, n // 2, seed=n))
        initial = generate_initial(m, "random-connected", 0)
        times = {}
        for backend in ("python", "cython"):
            times[backend] = best_of(lambda: run(initial, Scheduler("random", 0), m, backend=backend), max(1, args.repeat // 2))
        py, cy = times["python"], times["cython"]
        print(f"run     n={n:<3} python={py * 1e3:8.2f}ms cython={cy * 1e3:8.2f}ms speedup={py / cy:5.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
