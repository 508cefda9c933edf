"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 20] [--repeat 5]

Times each kernel on a seeded problem with both backends and prints the
best-of-``repeat`` wall time and the speedup.  A full ``solve_ground`` run on a
seeded instance closes the table.
"""
import argparse
import time

import numpy as np

from waxman import _backend
from waxman.io import gen_random
from waxman.iteration import EigenProblem
from waxman.search import solve_ground


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def cases(n):
    T, V = gen_random(n, 0)
    A = T - (1.0 + 0.5j) * np.eye(n)
    b = np.ones(n, dtype=np.complex128)
    r = np.ones(n, dtype=np.complex128)
    empty = np.zeros((0, n), dtype=np.complex128)
    no_pairs = np.zeros(0, dtype=np.complex128)
    grid = (np.linspace(-3, 3, 80)[None, :] + 1j * np.linspace(-3, 3, 80)[:, None]).ravel()
    H = T - 2.0 * V
    problem = EigenProblem(T, V, 2.0)

    def kernel_cases(k):
        lu, perm, _ = k.lu_factor(A)
        return {
            "lu_factor": lambda: k.lu_factor(A),
            "lu_solve": lambda: k.lu_solve(lu, perm, b),
            "fixed_point (500 iterations)": lambda: k.fixed_point(
                lu, perm, V, r, b, 0.0, 0.0, 500, 1e-300, empty, empty, no_pairs, False),
            f"grid_logabsdet ({grid.size} points)": lambda: k.grid_logabsdet(H, grid),
        }

    return kernel_cases, lambda: solve_ground(problem)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if "cython" not in _backend.BACKENDS:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")

    kernel_cases, solve = cases(args.n)
    py, cy = _backend.BACKENDS["python"], _backend.BACKENDS["cython"]
    rows = []
    py_cases, cy_cases = kernel_cases(py), kernel_cases(cy)
    for name in py_cases:
        rows.append((name, best_time(py_cases[name], args.repeat),
                     best_time(cy_cases[name], args.repeat)))
    times = {}
    for name in ("python", "cython"):
        previous = _backend.use(name)
        try:
            times[name] = best_time(solve, max(1, args.repeat // 2))
        finally:
            _backend.use(previous)
    rows.append(("solve_ground (seed 0)", times["python"], times["cython"]))

    width = max(len(r[0]) for r in rows)
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<{width}}  {'python':>10}  {'cython':>10}  {'speedup':>8}")
    for name, tp, tc in rows:
        print(f"{name:<{width}}  {tp * 1e3:8.3f}ms  {tc * 1e3:8.3f}ms  {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
