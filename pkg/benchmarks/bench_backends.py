"""Time the numba and numpy backends on the three hot loops.

    python benchmarks/bench_backends.py [--repeat 5]

Each workload runs once per backend to warm up (JIT compilation for numba),
then the best of ``--repeat`` runs is reported along with the agreement
between the two backends.  The Monte Carlo backends draw different random
streams, so there the difference is statistical (about 1e-3 at 10^7 samples).
"""
import argparse
import time

import numpy as np

from nlreg import hot
from nlreg.increments import Ball, Domain1D, GridFunction, ball_defect_mc, difference_lp
from nlreg.cli import decaying_sine
from nlreg.kernels import holder_coefficient_kernel
from nlreg.solver import _pair_matrix


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def workloads():
    u = GridFunction.from_function(lambda x: np.maximum(x, 0.0) ** 0.75, -1, 1, 2**14)
    U = Domain1D(-0.5, 0.5)
    zs = np.geomspace(1e-4, 0.2, 200)
    K = holder_coefficient_kernel(0.6, decaying_sine, 1.0, 3.0, 4.0)
    B = Ball([0.0, 0.0], 1.0)
    return {
        "difference_lp (2^14 intervals, 200 shifts)":
            lambda b: np.array([difference_lp(u, U, z, 2, 2.0, backend=b) for z in zs]),
        "pair_loop (coefficient kernel, 512 intervals)":
            lambda b: _pair_matrix(K, 512, -1.0, 2.0 / 512, 8, backend=b),
        "ball_mc_count (n=2, 10^7 samples)":
            lambda b: np.array(ball_defect_mc(B, [0.3, -0.2], samples=10**7, seed=0, backend=b)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = hot.backends()
    print(f"backends: {', '.join(names)}")
    print(f"{'workload':45s} " + " ".join(f"{n:>10s}" for n in names) + "   speedup   max rel diff")
    for label, fn in workloads().items():
        res = {b: _best(lambda: fn(b), args.repeat) for b in names}
        row = f"{label:45s} " + " ".join(f"{res[b][0]:9.4f}s" for b in names)
        if len(names) == 2:
            a, c = res["numba"][1], res["numpy"][1]
            diff = np.max(np.abs(a - c)) / max(np.max(np.abs(c)), 1e-300)
            row += f"   {res['numpy'][0] / res['numba'][0]:7.1f}x   {diff:.1e}"
        print(row, flush=True)


if __name__ == "__main__":
    main()
