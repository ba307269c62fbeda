"""Time the compiled and pure-NumPy RK4 kernels on the same problem.

Usage: python benchmarks/bench_kernels.py [--n-max 20] [--steps 20000]
"""

import argparse
import time

import numpy as np

from msgate import kernels
from msgate.fockspace import BasisSpec, displacement_unitary


def bench(backend, n_max, steps, repeat=3):
    u = displacement_unitary(0.1, BasisSpec(n_max)).entries
    U, Ud = np.ascontiguousarray(u), np.ascontiguousarray(u.conj().T)
    damp = np.zeros(n_max + 1)
    tones = (np.array([0.05, 0.05]), np.array([0.9, -0.9]),
             np.array([0.05, 0.05]), np.array([0.9, -0.9]))
    step = kernels.get_stepper(backend)
    best = np.inf
    for _ in range(repeat):
        phi = np.zeros((4, n_max + 1), dtype=np.complex128)
        phi[0, 0] = 1.0
        t0 = time.perf_counter()
        step(phi, U, Ud, 1.0, damp, *tones, 0.0, 0.01, steps, 0.0)
        best = min(best, time.perf_counter() - t0)
    return best / steps, phi


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, nargs="+", default=[6, 12, 20, 30])
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args(argv)
    names = sorted(kernels.BACKENDS)
    print(f"{'n_max':>6} " + " ".join(f"{n + ' [us/step]':>22}" for n in names) + "   speedup  max|diff|")
    for n_max in args.n_max:
        res = {n: bench(n, n_max, args.steps if n == "compiled" else args.steps // 10)
               for n in names}
        row = f"{n_max:>6} " + " ".join(f"{res[n][0] * 1e6:>22.2f}" for n in names)
        if len(names) == 2:
            ref = {n: bench(n, n_max, 2000, repeat=1)[1] for n in names}
            diff = np.abs(ref["compiled"] - ref["python"]).max()
            row += f"   {res['python'][0] / res['compiled'][0]:7.1f}  {diff:9.1e}"
        print(row)


if __name__ == "__main__":
    main()
