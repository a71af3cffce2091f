"""Time the compiled and pure-Python coordinate-descent kernels.

    python3 benchmarks/bench_kernels.py [--p 50 100 200] [--d 3] [--repeat 3]

Each case solves the same penalized subproblem with every available backend
and reports the best wall time, the speed-up and the largest difference
between the solutions.
"""
import argparse
import time

import numpy as np

from sparsegep._kernels import available_backends
from sparsegep.penalties import InnerSolveConfig, PenaltySpec, solve_penalized


def problem(p, d, seed):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((p, p))
    B = W @ W.T / p + 0.5 * np.eye(p)
    M = rng.standard_normal((p, d))
    return B, M


def best_time(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args(argv)
    backends = available_backends()
    cfg = InnerSolveConfig(max_sweeps=100000, tol=args.tol)
    names = sorted(backends)
    print(f"{'penalty':8} {'p':>5} " + " ".join(f"{n + ' [s]':>12}" for n in names)
          + f" {'speed-up':>9} {'max |diff|':>11}")
    for kind in ("lasso", "group"):
        for p in args.p:
            B, M = problem(p, args.d, p)
            bound = np.abs(M).max() if kind == "lasso" else np.linalg.norm(M, axis=1).max()
            pen = PenaltySpec.lasso(0.2 * bound) if kind == "lasso" else PenaltySpec.group(0.2 * bound)
            res = {n: best_time(lambda k=backends[n]: solve_penalized(B, M, pen, cfg, k).Z,
                                args.repeat) for n in names}
            row = f"{kind:8} {p:5d} " + " ".join(f"{res[n][0]:12.4f}" for n in names)
            if len(names) == 2:
                speed = res["python"][0] / res["cython"][0]
                diff = np.abs(res["python"][1] - res["cython"][1]).max()
                row += f" {speed:8.1f}x {diff:11.1e}"
            print(row)


if __name__ == "__main__":
    main()
