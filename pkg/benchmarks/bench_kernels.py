#!/usr/bin/env python3
"""Benchmark the compiled simulation kernel against its pure-Python twin.

Runs the same closed-loop Monte Carlo workload through every importable
backend, checks that the outputs are bit-identical, and reports timings.

    python benchmarks/bench_kernels.py --paths 50000 --horizon 20
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from mjlq import _backend, problemfile, solve_gare

REPO = Path(__file__).resolve().parent.parent


def workload(prob, paths, horizon, seed, impl):
    sol = solve_gare(prob.model, prob.weights, prob.ptilde)
    gains = np.ascontiguousarray(
        np.broadcast_to(sol.F, (horizon, prob.model.L, prob.model.m, prob.model.n))
    )
    return _backend.run_paths(
        prob.model.A, prob.model.B, prob.model.C, prob.model.D,
        prob.model.sigma2, 0, prob.model.rho, prob.model.pi0, 0,
        prob.x0, gains, paths, seed,
        Q=prob.weights.Q, R=prob.weights.R, Pterm=prob.weights.terminalP,
        impl=impl,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=50_000)
    parser.add_argument("--horizon", type=int, default=20)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--file", default=str(REPO / "fixtures" / "two_mode_indefinite.yaml"))
    args = parser.parse_args()

    prob = problemfile.load(args.file)
    backends = _backend.available_backends()
    print(f"workload: {args.paths} paths x {args.horizon} steps, seed {args.seed}")
    print(f"backends: {', '.join(backends)} (active: {_backend.kernel_name()})")

    results = {}
    timings = {}
    for name, impl in backends.items():
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = workload(prob, args.paths, args.horizon, args.seed, impl)
            best = min(best, time.perf_counter() - t0)
        results[name] = out
        timings[name] = best
        rate = args.paths * args.horizon / best
        print(f"  {name:>8}: {best * 1e3:9.2f} ms   ({rate / 1e6:.2f} M path-steps/s)")

    names = list(backends)
    for other in names[1:]:
        for key in ("sum_xx", "sumsq_xx", "occupancy", "theta0", "cost"):
            if not np.array_equal(results[names[0]][key], results[other][key]):
                print(f"MISMATCH in {key} between {names[0]} and {other}")
                return 1
    if len(names) > 1:
        print(f"outputs bit-identical across backends; "
              f"speedup {timings['python'] / timings['compiled']:.1f}x"
              if "compiled" in timings else "")
    return 0


if __name__ == "__main__":
    sys.exit(main())
