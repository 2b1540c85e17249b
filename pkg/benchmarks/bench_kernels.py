"""Benchmark: compiled game kernel vs the pure-numpy fallback.

Runs the same workload (identical draws, identical results) through every
available backend and reports throughput in path-steps per second.

    python3 benchmarks/bench_kernels.py [--paths 20000] [--dt 1e-3]
"""

import argparse
import time

import numpy as np

from dynkin import _kernels as kern
from dynkin.examples import register_examples
from dynkin.simulate import SimParams, choose_t_max, tabulate
from dynkin.strategy import build_nash_strategies


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--example", default="ex_4_4")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    prob = register_examples()[args.example].build(grid_n=2501)
    sol = prob.solve()
    s1, s2 = build_nash_strategies(sol, prob.partition, prob.payoffs,
                                   prob.diffusion)
    t_max = choose_t_max(prob.diffusion, prob.payoffs)
    params = SimParams(dt=args.dt, t_max=t_max, n_paths=args.paths,
                       seed=args.seed)
    tables = tabulate(prob.diffusion, prob.payoffs, s1, s2, params)

    x0 = register_examples()[args.example].x0
    results = {}
    for name, impl in kern.available_backends().items():
        t0 = time.time()
        payoff, outcome, tau = kern.run_paths_block(
            impl, params.seed, 0, params.n_paths, x0, params.dt,
            params.n_steps, tables)
        elapsed = time.time() - t0
        steps = float(np.sum(np.minimum(tau, t_max) / params.dt))
        results[name] = (elapsed, steps, payoff, outcome, tau)
        print(f"{name:>10s}: {elapsed:8.2f}s   {steps / elapsed:12.3e} path-steps/s"
              f"   mean payoff {payoff.mean():.6f}")

    if len(results) == 2:
        a = results["fallback"]
        b = results["compiled"]
        same = (np.array_equal(a[2], b[2]) and np.array_equal(a[3], b[3])
                and np.array_equal(a[4], b[4]))
        print(f"bit-identical results: {same}")
        print(f"speedup: {a[0] / b[0]:.1f}x")


if __name__ == "__main__":
    main()
