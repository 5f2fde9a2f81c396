#!/usr/bin/env python3
"""Timing comparison of the compiled kernels vs the pure-Python fallback.

Runs the growth function and its derivatives, a single Newton solve, and a
full active-set enumeration under both backends and prints the speedups.

    python3 benchmarks/bench_backends.py [--repeats N] [--companies N]
"""

import argparse
import time

import numpy as np

import kellyalloc as ka
from kellyalloc._backend import available_backends, kernels_for


def build_portfolio(num_companies: int, seed: int) -> list[ka.Company]:
    rng = np.random.default_rng(seed)
    companies = []
    for i in range(num_companies):
        cap = float(rng.uniform(50, 500))
        down = cap * float(rng.uniform(0.3, 0.7))
        base = cap * float(rng.uniform(1.1, 1.6))
        up = cap * float(rng.uniform(1.8, 3.0))
        p_down = float(rng.uniform(0.1, 0.3))
        p_up = float(rng.uniform(0.2, 0.4))
        companies.append(ka.Company(
            f"bench-{i}", cap,
            (
                ka.Scenario("down", down, p_down),
                ka.Scenario("base", base, 1.0 - p_down - p_up),
                ka.Scenario("up", up, p_up),
            ),
        ))
    return companies


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions per measurement (default 5)")
    parser.add_argument("--companies", type=int, default=6,
                        help="portfolio size for the kernel benchmarks (default 6)")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernels are not built; nothing to compare")
        print("(rebuild with: pip install -e . --no-build-isolation)")
        return 1

    companies = build_portfolio(args.companies, seed=7)
    space = ka.enumerate_outcomes(companies)
    f = np.full(space.num_companies, 0.4 / space.num_companies)
    probs, rets = space.probabilities, space.returns

    policy = ka.AllocationPolicy(max_leverage=0.0, max_allocation=0.5)
    cset = ka.build_constraint_set(policy, companies)
    face_mask = ka.StatusMask.from_int(1 << (len(cset) - 1), len(cset))

    print(f"portfolio: {space.num_companies} companies, "
          f"{space.num_outcomes} outcomes, {len(cset)} constraints "
          f"({2 ** len(cset)} KKT systems)")
    print()

    rows = []

    def bench_kernels(name, call):
        timings = {}
        for backend in ("python", "compiled"):
            kern = kernels_for(backend)
            timings[backend] = best_of(lambda: call(kern), args.repeats)
        rows.append((name, timings["python"], timings["compiled"]))

    bench_kernels("growth value", lambda k: k.growth_value(probs, rets, f))
    bench_kernels("growth gradient", lambda k: k.growth_gradient(probs, rets, f))
    bench_kernels("growth hessian", lambda k: k.growth_hessian(probs, rets, f))

    def bench_solver(name, call):
        timings = {}
        for backend in ("python", "compiled"):
            ka.select_backend(backend)
            try:
                timings[backend] = best_of(call, args.repeats)
            finally:
                ka.select_backend("compiled")
        rows.append((name, timings["python"], timings["compiled"]))

    config = ka.SolverConfig(worker_count=1)
    bench_solver(
        "newton solve (one system)",
        lambda: ka.newton_solve(face_mask, space, cset, config),
    )
    bench_solver(
        f"solve_all ({2 ** len(cset)} systems)",
        lambda: ka.solve_all(space, cset, config),
    )

    width = max(len(name) for name, _, _ in rows)
    print(f"{'operation':<{width}}  {'python':>12}  {'compiled':>12}  {'speedup':>8}")
    for name, t_py, t_c in rows:
        print(f"{name:<{width}}  {t_py * 1e3:>10.3f}ms  {t_c * 1e3:>10.3f}ms  "
              f"{t_py / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
