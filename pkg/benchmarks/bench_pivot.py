#!/usr/bin/env python3
"""Times the compiled pivot kernel against its pure-Python twin.

Runs identical seeded workloads (single-receiver LPs across all payment
models, multi-receiver LPs, and cutting-plane solves) under each
available kernel, checks that solutions agree exactly, and prints a
wall-time comparison table.
"""

import argparse
import time
from fractions import Fraction

from persuade import _kernel, _pivot_py, model, multi, reduction, single
from persuade.model import PaymentModel


def single_workload(seeds):
    total = Fraction(0)
    for seed in seeds:
        instance = model.random_instance(seed, actions=3, states=3)
        for pm in PaymentModel:
            total += single.solve_optimal(instance, pm).utility
    return total


def multi_workload(seeds):
    total = Fraction(0)
    for seed in seeds:
        instance = model.random_multi_instance(seed, receivers=3, states=4)
        for pm in (PaymentModel.ZERO, PaymentModel.BUDGET_BALANCED):
            total += multi.solve_lp(instance, pm).utility
    return total


def cutting_workload(seeds):
    total = Fraction(0)
    for seed in seeds:
        instance = model.random_multi_instance(
            seed,
            receivers=3,
            states=3,
            positive_externalities=True,
            monotone_sender=True,
        )
        total += reduction.cutting_plane_solve(instance).objective
    return total


WORKLOADS = (
    ("single LPs (3 actions, 4 models)", single_workload),
    ("multi LPs (3 receivers, 2 models)", multi_workload),
    ("cutting plane (3 receivers)", cutting_workload),
)


def available_kernels():
    kernels = {}
    try:
        from persuade import _pivot_cy

        kernels["compiled"] = _pivot_cy.run_simplex
    except ImportError:
        pass
    kernels["python"] = _pivot_py.run_simplex
    return kernels


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=6, help="instances per workload")
    parser.add_argument("--repeat", type=int, default=3, help="best-of timing runs")
    args = parser.parse_args()

    kernels = available_kernels()
    seeds = range(1, args.seeds + 1)
    print(f"active kernel at import: {_kernel.KERNEL_NAME}")
    if "compiled" not in kernels:
        print("compiled kernel unavailable; timing the pure-Python kernel only")

    original = _kernel.run_simplex
    rows = []
    try:
        for label, workload in WORKLOADS:
            workload(seeds)  # warm caches so the first kernel is not penalized
            timings = {}
            checksums = set()
            for name, impl in kernels.items():
                _kernel.run_simplex = impl
                best = float("inf")
                for _ in range(args.repeat):
                    start = time.perf_counter()
                    checksums.add(workload(seeds))
                    best = min(best, time.perf_counter() - start)
                timings[name] = best
            if len(checksums) != 1:
                raise SystemExit(f"kernel results disagree on {label}: {checksums}")
            rows.append((label, timings))
    finally:
        _kernel.run_simplex = original

    width = max(len(label) for label, _ in rows)
    header = f"{'workload':{width}s}  " + "".join(
        f"{name:>10s}" for name in kernels
    )
    print(header)
    print("-" * len(header))
    for label, timings in rows:
        cells = "".join(f"{timings[name]:>9.3f}s" for name in kernels)
        line = f"{label:{width}s}  {cells}"
        if "compiled" in timings:
            line += f"   x{timings['python'] / timings['compiled']:.2f}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
