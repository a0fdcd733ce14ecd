#!/usr/bin/env python3
"""Benchmark the planner on random mobile-manipulation instances.

Usage: python scripts/bench_planner.py [--instances N] [--seed S]
"""

import argparse
import random
import statistics
import sys
import time

sys.path.insert(0, "tests")

from skillkit.deploy import load_base_ontology
from skillkit.planning import generate_domain, generate_problem, plan, validate_plan


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=200)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    from test_planning import bfs_oracle_length, planning_registry, random_instance

    ontology = load_base_ontology()
    domain = generate_domain(planning_registry(ontology).descriptions(), ontology)
    rng = random.Random(args.seed)

    times = []
    lengths = []
    mismatches = 0
    invalid = 0
    for index in range(args.instances):
        wm, goal = random_instance(rng, ontology)
        problem = generate_problem(wm.snapshot(), goal, domain)
        t0 = time.perf_counter()
        result = plan(domain, problem)
        times.append(time.perf_counter() - t0)
        lengths.append(len(result.steps))
        if not validate_plan(domain, problem, result):
            invalid += 1
        oracle = bfs_oracle_length(domain, problem)
        if oracle != len(result.steps):
            mismatches += 1

    print(f"instances      : {args.instances}")
    print(f"plan lengths   : min {min(lengths)}, median "
          f"{statistics.median(lengths)}, max {max(lengths)}")
    print(f"solve time     : mean {statistics.mean(times) * 1000:.2f} ms, "
          f"max {max(times) * 1000:.2f} ms, total {sum(times):.2f} s")
    print(f"oracle mismatch: {mismatches}")
    print(f"invalid plans  : {invalid}")
    return 0 if mismatches == 0 and invalid == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
