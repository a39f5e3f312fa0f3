"""Ensemble mean of the memory matrix against the closed-form limit.

    python scripts/limit_experiment.py --scenario generalist --replicas 400
"""

import argparse
import time

import numpy as np

from minary.montecarlo import EnsembleSpec, compare_report, estimate_delta_mean, run_ensemble
from minary.scenarios import SCENARIOS, scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", choices=sorted(SCENARIOS), default="generalist")
    ap.add_argument("--replicas", type=int, default=400)
    ap.add_argument("--burn-in", type=int, default=2000)
    ap.add_argument("--measure-steps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    sc = scenario(args.scenario)
    spec = EnsembleSpec(sc.config, args.replicas, args.burn_in, args.measure_steps, args.seed, args.workers)
    t0 = time.perf_counter()
    result = run_ensemble(spec, sc.C)
    reports = estimate_delta_mean(result, sc.C)
    elapsed = time.perf_counter() - t0

    n, m = sc.config.n, sc.config.m
    est = np.array([r.estimate for r in reports]).reshape(n, m)
    target = np.array([r.target for r in reports]).reshape(n, m)
    z = np.array([r.z_score for r in reports]).reshape(n, m)
    np.set_printoptions(precision=4, suppress=True, linewidth=140)
    print(f"{args.scenario}: {args.replicas} replicas x {spec.total_steps} steps in {elapsed:.1f}s")
    print("ensemble mean:\n", est)
    print("closed-form limit:\n", target)
    print("z-scores:\n", z)
    summary = compare_report(reports, 0.95)
    print(f"cells within |z|<=4: {summary['passed']}/{summary['count']}, max |z| {summary['max_abs_z']:.2f}")
    if summary["warnings"]:
        print("warnings:", summary["warnings"])


if __name__ == "__main__":
    main()
