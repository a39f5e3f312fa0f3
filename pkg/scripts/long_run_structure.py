"""Long-horizon structure of the worked examples across seeds.

For each seed the memory matrix after the configured number of steps is
compared with the closed-form limit: sign agreement on nonzero cells,
the ratio of magnitudes and, for the halo example, the expert row mean
against the generalists'. Also prints how the ensemble mean approaches
the limit over time.
"""

import argparse

import numpy as np

from minary.config import SimConfig
from minary.model import run
from minary.montecarlo import EnsembleSpec, run_ensemble
from minary.scenarios import scenario
from minary.theory import limit_expectation


def per_seed(name, seeds, steps):
    sc = scenario(name)
    cfg = sc.config
    U = limit_expectation(sc.C, cfg.m, cfg.k)
    nz = np.abs(U) > 1e-12
    print(f"{name}: {seeds} seeds x {steps} steps")
    for seed in range(seeds):
        run_cfg = SimConfig(**{**cfg.__dict__, "seed": seed, "steps": steps})
        *_, last = run(run_cfg, sc.C)
        D = last.delta_after
        agree = float(np.mean(np.sign(D[nz]) == np.sign(U[nz]))) if nz.any() else float("nan")
        line = f"  seed {seed}: sign agreement with limit {agree:.2f}, max|delta| {np.abs(D).max():.4f}"
        if sc.printed_long_run is not None:
            P = sc.printed_long_run
            pz = P != 0
            line += f", agreement with printed {np.mean(np.sign(D[pz]) == np.sign(P[pz])):.2f}"
        if name == "halo":
            line += f", expert row mean {D[0].mean():+.4f} vs others {D[1:].mean():+.4f}"
        print(line)


def approach(name, replicas, checkpoints):
    sc = scenario(name)
    cfg = sc.config
    U = limit_expectation(sc.C, cfg.m, cfg.k)
    print(f"{name}: distance of the {replicas}-replica mean to the limit")
    for steps in checkpoints:
        res = run_ensemble(EnsembleSpec(cfg, replicas, steps, 0), sc.C)
        print(f"  t={steps:>6}: ||mean - U||_F = {np.linalg.norm(res.terminal.mean(axis=0) - U):.5f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--replicas", type=int, default=200)
    args = ap.parse_args()
    for name in ("generalist", "halo"):
        per_seed(name, args.seeds, args.steps)
    approach("generalist", args.replicas, [0, 50, 100, 200, 400, 800, 1600])


if __name__ == "__main__":
    main()
