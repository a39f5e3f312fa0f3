"""Seeded replica ensembles and z-score checks against the closed forms.

Replica ``r`` is driven by ``SeedSequence(master_seed).spawn(replicas)[r]``
fed to the Philox generator; spawn keys are distinct, so replica seeds are
injective in ``(master_seed, r)``. Each replica consumes its stream in the
same per-step order as :func:`minary.model.run`.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig, make_rng, validate_config
from .model import draw_step
from .theory import DERIVED, conditional_mean, conditional_variance, limit_expectation

__all__ = [
    "InsufficientBurnIn",
    "TooFewSamples",
    "EnsembleSpec",
    "EnsembleResult",
    "EstimateReport",
    "replica_seeds",
    "run_ensemble",
    "estimate_delta_mean",
    "estimate_conditional_consensus",
    "inclusion_rate",
    "compare_report",
]


class InsufficientBurnIn(UserWarning):
    pass


class TooFewSamples(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    base: SimConfig
    replicas: int
    burn_in: int
    measure_steps: int
    master_seed: int = 0
    workers: int = 1

    @property
    def total_steps(self) -> int:
        return self.burn_in + self.measure_steps


@dataclass
class EnsembleResult:
    spec: EnsembleSpec
    terminal: np.ndarray  # (R, n, m)
    half_means: np.ndarray  # (R, 2, n, m), per-replica means over each half of the window
    gbar: np.ndarray  # (R, T), normalised consensus during the measurement window
    membership: np.ndarray  # (R, T, m) bool, column active at that step


@dataclass(frozen=True)
class EstimateReport:
    quantity: str
    estimate: float
    std_error: float
    target: float
    z_score: float
    passed: bool
    flags: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "target": self.target,
            "z_score": self.z_score,
            "pass": self.passed,
            "flags": list(self.flags),
        }


def replica_seeds(master_seed: int, replicas: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(replicas)


def _simulate(args):
    spec, C, delta0, seeds = args
    cfg = spec.base
    n, m, k, a = cfg.n, cfg.m, cfg.k, float(cfg.alpha)
    R = len(seeds)
    T = spec.measure_steps
    rngs = [make_rng(s) for s in seeds]

    delta = np.broadcast_to(delta0, (R, n, m)).copy()
    gbar = np.empty((R, T))
    membership = np.zeros((R, T, m), dtype=bool)
    sums = np.zeros((R, 2, n, m))
    half = T // 2
    idx = np.empty((R, k), dtype=np.intp)
    x = np.empty((R, k))
    rows = np.arange(R)[:, None]

    for t in range(spec.total_steps):
        for r, rng in enumerate(rngs):
            active, signals = draw_step(rng, m, k, cfg.mu)
            idx[r] = active
            x[r] = signals
        gather = np.broadcast_to(idx[:, None, :], (R, n, k))
        Cg = C.T[idx].transpose(0, 2, 1)
        Dg = np.take_along_axis(delta, gather, axis=2)
        averaged = (x[:, None, :] - Cg + Dg).sum(axis=2) / k
        G = averaged.sum(axis=1)
        d = G[:, None] / n - averaged
        np.put_along_axis(delta, gather, a * d[:, :, None] + (1.0 - a) * Dg, axis=2)

        s = t - spec.burn_in
        if s >= 0:
            gbar[:, s] = G / n
            membership[rows, s, idx] = True
            sums[:, 0 if s < half else 1] += delta

    if T >= 2:
        sums[:, 0] /= half
        sums[:, 1] /= T - half
    return delta, sums, gbar, membership


def run_ensemble(spec: EnsembleSpec, C: np.ndarray, delta0: np.ndarray | None = None) -> EnsembleResult:
    """Run every replica for ``burn_in + measure_steps`` steps.

    Results do not depend on ``spec.workers``: replicas are split into
    contiguous chunks and reassembled in replica order.
    """
    C = np.asarray(C, dtype=float)
    cfg = spec.base
    validate_config(cfg, C, delta0)
    if spec.replicas < 1:
        raise ValueError("replicas must be >= 1")
    if spec.burn_in < 0 or spec.measure_steps < 0:
        raise ValueError("burn_in and measure_steps must be >= 0")
    delta0 = np.zeros((cfg.n, cfg.m)) if delta0 is None else np.asarray(delta0, dtype=float)

    seeds = replica_seeds(spec.master_seed, spec.replicas)
    workers = max(1, min(spec.workers, spec.replicas))
    bounds = np.linspace(0, spec.replicas, workers + 1).astype(int)
    jobs = [(spec, C, delta0, seeds[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        parts = [_simulate(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate, jobs))
    terminal, sums, gbar, membership = (np.concatenate(p, axis=0) for p in zip(*parts))
    return EnsembleResult(spec, terminal, sums, gbar, membership)


# differences below this are binary64 noise, not sampling error
NOISE_FLOOR = 1e-12


def _z(estimate: float, target: float, se: float) -> float:
    diff = estimate - target
    if abs(diff) <= NOISE_FLOOR:
        return 0.0
    if se > 0:
        return diff / se
    return math.copysign(math.inf, diff)


def estimate_delta_mean(result: EnsembleResult, C: np.ndarray, z_threshold: float = 4.0) -> list[EstimateReport]:
    """Cross-replica mean of the terminal memory matrix, one report per cell.

    Burn-in adequacy: per cell, the drift between the two half-window means
    is flagged ``insufficient-burn-in`` (and warned about) when it is both
    significant at ``z_threshold`` and larger than the cell's standard error.
    """
    spec = result.spec
    if spec.measure_steps == 0:
        return []
    cfg = spec.base
    target = limit_expectation(C, cfg.m, cfg.k)
    R = result.terminal.shape[0]
    est = result.terminal.mean(axis=0)
    se = result.terminal.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(est)

    drift_per_rep = result.half_means[:, 1] - result.half_means[:, 0]
    drift = drift_per_rep.mean(axis=0)
    drift_se = drift_per_rep.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(est)

    reports = []
    flagged = []
    for i in range(cfg.n):
        for j in range(cfg.m):
            z = _z(float(est[i, j]), float(target[i, j]), float(se[i, j]))
            flags = ()
            if spec.measure_steps >= 2 and abs(drift[i, j]) > se[i, j]:
                if abs(_z(float(drift[i, j]), 0.0, float(drift_se[i, j]))) > z_threshold:
                    flags = ("insufficient-burn-in",)
                    flagged.append((i, j))
            reports.append(
                EstimateReport(f"delta[{i},{j}]", float(est[i, j]), float(se[i, j]), float(target[i, j]), z, abs(z) <= z_threshold, flags)
            )
    if flagged:
        warnings.warn(f"burn-in drift exceeds standard error in cells {flagged}", InsufficientBurnIn, stacklevel=2)
    return reports


def inclusion_rate(result: EnsembleResult, j: int) -> float:
    return float(result.membership[:, :, j].mean())


def estimate_conditional_consensus(
    result: EnsembleResult,
    j: int,
    C: np.ndarray,
    variant: str = DERIVED,
    z_threshold: float = 4.0,
    min_samples: int = 1000,
) -> tuple[EstimateReport, EstimateReport]:
    """Sample mean and variance of the normalised consensus over steps with ``j`` active.

    Given zero initial memory these samples are i.i.d. across steps and
    replicas, so plain sample standard errors apply. The variance error
    uses the fourth central moment.
    """
    cfg = result.spec.base
    samples = result.gbar[result.membership[:, :, j]]
    N = samples.size
    if N < min_samples:
        raise TooFewSamples(f"only {N} conditioned samples for column {j}, need {min_samples}")

    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    se_mean = math.sqrt(var / N)
    m4 = float(np.mean((samples - mean) ** 4))
    se_var = math.sqrt(max(m4 - var**2 * (N - 3) / (N - 1), 0.0) / N)

    t_mean = conditional_mean(C, cfg.mu, cfg.k, j, variant)
    t_var = conditional_variance(C, cfg.mu, cfg.k, j)
    z_mean = _z(mean, t_mean, se_mean)
    z_var = _z(var, t_var, se_var)
    return (
        EstimateReport(f"gbar_mean[j={j},{variant}]", mean, se_mean, t_mean, z_mean, abs(z_mean) <= z_threshold),
        EstimateReport(f"gbar_var[j={j}]", var, se_var, t_var, z_var, abs(z_var) <= z_threshold),
    )


def compare_report(reports, min_pass_fraction: float = 1.0) -> dict:
    """Aggregate reports into a pass/fail summary.

    The family passes when at least ``min_pass_fraction`` of the reports
    pass individually.
    """
    reports = list(reports)
    if not reports:
        return {"pass": True, "count": 0, "passed": 0, "max_abs_z": 0.0, "failed": [], "warnings": ["no estimates"]}
    failed = [r.quantity for r in reports if not r.passed]
    n_pass = len(reports) - len(failed)
    flagged = sorted({f for r in reports for f in r.flags})
    return {
        "pass": n_pass >= min_pass_fraction * len(reports),
        "count": len(reports),
        "passed": n_pass,
        "max_abs_z": max(abs(r.z_score) for r in reports),
        "failed": failed,
        "warnings": flagged,
    }
