"""Closed-form limits and conditional consensus moments."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .config import SignalDistribution

__all__ = [
    "DegenerateVariance",
    "CompetencyAverages",
    "ConsensusMoments",
    "averages",
    "eta",
    "limit_expectation",
    "conditional_mean",
    "conditional_variance",
    "consensus_moments",
    "enumerate_conditional_moments",
]

DERIVED = "derived"
PAPER = "paper"


class DegenerateVariance(ValueError):
    pass


@dataclass(frozen=True)
class CompetencyAverages:
    col_means: np.ndarray
    row_means: np.ndarray
    global_mean: float
    hat_c: np.ndarray  # mean of the other column means, per column


@dataclass(frozen=True)
class ConsensusMoments:
    j: int
    cond_mean: float
    cond_var: float
    variant: str


def averages(C: np.ndarray) -> CompetencyAverages:
    C = np.asarray(C, dtype=float)
    m = C.shape[1]
    col = C.mean(axis=0)
    row = C.mean(axis=1)
    glob = float(C.mean())
    if m > 1:
        hat = (math.fsum(col) - col) / (m - 1)
    else:
        # empty average; only ever multiplied by (k - 1) = 0
        hat = col.copy()
    return CompetencyAverages(col, row, glob, hat)


def eta(m: int, k: int) -> float:
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if k == m:
        # covers m = k = 1, where the formula reads 0/0
        return 0.0
    return (m - k) / (k * (m - 1) + m - k)


def limit_expectation(C: np.ndarray, m: int | None = None, k: int = 1) -> np.ndarray:
    """Limiting mean of the memory matrix.

    Mixes row-mean deviations (weight ``1/2 - eta``) and column-centred
    competencies (weight ``eta``).
    """
    C = np.asarray(C, dtype=float)
    n, m_ = C.shape
    if m is not None and m != m_:
        raise ValueError(f"m={m} does not match competency width {m_}")
    avg = averages(C)
    e = eta(m_, k)
    row_dev = np.broadcast_to((avg.row_means - avg.global_mean)[:, None], (n, m_))
    return (0.5 - e) * row_dev + e * (C - avg.col_means[None, :])


def conditional_mean(C: np.ndarray, mu: SignalDistribution, k: int, j: int, variant: str = DERIVED) -> float:
    """E[normalised consensus | j active], assuming zero initial memory.

    ``variant="derived"`` adds the other active columns' mean competency;
    ``variant="paper"`` subtracts that term instead; it is kept only for
    side-by-side comparison and fails against simulation.
    """
    avg = averages(C)
    cj, hj = avg.col_means[j], avg.hat_c[j]
    if variant == DERIVED:
        return mu.mean - (cj + (k - 1) * hj) / k
    if variant == PAPER:
        return mu.mean - (cj - (k - 1) * hj) / k
    raise ValueError(f"unknown variant {variant!r}")


def _spread_correction(avg: CompetencyAverages, m: int, k: int, j: int) -> float:
    if (k - 1) * (m - k) == 0:
        return 0.0
    if m < 3:
        raise DegenerateVariance(f"correction undefined for m={m}, k={k}")
    others = np.delete(avg.col_means, j)
    spread = math.fsum((others - avg.hat_c[j]) ** 2)
    return (k - 1) * (m - k) / (k**2 * (m - 1) * (m - 2)) * spread


def conditional_variance(C: np.ndarray, mu: SignalDistribution, k: int, j: int, m: int | None = None) -> float:
    """Var(normalised consensus | j active): signal noise plus competency spread."""
    C = np.asarray(C, dtype=float)
    m_ = C.shape[1]
    if m is not None and m != m_:
        raise ValueError(f"m={m} does not match competency width {m_}")
    return mu.stddev**2 / k + _spread_correction(averages(C), m_, k, j)


def consensus_moments(C, mu, k, j, variant: str = DERIVED) -> ConsensusMoments:
    return ConsensusMoments(j, conditional_mean(C, mu, k, j, variant), conditional_variance(C, mu, k, j), variant)


def enumerate_conditional_moments(C: np.ndarray, mu: SignalDistribution, k: int, j: int) -> tuple[float, float]:
    """Brute-force conditional mean and variance over every k-subset containing ``j``.

    Given the subset, the normalised consensus is the average signal minus
    the average active column mean; the signal part has mean ``mu.mean`` and
    variance ``sigma^2 / k`` independently of the subset. Law of total
    variance combines the two.
    """
    C = np.asarray(C, dtype=float)
    m = C.shape[1]
    col = C.mean(axis=0)
    others = [r for r in range(m) if r != j]
    shifts = []
    for rest in itertools.combinations(others, k - 1):
        shifts.append((col[j] + sum(col[r] for r in rest)) / k)
    shifts = np.array(shifts)
    mean = mu.mean - shifts.mean()
    var = mu.stddev**2 / k + float(np.mean((shifts - shifts.mean()) ** 2))
    return float(mean), var
