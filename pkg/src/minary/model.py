"""One iteration of the consensus dynamics and seeded multi-step runs.

Indices are 0-based throughout the Python API. An active set is a sorted
tuple of column indices; signals and all per-active-column arrays follow
that order.

Random draw order per step (the reproducibility contract):

1. active set: one draw ``q = rng.integers(0, m (m-1) ... (m-k+1))``,
   decoded in mixed radix into the offsets of a partial Fisher-Yates
   shuffle of ``range(m)``; the first ``k`` slots are sorted. If the
   falling factorial does not fit in int64, ``k`` draws
   ``rng.integers(0, m - i)`` are used instead;
2. signals: ``mu.sample(rng, k)``, assigned to the active columns in
   ascending order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .config import SignalDistribution, SimConfig, make_rng, validate_config

__all__ = [
    "StepTrace",
    "sample_active_set",
    "sample_signals",
    "draw_step",
    "raw_responses",
    "adjusted_responses",
    "average_adjusted",
    "consensus",
    "learning_signals",
    "update_delta",
    "step",
    "run",
]


@dataclass(frozen=True)
class StepTrace:
    t: int
    active: tuple[int, ...]
    signals: np.ndarray  # (k,), aligned with ``active``
    raw: np.ndarray  # (n, k)
    adjusted: np.ndarray  # (n, k)
    averaged: np.ndarray  # (n,)
    consensus: float
    learning: np.ndarray  # (n,)
    delta_after: np.ndarray  # (n, m)

    @property
    def normalized(self) -> float:
        return self.consensus / self.averaged.shape[0]

    @property
    def signal_map(self) -> dict[int, float]:
        return {j: float(x) for j, x in zip(self.active, self.signals)}


def _cols(active) -> np.ndarray:
    if isinstance(active, np.ndarray):
        return active
    return np.fromiter(active, dtype=np.intp, count=len(active))


def sample_active_set(rng: np.random.Generator, m: int, k: int) -> tuple[int, ...]:
    """Uniform k-subset of ``range(m)`` by partial Fisher-Yates."""
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    perm = list(range(m))
    span = math.perm(m, k)
    if span < 2**63:
        q = int(rng.integers(0, span))
        offsets = []
        for i in range(k):
            q, off = divmod(q, m - i)
            offsets.append(off)
    else:
        offsets = [int(rng.integers(0, m - i)) for i in range(k)]
    for i, off in enumerate(offsets):
        j = i + off
        perm[i], perm[j] = perm[j], perm[i]
    return tuple(sorted(perm[:k]))


def sample_signals(rng: np.random.Generator, active: Sequence[int], mu: SignalDistribution) -> np.ndarray:
    return mu.sample(rng, len(active))


def draw_step(rng: np.random.Generator, m: int, k: int, mu: SignalDistribution):
    active = sample_active_set(rng, m, k)
    return active, sample_signals(rng, active, mu)


def raw_responses(C: np.ndarray, signals: np.ndarray, active: Sequence[int]) -> np.ndarray:
    return np.asarray(signals, dtype=float)[None, :] - C[:, _cols(active)]


def adjusted_responses(raw: np.ndarray, delta_prev: np.ndarray, active: Sequence[int]) -> np.ndarray:
    return raw + delta_prev[:, _cols(active)]


def average_adjusted(adjusted: np.ndarray, k: int) -> np.ndarray:
    return adjusted.sum(axis=1) / k


def consensus(averaged: np.ndarray) -> float:
    # fsum is correctly rounded, hence exactly invariant under reordering
    return math.fsum(averaged)


def learning_signals(G: float, averaged: np.ndarray, n: int) -> np.ndarray:
    return G / n - averaged


def update_delta(delta_prev: np.ndarray, learning: np.ndarray, active: Sequence[int], alpha: float) -> np.ndarray:
    out = delta_prev.copy()
    cols = _cols(active)
    out[:, cols] = alpha * learning[:, None] + (1.0 - alpha) * delta_prev[:, cols]
    return out


def step(
    delta: np.ndarray,
    C: np.ndarray,
    cfg: SimConfig,
    rng: np.random.Generator | None = None,
    *,
    active: Sequence[int] | None = None,
    signals: Sequence[float] | None = None,
    t: int = 1,
) -> StepTrace:
    """Advance the memory matrix ``delta`` by one iteration.

    ``active`` and ``signals`` force the random draws (used by the golden
    scenarios); whatever is not forced is drawn from ``rng`` in the
    documented order.
    """
    if active is None:
        active = sample_active_set(rng, cfg.m, cfg.k)
    else:
        active = tuple(sorted(int(j) for j in active))
    if signals is None:
        signals = sample_signals(rng, active, cfg.mu)
    signals = np.asarray(signals, dtype=float)

    cols = _cols(active)
    raw = raw_responses(C, signals, cols)
    adjusted = adjusted_responses(raw, delta, cols)
    averaged = average_adjusted(adjusted, len(active))
    G = consensus(averaged)
    d = learning_signals(G, averaged, cfg.n)
    delta_after = update_delta(delta, d, cols, cfg.alpha)
    return StepTrace(t, active, signals, raw, adjusted, averaged, G, d, delta_after)


def run(cfg: SimConfig, C: np.ndarray, delta0: np.ndarray | None = None) -> Iterator[StepTrace]:
    """Yield ``cfg.steps`` traces, seeded by ``cfg.seed``.

    Only the current state is held, so memory stays O(nm) when the caller
    drops the traces.
    """
    C = np.asarray(C, dtype=float)
    validate_config(cfg, C, delta0)
    delta = np.zeros((cfg.n, cfg.m)) if delta0 is None else np.array(delta0, dtype=float)
    rng = make_rng(cfg.seed)
    for t in range(1, cfg.steps + 1):
        trace = step(delta, C, cfg, rng, t=t)
        delta = trace.delta_after
        yield trace
