"""Run parameters, signal distributions and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError",
    "KOutOfRange",
    "AlphaOutOfRange",
    "BadCompetency",
    "BadDistribution",
    "SignalDistribution",
    "SimConfig",
    "validate_config",
    "make_rng",
]

STRICT_ALPHA_MAX = 2.0 / 3.0


class ConfigError(ValueError):
    """Raised when run parameters are invalid. ``field`` names the offending key."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class KOutOfRange(ConfigError):
    pass


class AlphaOutOfRange(ConfigError):
    pass


class BadCompetency(ConfigError):
    pass


class BadDistribution(ConfigError):
    pass


@dataclass(frozen=True)
class SignalDistribution:
    """Law of the per-dimension signals, supported on [0, 1].

    ``kind`` is one of ``"uniform01"``, ``"point"`` (params ``(c,)``) or
    ``"beta"`` (params ``(a, b)``).
    """

    kind: str = "uniform01"
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @classmethod
    def uniform(cls) -> "SignalDistribution":
        return cls("uniform01")

    @classmethod
    def point(cls, c: float) -> "SignalDistribution":
        return cls("point", (c,))

    @classmethod
    def beta(cls, a: float, b: float) -> "SignalDistribution":
        return cls("beta", (a, b))

    def check(self) -> None:
        if self.kind == "uniform01":
            if self.params:
                raise BadDistribution("uniform01 takes no parameters", "mu.params")
        elif self.kind == "point":
            if len(self.params) != 1:
                raise BadDistribution("point needs exactly one parameter", "mu.params")
            c = self.params[0]
            if not (0.0 <= c <= 1.0):
                raise BadDistribution(f"point mass {c} lies outside [0, 1]", "mu.params")
        elif self.kind == "beta":
            if len(self.params) != 2:
                raise BadDistribution("beta needs parameters (a, b)", "mu.params")
            a, b = self.params
            if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
                raise BadDistribution(f"beta parameters must be positive, got {self.params}", "mu.params")
        else:
            raise BadDistribution(f"unknown signal distribution {self.kind!r}", "mu.kind")

    @property
    def mean(self) -> float:
        if self.kind == "uniform01":
            return 0.5
        if self.kind == "point":
            return self.params[0]
        a, b = self.params
        return a / (a + b)

    @property
    def stddev(self) -> float:
        if self.kind == "uniform01":
            return 1.0 / math.sqrt(12.0)
        if self.kind == "point":
            return 0.0
        a, b = self.params
        return math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform01":
            return rng.random(size)
        if self.kind == "point":
            return np.full(size, self.params[0])
        return rng.beta(self.params[0], self.params[1], size)


@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int
    k: int
    alpha: float
    mu: SignalDistribution = field(default_factory=SignalDistribution)
    seed: int = 0
    steps: int = 0
    # relaxes the alpha bound from (0, 2/3) to (0, 1)
    allow_alpha_above_two_thirds: bool = False


def validate_config(cfg: SimConfig, C: np.ndarray | None = None, delta0: np.ndarray | None = None) -> SimConfig:
    """Return ``cfg`` unchanged if it (and the optional matrices) are admissible."""
    for name in ("n", "m", "k", "steps", "seed"):
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ConfigError(f"{name} must be an integer, got {value!r}", name)
    if cfg.n < 1:
        raise ConfigError(f"n must be >= 1, got {cfg.n}", "n")
    if cfg.m < 1:
        raise ConfigError(f"m must be >= 1, got {cfg.m}", "m")
    if not (1 <= cfg.k <= cfg.m):
        raise KOutOfRange(f"k must lie in [1, m={cfg.m}], got {cfg.k}", "k")
    if cfg.steps < 0:
        raise ConfigError(f"steps must be >= 0, got {cfg.steps}", "steps")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError("seed must be a 64-bit unsigned integer", "seed")

    hi = 1.0 if cfg.allow_alpha_above_two_thirds else STRICT_ALPHA_MAX
    alpha = float(cfg.alpha)
    if not (math.isfinite(alpha) and 0.0 < alpha < hi):
        bound = "(0, 1)" if cfg.allow_alpha_above_two_thirds else "(0, 2/3)"
        raise AlphaOutOfRange(f"alpha must lie in {bound}, got {cfg.alpha}", "alpha")

    cfg.mu.check()

    if C is not None:
        C = np.asarray(C, dtype=float)
        if C.shape != (cfg.n, cfg.m):
            raise BadCompetency(f"competency shape {C.shape} != ({cfg.n}, {cfg.m})", "competency")
        if not np.all(np.isfinite(C)) or C.min() < 0.0 or C.max() > 1.0:
            raise BadCompetency("competency entries must lie in [0, 1]", "competency")
    if delta0 is not None:
        delta0 = np.asarray(delta0, dtype=float)
        if delta0.shape != (cfg.n, cfg.m):
            raise ConfigError(f"delta0 shape {delta0.shape} != ({cfg.n}, {cfg.m})", "delta0")
        if not np.all(np.isfinite(delta0)):
            raise ConfigError("delta0 must be finite", "delta0")
    return cfg


def make_rng(seed) -> np.random.Generator:
    """Philox-backed generator; identical streams for identical seeds on every platform.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`.
    """
    return np.random.Generator(np.random.Philox(seed))
