"""JSON run configs, CSV series and JSON snapshots.

Config document::

    {"n": 3, "m": 6, "k": 3, "alpha": 0.02,
     "mu": {"kind": "uniform01", "params": []},
     "competency": [[...], ...],
     "seed": 42, "steps": 1000}

``competency`` may instead be a generator rule such as
``{"rule": "halo", "expert_row": 1, "expert_col": 14, "hi": 0.9, "lo": 0.5}``.
Optional keys: ``delta0`` (n x m list) and ``allow_alpha_above_two_thirds``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, SignalDistribution, SimConfig, validate_config
from .scenarios import Scenario, halo_competency

__all__ = [
    "RunSetup",
    "parse_config",
    "load_config",
    "emit_config",
    "scenario_to_config",
    "write_series",
    "write_json",
    "jsonable",
]

SERIES_HEADER_FIXED = ["step", "gbar", "active"]


@dataclass
class RunSetup:
    config: SimConfig
    C: np.ndarray
    delta0: np.ndarray | None = None
    competency_rule: dict | None = None

    def __eq__(self, other):
        if not isinstance(other, RunSetup):
            return NotImplemented
        same_delta = (self.delta0 is None and other.delta0 is None) or (
            self.delta0 is not None and other.delta0 is not None and np.array_equal(self.delta0, other.delta0)
        )
        return (
            self.config == other.config
            and np.array_equal(self.C, other.C)
            and same_delta
            and self.competency_rule == other.competency_rule
        )


def _int(doc, key, default=None):
    if key not in doc:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", key)
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}", key)
    return value


def _competency(spec, n, m):
    if isinstance(spec, dict):
        if spec.get("rule") != "halo":
            raise ConfigError(f"unknown competency rule {spec.get('rule')!r}", "competency.rule")
        params = {k: spec[k] for k in ("expert_row", "expert_col", "hi", "lo") if k in spec}
        try:
            return halo_competency(n, m, **params), dict(spec)
        except IndexError:
            raise ConfigError("halo expert cell lies outside the matrix", "competency") from None
    try:
        C = np.array(spec, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("competency must be a numeric n x m array", "competency") from None
    return C, None


def parse_config(doc: dict) -> RunSetup:
    """Build and validate a :class:`RunSetup` from a config document."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    n, m, k = _int(doc, "n"), _int(doc, "m"), _int(doc, "k")
    if "alpha" not in doc:
        raise ConfigError("missing required key 'alpha'", "alpha")
    alpha = doc["alpha"]
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
        raise ConfigError(f"alpha must be a number, got {alpha!r}", "alpha")

    mu_doc = doc.get("mu", {"kind": "uniform01"})
    if not isinstance(mu_doc, dict) or "kind" not in mu_doc:
        raise ConfigError("mu must be an object with a 'kind'", "mu")
    try:
        mu = SignalDistribution(str(mu_doc["kind"]), tuple(mu_doc.get("params", ())))
    except (TypeError, ValueError):
        raise ConfigError("mu.params must be a list of numbers", "mu.params") from None

    allow = doc.get("allow_alpha_above_two_thirds", False)
    if not isinstance(allow, bool):
        raise ConfigError("allow_alpha_above_two_thirds must be a boolean", "allow_alpha_above_two_thirds")
    cfg = SimConfig(
        n=n,
        m=m,
        k=k,
        alpha=float(alpha),
        mu=mu,
        seed=_int(doc, "seed", 0),
        steps=_int(doc, "steps", 0),
        allow_alpha_above_two_thirds=allow,
    )
    if "competency" not in doc:
        raise ConfigError("missing required key 'competency'", "competency")
    C, rule = _competency(doc["competency"], n, m)
    delta0 = None
    if doc.get("delta0") is not None:
        try:
            delta0 = np.array(doc["delta0"], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("delta0 must be a numeric n x m array", "delta0") from None
    validate_config(cfg, C, delta0)
    return RunSetup(cfg, C, delta0, rule)


def load_config(path) -> RunSetup:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "<json>") from None
    return parse_config(doc)


def emit_config(setup: RunSetup) -> dict:
    cfg = setup.config
    doc = {
        "n": cfg.n,
        "m": cfg.m,
        "k": cfg.k,
        "alpha": cfg.alpha,
        "mu": {"kind": cfg.mu.kind, "params": list(cfg.mu.params)},
        "competency": dict(setup.competency_rule) if setup.competency_rule else setup.C.tolist(),
        "seed": cfg.seed,
        "steps": cfg.steps,
    }
    if cfg.allow_alpha_above_two_thirds:
        doc["allow_alpha_above_two_thirds"] = True
    if setup.delta0 is not None:
        doc["delta0"] = np.asarray(setup.delta0).tolist()
    return doc


def scenario_to_config(sc: Scenario) -> dict:
    return emit_config(RunSetup(sc.config, sc.C, None, sc.competency_rule))


def write_series(path, traces, n: int) -> int:
    """Stream traces into ``series.csv``; returns the number of data rows.

    Active dimensions are written 1-based and space separated. Floats use
    ``repr`` (shortest round-trip form), independent of locale.
    """
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_HEADER_FIXED + [f"d_{i + 1}" for i in range(n)])
        for trace in traces:
            writer.writerow(
                [trace.t, repr(float(trace.normalized)), " ".join(str(j + 1) for j in trace.active)]
                + [repr(float(v)) for v in trace.learning]
            )
            rows += 1
    return rows


def jsonable(obj):
    """Convert numpy values and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def delta_snapshot(setup: RunSetup, delta: np.ndarray, t: int) -> dict:
    return {
        "version": __version__,
        "seed": setup.config.seed,
        "t": t,
        "config": emit_config(setup),
        "delta": np.asarray(delta).tolist(),
    }
