"""Verification suites: each returns a list of check records.

A check record is a dict with at least ``name``, ``pass`` and ``value``;
``threshold`` is the bound the value is compared with.
"""

from __future__ import annotations

import math

import numpy as np

from .affine import (
    AffinePiece,
    apply_A,
    apply_phi,
    c_dev,
    exact_norm,
    expected_operator,
    inclusion_probabilities,
    operator_norm,
    q_matrix,
    qs_square,
    stationary_expectation_oracle,
    w_matrix,
)
from .config import STRICT_ALPHA_MAX, SignalDistribution, SimConfig
from .model import run, sample_active_set, step
from .montecarlo import (
    EnsembleSpec,
    compare_report,
    estimate_conditional_consensus,
    estimate_delta_mean,
    inclusion_rate,
    run_ensemble,
)
from .theory import (
    DERIVED,
    PAPER,
    averages,
    conditional_mean,
    conditional_variance,
    enumerate_conditional_moments,
    limit_expectation,
)

__all__ = [
    "SUITES",
    "random_setup",
    "conservation_suite",
    "affine_suite",
    "lipschitz_suite",
    "identities_suite",
    "limit_suite",
    "limit_mc_suite",
    "consensus_moments_suite",
    "run_suite",
]

SUITES = ("conservation", "affine", "lipschitz", "limit", "consensus-moments", "identities")


def _check(name, value, threshold, passed=None, **extra):
    if passed is None:
        passed = bool(value <= threshold)
    return {"name": name, "pass": bool(passed), "value": float(value), "threshold": float(threshold), **extra}


def random_setup(rng: np.random.Generator, n_max=6, m_max=8, alpha_max=STRICT_ALPHA_MAX, seed=None):
    """Random (config, C) pair with uniform competencies and signals."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    k = int(rng.integers(1, m + 1))
    alpha = float(rng.uniform(0.0, alpha_max))
    while alpha == 0.0:
        alpha = float(rng.uniform(0.0, alpha_max))
    seed = int(rng.integers(0, 2**63)) if seed is None else seed
    cfg = SimConfig(n=n, m=m, k=k, alpha=alpha, mu=SignalDistribution.uniform(), seed=seed)
    return cfg, rng.random((n, m))


def conservation_suite(trials=100, steps=1000, seed=0):
    """Sum of learning signals and column means of the memory, every step of seeded runs from zero."""
    rng = np.random.default_rng(seed)
    worst_sum, worst_col, total = 0.0, 0.0, 0
    for _ in range(trials):
        cfg, C = random_setup(rng)
        cfg = SimConfig(**{**cfg.__dict__, "steps": steps})
        for trace in run(cfg, C):
            worst_sum = max(worst_sum, abs(math.fsum(trace.learning)))
            worst_col = max(worst_col, float(np.abs(trace.delta_after.mean(axis=0)).max()))
            total += 1
    return [
        _check("max |sum_i d_i|", worst_sum, 1e-12, steps=total),
        _check("max |column mean of delta|", worst_col, 1e-10, steps=total),
    ]


def affine_suite(trials=10_000, seed=0):
    """Signal cancellation, step/affine-map equivalence and subspace invariance."""
    rng = np.random.default_rng(seed)
    worst_cancel_d, worst_cancel_delta, worst_equiv, worst_leak = 0.0, 0.0, 0.0, 0.0
    for _ in range(trials):
        cfg, C = random_setup(rng)
        delta = rng.normal(scale=0.3, size=(cfg.n, cfg.m))
        active = sample_active_set(rng, cfg.m, cfg.k)
        x1, x2 = rng.random(cfg.k), rng.random(cfg.k)
        t1 = step(delta, C, cfg, active=active, signals=x1)
        t2 = step(delta, C, cfg, active=active, signals=x2)
        worst_cancel_d = max(worst_cancel_d, float(np.abs(t1.learning - t2.learning).max()))
        worst_cancel_delta = max(worst_cancel_delta, float(np.abs(t1.delta_after - t2.delta_after).max()))

        piece = AffinePiece.from_competency(C, active, cfg.alpha)
        worst_equiv = max(worst_equiv, float(np.linalg.norm(t1.delta_after - apply_phi(piece, delta))))

        # V: rows equal; V-perp: columns sum to zero
        in_v = np.broadcast_to(delta.mean(axis=0), delta.shape)
        in_vperp = delta - in_v
        out_v, out_vperp = apply_A(piece, in_v), apply_A(piece, in_vperp)
        leak = max(
            float(np.abs(out_v - out_v.mean(axis=0)).max()),
            float(np.abs(out_vperp.mean(axis=0)).max()),
        )
        worst_leak = max(worst_leak, leak)
    return [
        _check("signal cancellation: max |d(x1) - d(x2)|", worst_cancel_d, 1e-12, trials=trials),
        _check("signal cancellation: max |delta(x1) - delta(x2)|", worst_cancel_delta, 1e-12, trials=trials),
        _check("affine equivalence: max ||step - phi||_F", worst_equiv, 1e-12, trials=trials),
        _check("subspace invariance leakage", worst_leak, 1e-12, trials=trials),
    ]


def _covering_sequence(rng, m, k, extra=2):
    sets, covered = [], set()
    while len(covered) < m:
        S = sample_active_set(rng, m, k)
        sets.append(S)
        covered.update(S)
    for _ in range(int(rng.integers(0, extra + 1))):
        sets.append(sample_active_set(rng, m, k))
    return sets


def lipschitz_suite(pieces=1000, compositions=100, seed=0):
    """Single-step Lipschitz bound, strict contraction of covering compositions, SVD cross-check."""
    rng = np.random.default_rng(seed)
    worst_single, worst_svd, svd_count = 0.0, 0.0, 0
    for _ in range(pieces):
        cfg, C = random_setup(rng, n_max=6, m_max=10)
        piece = AffinePiece.from_competency(C, sample_active_set(rng, cfg.m, cfg.k), cfg.alpha)
        lip = operator_norm(piece)
        worst_single = max(worst_single, lip)
        if cfg.n * cfg.m <= 400:
            worst_svd = max(worst_svd, abs(lip - exact_norm(piece)))
            svd_count += 1

    worst_cover = 0.0
    for _ in range(compositions):
        cfg, C = random_setup(rng, n_max=5, m_max=8)
        cd = c_dev(C)
        seq = [AffinePiece(S, cfg.alpha, cfg.k, cd) for S in _covering_sequence(rng, cfg.m, cfg.k)]
        lip = operator_norm(seq)
        worst_cover = max(worst_cover, lip)
        if cfg.n * cfg.m <= 400:
            worst_svd = max(worst_svd, abs(lip - exact_norm(seq)))
            svd_count += 1
    return [
        _check("max Lip(A^S) over single pieces", worst_single, 1 + 1e-9, trials=pieces),
        _check(
            "max Lip over covering compositions (strictly < 1)",
            worst_cover,
            1.0,
            passed=worst_cover < 1.0,
            margin=1.0 - worst_cover,
            trials=compositions,
        ),
        _check("max |power iteration - SVD|", worst_svd, 1e-8, trials=svd_count),
    ]


def identities_suite(trials=100, seed=0):
    """Algebraic identities behind the limit formula."""
    rng = np.random.default_rng(seed)
    worst = {"qs_square": 0.0, "RW": 0.0, "CdevW": 0.0, "fixed_point": 0.0}
    for _ in range(trials):
        cfg, C = random_setup(rng)
        n, m, k, a = cfg.n, cfg.m, cfg.k, cfg.alpha
        S = sample_active_set(rng, m, k)
        Q = q_matrix(S, a, k, m)
        worst["qs_square"] = max(worst["qs_square"], float(np.abs(Q @ Q - qs_square(S, a, k, m)).max()))

        avg = averages(C)
        R = np.broadcast_to((avg.row_means - avg.global_mean)[:, None], (n, m))
        W = w_matrix(m, k)
        p1, p2 = inclusion_probabilities(m, k)
        cd = c_dev(C)
        worst["RW"] = max(worst["RW"], float(np.abs(R @ W - (k**2 / m) * R).max()))
        worst["CdevW"] = max(worst["CdevW"], float(np.abs(cd @ W - ((p1 - p2) * cd + p2 * m * R)).max()))

        U = limit_expectation(C, m, k)
        op = expected_operator(C, cfg)
        resid = (op.matrix @ U.ravel()).reshape(n, m) + op.rhs - U
        worst["fixed_point"] = max(worst["fixed_point"], float(np.abs(resid).max()))
    return [
        _check("(Q^S)^2 closed form", worst["qs_square"], 1e-12, trials=trials),
        _check("RW = (k^2/m) R", worst["RW"], 1e-12, trials=trials),
        _check("Cdev W = (p1-p2) Cdev + p2 m R", worst["CdevW"], 1e-12, trials=trials),
        _check("U = E[A] U + E[B]", worst["fixed_point"], 1e-12, trials=trials),
    ]


def limit_suite(trials=100, seed=0, n_max=8, m_max=8):
    """Closed-form limit against the linear-solve oracle; both assembly paths agree."""
    rng = np.random.default_rng(seed)
    worst, worst_paths, worst_cell = 0.0, 0.0, None
    for t in range(trials):
        cfg, C = random_setup(rng, n_max=n_max, m_max=m_max)
        U = limit_expectation(C, cfg.m, cfg.k)
        E = stationary_expectation_oracle(C, cfg)
        diff = np.abs(U - E)
        if diff.max() > worst:
            worst = float(diff.max())
            i, j = np.unravel_index(int(diff.argmax()), diff.shape)
            worst_cell = {"trial": t, "n": cfg.n, "m": cfg.m, "k": cfg.k, "cell": [int(i), int(j)]}
        if math.comb(cfg.m, cfg.k) <= 2000:
            enum = expected_operator(C, cfg, "enumerate")
            closed = expected_operator(C, cfg, "closed")
            worst_paths = max(
                worst_paths,
                float(np.abs(enum.matrix - closed.matrix).max()),
                float(np.abs(enum.rhs - closed.rhs).max()),
            )
    return [
        _check("max |closed form - linear solve|", worst, 1e-10, trials=trials, worst_cell=worst_cell),
        _check("max |enumerated - closed-form E[A], E[B]|", worst_paths, 1e-12, trials=trials),
    ]


def limit_mc_suite(cfg: SimConfig, C, replicas=400, burn_in=2000, measure_steps=1000, seed=0, workers=1, z_threshold=4.0, min_fraction=0.95):
    """Monte Carlo mean of the memory matrix against the closed-form limit."""
    spec = EnsembleSpec(cfg, replicas, burn_in, measure_steps, seed, workers)
    result = run_ensemble(spec, C)
    reports = estimate_delta_mean(result, C, z_threshold)
    summary = compare_report(reports, min_fraction)
    solve = stationary_expectation_oracle(C, cfg) if cfg.n * cfg.m <= 10_000 else None
    U = limit_expectation(C, cfg.m, cfg.k)
    checks = [
        _check(
            f"MC delta mean within |z| <= {z_threshold} for >= {min_fraction:.0%} of cells",
            summary["passed"] / max(summary["count"], 1),
            min_fraction,
            passed=summary["pass"],
            max_abs_z=summary["max_abs_z"],
            failed=summary["failed"],
            warnings=summary["warnings"],
            table=[r.as_dict() for r in reports],
        )
    ]
    if solve is not None:
        checks.append(_check("closed form vs linear solve (this config)", float(np.abs(U - solve).max()), 1e-10))
    return checks


def consensus_moments_suite(
    cfg: SimConfig | None = None,
    C=None,
    replicas=20,
    measure_steps=2000,
    seed=0,
    sign_variant: str = DERIVED,
    workers=1,
    z_threshold=4.0,
):
    """Conditional consensus moments: enumeration oracle and Monte Carlo.

    The enumeration part sweeps m = 3..6, every k and j, over random C.
    The Monte Carlo part runs on ``(cfg, C)`` (default: a random 3 x 4
    config with k = 2) and reports both sign variants of the mean; the
    suite verdict uses ``sign_variant``.
    """
    rng = np.random.default_rng(seed)
    mu = SignalDistribution.uniform()
    worst_mean, worst_var, cases = 0.0, 0.0, 0
    for m in range(3, 7):
        for k in range(1, m + 1):
            C_enum = rng.random((int(rng.integers(1, 5)), m))
            for j in range(m):
                em, ev = enumerate_conditional_moments(C_enum, mu, k, j)
                worst_mean = max(worst_mean, abs(em - conditional_mean(C_enum, mu, k, j, DERIVED)))
                worst_var = max(worst_var, abs(ev - conditional_variance(C_enum, mu, k, j)))
                cases += 1
    checks = [
        _check("derived-sign mean vs enumeration", worst_mean, 1e-12, cases=cases),
        _check("variance vs enumeration", worst_var, 1e-12, cases=cases),
    ]

    if cfg is None:
        cfg = SimConfig(n=3, m=4, k=2, alpha=0.05, mu=mu)
        C = np.random.default_rng(seed + 1).random((3, 4))
    spec = EnsembleSpec(cfg, replicas, 0, measure_steps, seed, workers)
    result = run_ensemble(spec, C)
    for j in range(cfg.m):
        rate = inclusion_rate(result, j)
        N = result.membership[:, :, j].size
        p = cfg.k / cfg.m
        se = math.sqrt(p * (1 - p) / N) if 0 < p < 1 else 0.0
        z = (rate - p) / se if se > 0 else (0.0 if rate == p else math.inf)
        checks.append(_check(f"inclusion rate j={j}", abs(z), z_threshold, estimate=rate, target=p))

        derived_mean, var = estimate_conditional_consensus(result, j, C, DERIVED, z_threshold)
        paper_mean, _ = estimate_conditional_consensus(result, j, C, PAPER, z_threshold)
        chosen = derived_mean if sign_variant == DERIVED else paper_mean
        checks.append(
            _check(
                f"MC conditional mean j={j} ({sign_variant}-sign)",
                abs(chosen.z_score),
                z_threshold,
                derived=derived_mean.as_dict(),
                paper=paper_mean.as_dict(),
                samples=int(result.membership[:, :, j].sum()),
            )
        )
        checks.append(_check(f"MC conditional variance j={j}", abs(var.z_score), z_threshold, report=var.as_dict()))
    return checks


def run_suite(name: str, **kw):
    table = {
        "conservation": conservation_suite,
        "affine": affine_suite,
        "lipschitz": lipschitz_suite,
        "identities": identities_suite,
        "limit": limit_suite,
        "consensus-moments": consensus_moments_suite,
    }
    if name not in table:
        raise KeyError(f"unknown suite {name!r}")
    return table[name](**kw)
