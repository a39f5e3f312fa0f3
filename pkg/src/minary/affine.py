"""The one-step update written as a random affine map on n x m matrices.

This module is an independent route to the same dynamics as
:mod:`minary.model`: no signals appear anywhere, the update is expressed
through the linear part ``A^S`` and the offset ``B^S``. Matrices are
vectorised row-major, so ``vec(X @ M @ Y) == kron(X, Y.T) @ vec(M)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import SimConfig

__all__ = [
    "NoConvergence",
    "TooLarge",
    "SingularSystem",
    "AffinePiece",
    "ExpectedOperator",
    "c_dev",
    "indicator",
    "apply_A",
    "apply_B",
    "apply_phi",
    "linear_matrix",
    "operator_norm",
    "exact_norm",
    "q_matrix",
    "qs_square",
    "inclusion_probabilities",
    "w_matrix",
    "expected_operator",
    "stationary_expectation_oracle",
]

DENSE_LIMIT = 10_000
ENUMERATION_LIMIT = 100_000


class NoConvergence(RuntimeError):
    pass


class TooLarge(ValueError):
    pass


class SingularSystem(np.linalg.LinAlgError):
    pass


def c_dev(C: np.ndarray) -> np.ndarray:
    """Competencies with their column means removed."""
    C = np.asarray(C, dtype=float)
    return C - C.mean(axis=0, keepdims=True)


def indicator(active: Sequence[int], m: int) -> np.ndarray:
    d = np.zeros(m)
    d[list(active)] = 1.0
    return d


@dataclass(frozen=True)
class AffinePiece:
    """The map ``M -> A^S(M) + B^S`` for one active set ``S``."""

    active: tuple[int, ...]
    alpha: float
    k: int
    c_dev: np.ndarray

    @classmethod
    def from_competency(cls, C: np.ndarray, active: Sequence[int], alpha: float) -> "AffinePiece":
        active = tuple(sorted(int(j) for j in active))
        return cls(active, float(alpha), len(active), c_dev(C))

    @property
    def n(self) -> int:
        return self.c_dev.shape[0]

    @property
    def m(self) -> int:
        return self.c_dev.shape[1]

    @property
    def delta(self) -> np.ndarray:
        return indicator(self.active, self.m)

    @property
    def B(self) -> np.ndarray:
        d = self.delta
        return (self.alpha / self.k) * self.c_dev @ np.outer(d, d)


def apply_A(piece: AffinePiece, M: np.ndarray) -> np.ndarray:
    n, m = M.shape
    d = piece.delta
    a = piece.alpha
    Jbar = np.full((n, n), 1.0 / n)
    return M @ (np.eye(m) - a * np.diag(d)) + (a / piece.k) * (Jbar - np.eye(n)) @ M @ np.outer(d, d)


def apply_B(piece: AffinePiece) -> np.ndarray:
    return piece.B


def apply_phi(piece: AffinePiece, M: np.ndarray) -> np.ndarray:
    return apply_A(piece, M) + piece.B


def linear_matrix(piece: AffinePiece) -> np.ndarray:
    """Dense (nm x nm) matrix of ``A^S`` acting on row-major vec(M)."""
    n, m = piece.n, piece.m
    if n * m > DENSE_LIMIT:
        raise TooLarge(f"nm = {n * m} exceeds dense limit {DENSE_LIMIT}")
    d = piece.delta
    a = piece.alpha
    right = np.eye(m) - a * np.diag(d)
    dd = np.outer(d, d)
    Jbar = np.full((n, n), 1.0 / n)
    return np.kron(np.eye(n), right.T) + (a / piece.k) * np.kron(Jbar - np.eye(n), dd.T)


def _composition_matrix(pieces) -> np.ndarray:
    if isinstance(pieces, AffinePiece):
        pieces = [pieces]
    pieces = list(pieces)
    if not pieces:
        raise ValueError("need at least one piece")
    G = linear_matrix(pieces[0])
    for p in pieces[1:]:
        G = linear_matrix(p) @ G
    return G


def operator_norm(pieces, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    """Lipschitz constant (Frobenius operator norm) of the linear part of a composition.

    ``pieces`` is a single :class:`AffinePiece` or a sequence applied
    first-to-last. Power iteration runs on ``G^T G``; for small problems the
    iterated matrix is first raised to a power of two by repeated squaring,
    which sharpens the eigenvalue gap without changing the dominant
    eigenvector.
    """
    G = _composition_matrix(pieces)
    B = G.T @ G
    N = B.shape[0]
    squarings = 0
    if N <= 2000:
        scale = np.linalg.norm(B, ord="fro")
        if scale == 0.0:
            return 0.0
        P = B / scale
        while squarings < 6:
            P = P @ P
            P /= np.linalg.norm(P, ord="fro")
            squarings += 1
    else:
        P = B

    v = np.random.default_rng(seed).standard_normal(N)
    v /= np.linalg.norm(v)
    prev = None
    for _ in range(max_iter):
        w = P @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        est = math.sqrt(max(float(v @ (B @ v)), 0.0))
        if prev is not None and abs(est - prev) <= tol * max(est, 1e-300):
            return est
        prev = est
    raise NoConvergence(f"power iteration did not reach rtol {tol} in {max_iter} iterations")


def exact_norm(pieces) -> float:
    """Largest singular value by SVD; cross-check for :func:`operator_norm`."""
    return float(np.linalg.svd(_composition_matrix(pieces), compute_uv=False)[0])


def q_matrix(active: Sequence[int], alpha: float, k: int, m: int) -> np.ndarray:
    d = indicator(active, m)
    return np.eye(m) - alpha * np.diag(d) - (alpha / k) * np.outer(d, d)


def qs_square(active: Sequence[int], alpha: float, k: int, m: int) -> np.ndarray:
    """Closed form of ``Q^S @ Q^S``."""
    d = indicator(active, m)
    return np.eye(m) - alpha * (2 - alpha) * np.diag(d) + (alpha / k) * (3 * alpha - 2) * np.outer(d, d)


def inclusion_probabilities(m: int, k: int) -> tuple[float, float]:
    """P(j in S) and P(j, j' in S) for j != j' under the uniform k-subset law."""
    p1 = k / m
    p2 = k * (k - 1) / (m * (m - 1)) if m > 1 else 0.0
    return p1, p2


def w_matrix(m: int, k: int) -> np.ndarray:
    """E[delta delta^T] for the uniform k-subset indicator."""
    p1, p2 = inclusion_probabilities(m, k)
    return p2 * np.ones((m, m)) + (p1 - p2) * np.eye(m)


@dataclass(frozen=True)
class ExpectedOperator:
    matrix: np.ndarray  # (nm, nm), E[A^S]
    rhs: np.ndarray  # (n, m), E[B^S]
    method: str


def expected_operator(C: np.ndarray, cfg: SimConfig, method: str = "auto") -> ExpectedOperator:
    """E[A^S] and E[B^S] under the uniform k-subset law.

    ``method="enumerate"`` averages over every k-subset; ``"closed"`` uses
    ``E[D^S] = p1 I`` and ``E[delta delta^T] = W``. ``"auto"`` enumerates
    whenever there are at most 10^5 subsets.
    """
    C = np.asarray(C, dtype=float)
    n, m = C.shape
    k, a = cfg.k, float(cfg.alpha)
    if n * m > DENSE_LIMIT:
        raise TooLarge(f"nm = {n * m} exceeds dense limit {DENSE_LIMIT}")
    if method == "auto":
        method = "enumerate" if math.comb(m, k) <= ENUMERATION_LIMIT else "closed"
    cd = c_dev(C)

    if method == "enumerate":
        count = math.comb(m, k)
        if count > ENUMERATION_LIMIT:
            raise TooLarge(f"C({m},{k}) = {count} subsets exceeds enumeration limit")
        EA = np.zeros((n * m, n * m))
        EB = np.zeros((n, m))
        for S in itertools.combinations(range(m), k):
            piece = AffinePiece(S, a, k, cd)
            EA += linear_matrix(piece)
            EB += piece.B
        return ExpectedOperator(EA / count, EB / count, method)

    if method == "closed":
        p1, _ = inclusion_probabilities(m, k)
        W = w_matrix(m, k)
        Jbar = np.full((n, n), 1.0 / n)
        EA = np.kron(np.eye(n), (1 - a * p1) * np.eye(m)) + (a / k) * np.kron(Jbar - np.eye(n), W.T)
        EB = (a / k) * cd @ W
        return ExpectedOperator(EA, EB, method)

    raise ValueError(f"unknown method {method!r}")


def stationary_expectation_oracle(C: np.ndarray, cfg: SimConfig, method: str = "auto") -> np.ndarray:
    """Solve ``(I - E[A]) E = E[B]`` for the limiting mean of the memory matrix."""
    C = np.asarray(C, dtype=float)
    n, m = C.shape
    op = expected_operator(C, cfg, method)
    lhs = np.eye(n * m) - op.matrix
    try:
        sol = np.linalg.solve(lhs, op.rhs.ravel())
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("non-finite solution")
    return sol.reshape(n, m)
