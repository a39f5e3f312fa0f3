import numpy as np
import pytest
from hypothesis import strategies as st

from minary.config import SignalDistribution, SimConfig


@st.composite
def setups(draw, n_max=6, m_max=8, alpha_max=0.66):
    """(cfg, C, delta, active) with arbitrary memory and a valid active set."""
    n = draw(st.integers(1, n_max))
    m = draw(st.integers(1, m_max))
    k = draw(st.integers(1, m))
    alpha = draw(st.floats(1e-4, alpha_max))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    cfg = SimConfig(n=n, m=m, k=k, alpha=alpha, mu=SignalDistribution.uniform(), seed=seed)
    C = rng.random((n, m))
    delta = rng.normal(scale=0.3, size=(n, m))
    active = tuple(sorted(rng.choice(m, size=k, replace=False).tolist()))
    return cfg, C, delta, active


@pytest.fixture
def generalist_C():
    return np.array(
        [
            [0.95, 0.90, 0.85, 0.15, 0.10, 0.05],
            [0.50, 0.50, 0.50, 0.50, 0.50, 0.50],
            [0.05, 0.10, 0.15, 0.85, 0.90, 0.95],
        ]
    )
