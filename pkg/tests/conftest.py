import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from etrs.model import ProblemInstance

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def tight_cut():
    return ProblemInstance(np.diag([-2.0, 2.0]), np.zeros(2), [[0.0, -1.0]], [0.0])


def gap_cut():
    return ProblemInstance(np.diag([-2.0, 2.0]), np.array([1.0, 0.0]), [[-1.0, 0.0]], [0.0])


def random_symmetric(rng, n):
    G = rng.standard_normal((n, n))
    return 0.5 * (G + G.T)


def low_rank_shift(rng, n, kernel_dim):
    """Symmetric matrix whose smallest eigenvalue has multiplicity kernel_dim."""
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam0 = -abs(rng.standard_normal()) - 0.5
    rest = lam0 + 0.2 + np.abs(rng.standard_normal(n - kernel_dim)) * 2
    spec = np.concatenate([np.full(kernel_dim, lam0), rest])
    return (U * spec) @ U.T, U[:, :kernel_dim]


def newdc_instance(rng, n, m):
    """Random instance built so the stacked matrix has a common null vector."""
    k = int(rng.integers(1, n + 1))
    Q, K = low_rank_shift(rng, n, k)
    z = K @ rng.standard_normal(k)
    z /= np.linalg.norm(z)
    A = rng.standard_normal((m, n))
    A -= np.outer(A @ z, z)
    x0 = rng.standard_normal(n)
    x0 *= 0.5 * rng.uniform() / np.linalg.norm(x0)
    b = A @ x0 + np.abs(rng.standard_normal(m))
    return ProblemInstance(Q, rng.standard_normal(n), A, b)


@pytest.fixture
def tight():
    return tight_cut()


@pytest.fixture
def gapped():
    return gap_cut()
