import numpy as np
import pytest


def rand_spd(rng, ell, cond=10.0):
    """Random symmetric positive definite matrix with bounded conditioning."""
    a = rng.standard_normal((ell, ell))
    q, _ = np.linalg.qr(a)
    evals = np.linspace(1.0, cond, ell)
    return (q * evals) @ q.T


def rand_kernel(rng, n, ell, m=None, tau_sq=1.0):
    """Random small LikelihoodKernel plus the dense pieces it came from."""
    from basisprec.basis import BasisMatrix
    from basisprec.likelihood import empirical_cov_projections

    m = m or max(ell + 2, 4)
    phi = BasisMatrix(rng.standard_normal((n, ell)))
    y = rng.standard_normal((n, m))
    kernel = empirical_cov_projections(y, phi)
    yc = y - y.mean(axis=1, keepdims=True)
    s_dense = yc @ yc.T / (m - 1)
    return phi, y, s_dense, kernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
