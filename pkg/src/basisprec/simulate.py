"""Replicate simulation from the basis model Y = Phi c + eps.

Coefficients are drawn from the inverse of a known precision matrix via
triangular solves and the nugget variance is set from a target
noise-to-signal ratio, so the n x n covariance is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisMatrix
from .graphs import TruePrecision
from .linalg import chol, chol_solve_mat, solve_triangular


@dataclass
class SimDataset:
    """Simulated replicates with the truth that generated them."""

    y: np.ndarray                 # n x m
    locations: np.ndarray         # n x 2
    phi: BasisMatrix
    q_true: TruePrecision
    tau_sq_true: float
    noise_to_signal: float
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.y.shape[1]


def true_nugget(phi: BasisMatrix, q_true: TruePrecision,
                noise_to_signal: float) -> float:
    """Nugget variance implied by a noise-to-signal ratio.

    noise_to_signal = tau^2 / (tr(Phi Q^{-1} Phi^T) / n); the trace is
    computed as tr(Q^{-1} Phi^T Phi) with an ell x ell Cholesky solve.
    """
    factor = chol(q_true.q, "true precision")
    phi_t_phi = phi.values.T @ phi.values
    signal = float(np.trace(chol_solve_mat(factor, phi_t_phi))) / phi.n
    return noise_to_signal * signal


def simulate_replicates(phi: BasisMatrix, q_true: TruePrecision, m: int,
                        noise_to_signal: float, seed=None,
                        locations=None) -> SimDataset:
    """Draw m i.i.d. replicates of Y = Phi c + eps.

    c ~ N(0, Q^{-1}) sampled by a triangular solve against the Cholesky
    factor of Q; eps ~ N(0, tau^2 I) with tau^2 fixed by the
    noise-to-signal ratio. Bit-reproducible for a given seed.
    """
    if m < 2:
        raise ValueError("need at least 2 replicates")
    if noise_to_signal < 0:
        raise ValueError("noise_to_signal must be nonnegative")
    ell = phi.ell
    factor = chol(q_true.q, "true precision")
    tau_sq = true_nugget(phi, q_true, noise_to_signal)

    rng = np.random.default_rng(seed)
    z = rng.standard_normal((ell, m))
    eps = rng.standard_normal((phi.n, m))
    # upper-triangular solve L^T c = z gives cov(c) = (L L^T)^{-1} = Q^{-1}
    coeff = solve_triangular(factor, z, lower=True, trans="T")
    y = phi.values @ coeff + np.sqrt(tau_sq) * eps

    if locations is None:
        locations = np.zeros((phi.n, 2))
    return SimDataset(y=y, locations=np.asarray(locations, dtype=float),
                      phi=phi, q_true=q_true, tau_sq_true=tau_sq,
                      noise_to_signal=noise_to_signal, seed=seed)
