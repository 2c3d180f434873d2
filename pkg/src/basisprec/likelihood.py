"""Gaussian likelihood evaluation in coefficient space.

The model covariance Phi Q^{-1} Phi^T + tau^2 I is never formed at n x n:
after precomputing Phi^T Phi and Phi^T S Phi, the negative log-likelihood
reduces to determinants and traces of ell x ell matrices,

    logdet(Q + Phi^T Phi / tau^2) - logdet Q
        - tr(Phi^T S Phi (Q + Phi^T Phi / tau^2)^{-1}) / tau^4,

which differs from the full n x n form by the constant
n log tau^2 + tr(S) / tau^2. The nugget variance is estimated under an
exchangeable-coefficient approximation Q = alpha I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .basis import BasisMatrix
from .linalg import NotSPDError, NumericError, chol, chol_logdet, chol_solve_mat


@dataclass
class LikelihoodKernel:
    """ell x ell projections of the data sufficient for the likelihood."""

    phi_t_phi: np.ndarray
    phi_t_s_phi: np.ndarray
    tr_s: float
    n: int
    m: int

    def __post_init__(self):
        for name in ("phi_t_phi", "phi_t_s_phi"):
            a = np.asarray(getattr(self, name), dtype=float)
            if not np.allclose(a, a.T):
                raise ValueError(f"{name} must be symmetric")
            setattr(self, name, a)
        if self.tr_s < 0:
            raise ValueError("tr(S) must be nonnegative")
        # PSD check with round-off slack proportional to scale
        a = self.phi_t_s_phi
        scale = float(np.linalg.norm(a, "fro"))
        if scale > 0:
            lam_min = float(np.linalg.eigvalsh(a)[0])
            if lam_min < -1e-8 * scale:
                raise ValueError("phi_t_s_phi is not positive semidefinite")

    @property
    def ell(self) -> int:
        return self.phi_t_phi.shape[0]


@dataclass
class NuggetEstimate:
    """Fitted nugget and exchangeable-precision scale."""

    tau_sq: float
    alpha: float
    objective: float


def empirical_cov_projections(y: np.ndarray, phi: BasisMatrix) -> LikelihoodKernel:
    """Project the demeaned empirical covariance onto the basis.

    S = (1/(m-1)) sum_i (Y_i - Ybar)(Y_i - Ybar)^T is represented only
    through Phi^T S Phi and tr(S), at O(n m ell + n ell^2) cost.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] < 2:
        raise ValueError("need an n x m replicate matrix with m >= 2")
    n, m = y.shape
    yc = y - y.mean(axis=1, keepdims=True)
    u = phi.values.T @ yc
    phi_t_s_phi = (u @ u.T) / (m - 1)
    tr_s = float(np.sum(yc * yc)) / (m - 1)
    phi_t_phi = phi.values.T @ phi.values
    return LikelihoodKernel(phi_t_phi=phi_t_phi, phi_t_s_phi=phi_t_s_phi,
                            tr_s=tr_s, n=n, m=m)


def reduced_nll(q: np.ndarray, tau_sq: float, kernel: LikelihoodKernel) -> float:
    """Unpenalized negative log-likelihood in ell x ell space (no constants)."""
    if tau_sq <= 0:
        raise ValueError("tau_sq must be positive")
    q = np.asarray(q, dtype=float)
    p = q + kernel.phi_t_phi / tau_sq
    factor_p = chol(p, "Q + Phi^T Phi / tau^2")
    factor_q = chol(q, "Q")
    a = kernel.phi_t_s_phi / tau_sq**2
    trace_term = float(np.trace(chol_solve_mat(factor_p, a)))
    return chol_logdet(factor_p) - chol_logdet(factor_q) - trace_term


def full_nll(q: np.ndarray, tau_sq: float, phi: BasisMatrix,
             s_dense: np.ndarray) -> float:
    """Direct n x n evaluation logdet(Sigma) + tr(S Sigma^{-1}).

    Forms Sigma = Phi Q^{-1} Phi^T + tau^2 I explicitly; intended as a
    small-problem cross-check for the reduced form, not for production use.
    """
    q = np.asarray(q, dtype=float)
    factor_q = chol(q, "Q")
    qinv_phit = chol_solve_mat(factor_q, phi.values.T)
    sigma = phi.values @ qinv_phit + tau_sq * np.eye(phi.n)
    factor_s = chol(sigma, "model covariance")
    return chol_logdet(factor_s) + float(np.trace(chol_solve_mat(factor_s, s_dense)))


def penalized_objective(q: np.ndarray, tau_sq: float, kernel: LikelihoodKernel,
                        lam: np.ndarray) -> float:
    """reduced_nll plus the weighted elementwise l1 penalty sum Lam_ij |Q_ij|."""
    return reduced_nll(q, tau_sq, kernel) + float(np.sum(lam * np.abs(q)))


def nll_with_constants(q: np.ndarray, tau_sq: float,
                       kernel: LikelihoodKernel) -> float:
    """reduced_nll plus the tau^2-dependent constants n log tau^2 + tr(S)/tau^2."""
    return (reduced_nll(q, tau_sq, kernel)
            + kernel.n * np.log(tau_sq) + kernel.tr_s / tau_sq)


def replicate_nll(q: np.ndarray, tau_sq: float, kernel: LikelihoodKernel) -> float:
    """Total negative log-likelihood of all m replicates, Gaussian constants in."""
    return 0.5 * kernel.m * (nll_with_constants(q, tau_sq, kernel)
                             + kernel.n * np.log(2.0 * np.pi))


def _nugget_objective_terms(kernel: LikelihoodKernel):
    # One symmetric eigendecomposition makes every (alpha, tau^2) evaluation O(ell)
    evals, vecs = np.linalg.eigh(kernel.phi_t_phi)
    evals = np.clip(evals, 0.0, None)
    b = np.einsum("ji,jk,ki->i", vecs, kernel.phi_t_s_phi, vecs)
    b = np.clip(b, 0.0, None)
    return evals, b


def estimate_nugget(kernel: LikelihoodKernel, starts=None) -> NuggetEstimate:
    """Estimate the nugget by fitting the exchangeable model Q = alpha I.

    Minimizes logdet(alpha I + Phi^T Phi/tau^2) - ell log alpha
    - tr(Phi^T S Phi (alpha I + Phi^T Phi/tau^2)^{-1})/tau^4
    + n log tau^2 + tr(S)/tau^2 over (log alpha, log tau^2) with L-BFGS-B
    and analytic gradients, from several starting points.
    """
    e, b = _nugget_objective_terms(kernel)
    ell, n, tr_s = kernel.ell, kernel.n, kernel.tr_s
    if tr_s <= 0:
        raise ValueError("tr(S) must be positive to estimate a nugget")

    def objective(x):
        alpha, u = np.exp(x[0]), np.exp(x[1])
        d = alpha + e / u
        f = (np.sum(np.log(d)) - ell * x[0]
             - np.sum(b / d) / u**2 + n * x[1] + tr_s / u)
        df_da = np.sum(1.0 / d) - ell / alpha + np.sum(b / d**2) / u**2
        df_du = (-np.sum(e / d) / u**2 + 2.0 * np.sum(b / d) / u**3
                 - np.sum(b * e / d**2) / u**4 + n / u - tr_s / u**2)
        grad = np.array([alpha * df_da, u * df_du])
        if not (np.isfinite(f) and np.all(np.isfinite(grad))):
            raise NumericError(
                f"non-finite nugget objective at alpha={alpha}, tau_sq={u}")
        return f, grad

    if starts is None:
        base = tr_s / n
        starts = [(0.1, 0.1 * base), (1.0, base), (10.0, base)]

    best = None
    for alpha0, tau0 in starts:
        res = minimize(objective, np.log([alpha0, tau0]), jac=True,
                       method="L-BFGS-B",
                       options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res
    alpha_hat, tau_hat = np.exp(best.x)
    return NuggetEstimate(tau_sq=float(tau_hat), alpha=float(alpha_hat),
                          objective=float(best.fun))
