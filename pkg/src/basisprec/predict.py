"""Kriging prediction, scoring, model complexity, and graph inspection.

All predictors work in coefficient space: one ell x ell Cholesky of
Q + Phi^T Phi / tau^2 is shared across prediction points, so prediction
costs O(n ell^2) instead of the naive O(n^3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .basis import NodeGrid
from .likelihood import LikelihoodKernel
from .linalg import chol, chol_logdet, chol_solve_mat, solve_triangular


@dataclass
class KrigingResult:
    """Predictive mean and variance at the prediction points.

    ``variance`` includes the nugget when predicting observations and
    excludes it for the latent smooth field, per ``include_nugget``.
    """

    mean: np.ndarray
    variance: np.ndarray
    include_nugget: bool


def krige(phi_obs: np.ndarray, phi_pred: np.ndarray, q: np.ndarray,
          tau_sq: float, y: np.ndarray, include_nugget: bool = True) -> KrigingResult:
    """Kriging predictor and variance from the fitted coefficient model.

    c_hat = (Q + Phi_o^T Phi_o / tau^2)^{-1} Phi_o^T y / tau^2, mean is
    Phi_p c_hat, and the pointwise variance is the quadratic form of each
    prediction row against the same posterior precision. ``y`` may be a
    single n-vector or an n x m replicate matrix (columns share the
    factorization and the variance).
    """
    if tau_sq <= 0:
        raise ValueError("tau_sq must be positive")
    phi_obs = np.asarray(phi_obs, dtype=float)
    phi_pred = np.asarray(phi_pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("observations contain non-finite values")
    p = np.asarray(q, dtype=float) + phi_obs.T @ phi_obs / tau_sq
    factor = chol(p, "kriging system")
    c_hat = chol_solve_mat(factor, phi_obs.T @ y / tau_sq)
    mean = phi_pred @ c_hat
    half = solve_triangular(factor, phi_pred.T, lower=True)
    variance = np.sum(half * half, axis=0)
    if include_nugget:
        variance = variance + tau_sq
    return KrigingResult(mean=mean, variance=variance,
                         include_nugget=include_nugget)


def crps_gaussian(mu, sigma, y):
    """Continuous ranked probability score of a Gaussian forecast.

    Closed form sigma * [z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)] with
    z = (y - mu)/sigma; proper (nonnegative, minimized when the forecast
    matches). Vectorizes over broadcastable inputs.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    z = (y - mu) / sigma
    pdf = np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
    out = sigma * (z * (2.0 * ndtr(z) - 1.0) + 2.0 * pdf - 1.0 / np.sqrt(np.pi))
    return float(out) if out.ndim == 0 else out


def effective_df(q: np.ndarray, kernel: LikelihoodKernel, tau_sq: float) -> float:
    """Trace of the smoothing hat matrix via the ell x ell identity
    tr((Q + Phi^T Phi/tau^2)^{-1} Phi^T Phi) / tau^2."""
    if tau_sq <= 0:
        raise ValueError("tau_sq must be positive")
    p = np.asarray(q, dtype=float) + kernel.phi_t_phi / tau_sq
    factor = chol(p, "hat-matrix system")
    return float(np.trace(chol_solve_mat(factor, kernel.phi_t_phi))) / tau_sq


def aic(nll_total: float, eff_df: float) -> float:
    """Akaike information criterion with effective degrees of freedom as
    the parameter count. Only differences between models on the same data
    are meaningful."""
    return 2.0 * nll_total + 2.0 * eff_df


def implied_moments(phi_eval: np.ndarray, q: np.ndarray, tau_sq: float = 0.0,
                    center: int | None = None, include_nugget: bool = False):
    """Pointwise process standard deviations or a correlation field.

    With ``center=None`` returns SD(s) = sqrt(phi(s)^T Q^{-1} phi(s)),
    optionally adding the nugget for observation-scale SDs. With a center
    index, returns the correlation of every evaluation point with that
    point; entries where either SD vanishes are NaN.
    """
    phi_eval = np.asarray(phi_eval, dtype=float)
    factor = chol(np.asarray(q, dtype=float), "precision")
    half = solve_triangular(factor, phi_eval.T, lower=True)
    var = np.sum(half * half, axis=0)
    if center is None:
        if include_nugget:
            var = var + tau_sq
        return np.sqrt(var)
    sd = np.sqrt(var)
    cross = half.T @ half[:, center]
    denom = sd * sd[center]
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, cross / denom, np.nan)
    return corr


def neighborhood(q: np.ndarray, j: int, threshold: float,
                 grid: NodeGrid | None = None) -> list:
    """Graph neighbors of column j: entries with |Q_ij| above threshold.

    Returns (index, value) pairs, extended with node coordinates when a
    grid is supplied (global columns have none).
    """
    q = np.asarray(q, dtype=float)
    ell = q.shape[0]
    if not (0 <= j < ell):
        raise IndexError(f"column index {j} out of range for size {ell}")
    out = []
    for i in range(ell):
        if i != j and abs(q[i, j]) > threshold:
            if grid is not None and i < len(grid):
                out.append((i, float(q[i, j]), tuple(grid.nodes[i])))
            else:
                out.append((i, float(q[i, j])))
    return out


def recovery_metrics(q_hat: np.ndarray, q_true: np.ndarray,
                     zero_tol: float | None = None) -> dict:
    """Estimation-accuracy summaries against a known precision matrix.

    kl_score is the table-style discrepancy tr(Qhat Q) - logdet(Qhat Q) - ell
    (zero when Qhat = Q^{-1}); kl_divergence is the conventional Gaussian
    divergence 0.5 [tr(Qhat Q^{-1}) - logdet(Qhat Q^{-1}) - ell], reported
    separately. Miss percentages compare off-diagonal supports at
    ``zero_tol`` (default 1e-8 * max|Qhat|).
    """
    q_hat = np.asarray(q_hat, dtype=float)
    q_true = np.asarray(q_true, dtype=float)
    if q_hat.shape != q_true.shape:
        raise ValueError("shape mismatch between estimate and truth")
    ell = q_hat.shape[0]
    if zero_tol is None:
        zero_tol = 1e-8 * float(np.max(np.abs(q_hat)))

    rel_frob = float(np.linalg.norm(q_hat - q_true, "fro")
                     / np.linalg.norm(q_true, "fro"))

    def _logdet_spd(a):
        # Cholesky certifies definiteness; slogdet alone can miss sign flips
        try:
            return chol_logdet(chol(a, "matrix"))
        except Exception:
            return float("nan")

    ld_hat, ld_true = _logdet_spd(q_hat), _logdet_spd(q_true)
    kl_score = float(np.trace(q_hat @ q_true)) - ld_hat - ld_true - ell
    kl_divergence = 0.5 * (float(np.trace(q_hat @ np.linalg.inv(q_true)))
                           - ld_hat + ld_true - ell)

    iu, ju = np.triu_indices(ell, k=1)
    true_zero = q_true[iu, ju] == 0.0
    est_nonzero = np.abs(q_hat[iu, ju]) > zero_tol
    n_zero = int(true_zero.sum())
    n_nonzero = int((~true_zero).sum())
    pct_missed_zeros = (100.0 * float(np.sum(true_zero & est_nonzero)) / n_zero
                        if n_zero else 0.0)
    pct_missed_nonzeros = (100.0 * float(np.sum(~true_zero & ~est_nonzero))
                           / n_nonzero if n_nonzero else 0.0)
    return {
        "rel_frobenius": rel_frob,
        "kl_score": kl_score,
        "kl_divergence": kl_divergence,
        "pct_missed_zeros": pct_missed_zeros,
        "pct_missed_nonzeros": pct_missed_nonzeros,
    }
