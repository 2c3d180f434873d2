"""Penalty-weight selection by cross validation.

Two schemes: likelihood-based k-fold CV over replicates (fit on the
held-in replicates' covariance projections, score the held-out fold's),
and prediction-based spatial CV (fit on training locations, krige to
held-out locations, score RMSE). The nugget estimate is computed once on
the full data and held fixed throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dcfit import FitReport, PenaltySpec, dc_fit
from .likelihood import empirical_cov_projections, reduced_nll
from .predict import krige


@dataclass
class CvPlan:
    """Fold layout and the candidate penalties to score."""

    mode: str                       # "likelihood-kfold" | "spatial-holdout"
    candidates: list
    folds: list = field(default_factory=list)   # replicate index arrays
    holdout: np.ndarray | None = None           # held-out location indices
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("likelihood-kfold", "spatial-holdout"):
            raise ValueError(f"unknown CV mode {self.mode!r}")
        if not self.candidates:
            raise ValueError("need at least one candidate penalty")
        if self.mode == "likelihood-kfold":
            all_idx = np.concatenate(self.folds) if self.folds else np.array([])
            if len(np.unique(all_idx)) != all_idx.size:
                raise ValueError("folds must be disjoint")


def make_likelihood_plan(m: int, k: int, candidates: list, seed=None) -> CvPlan:
    """Random disjoint covering partition of m replicates into k folds."""
    if m < 2 * k:
        raise ValueError("need at least 2 replicates per fold")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    folds = [np.sort(f) for f in np.array_split(perm, k)]
    return CvPlan(mode="likelihood-kfold", candidates=list(candidates),
                  folds=folds, seed=seed)


def make_spatial_plan(n: int, holdout_count: int, candidates: list,
                      seed=None) -> CvPlan:
    """Random held-out location subset for prediction-based CV."""
    if not (0 < holdout_count < n):
        raise ValueError("holdout_count must be in (0, n)")
    rng = np.random.default_rng(seed)
    hold = np.sort(rng.choice(n, size=holdout_count, replace=False))
    return CvPlan(mode="spatial-holdout", candidates=list(candidates),
                  holdout=hold, seed=seed)


def _break_ties(scores: np.ndarray, candidates: list) -> int:
    """Argmin with ties resolved toward the larger total penalty mass
    (the sparser model)."""
    best = np.nanmin(scores)
    tied = [i for i, s in enumerate(scores) if s == best]
    if len(tied) == 1:
        return tied[0]
    return max(tied, key=lambda i: candidates[i].total_mass)


def cv_likelihood(y: np.ndarray, phi, tau_sq: float, plan: CvPlan,
                  **fit_kwargs):
    """Score each candidate penalty by held-out-fold likelihood.

    For fold i, the fit uses the covariance projections of the complement
    replicates and the score is the unpenalized reduced likelihood against
    fold i's own projections, averaged over folds. Candidates whose fit
    fails to converge on any fold are excluded from the argmin and
    reported as flagged.
    """
    if plan.mode != "likelihood-kfold":
        raise ValueError("plan mode must be likelihood-kfold")
    y = np.asarray(y, dtype=float)
    m = y.shape[1]
    rows = []
    mean_scores = np.full(len(plan.candidates), np.nan)
    flagged = []
    for ci, cand in enumerate(plan.candidates):
        fold_scores = []
        ok = True
        for fi, fold in enumerate(plan.folds):
            train = np.setdiff1d(np.arange(m), fold)
            kernel_train = empirical_cov_projections(y[:, train], phi)
            kernel_test = empirical_cov_projections(y[:, fold], phi)
            report = dc_fit(kernel_train, tau_sq, cand, **fit_kwargs)
            if not report.converged:
                ok = False
                rows.append({"candidate": ci, "fold": fi, "score": np.nan,
                             "converged": False})
                continue
            score = reduced_nll(report.q_hat, tau_sq, kernel_test)
            fold_scores.append(score)
            rows.append({"candidate": ci, "fold": fi, "score": float(score),
                         "converged": True})
        if ok:
            mean_scores[ci] = float(np.mean(fold_scores))
        else:
            flagged.append(ci)
    if np.all(np.isnan(mean_scores)):
        raise RuntimeError("no candidate converged on all folds")
    winner = _break_ties(mean_scores, plan.candidates)
    table = {"rows": rows, "mean_scores": mean_scores.tolist(),
             "flagged": flagged, "selected": winner}
    return plan.candidates[winner], table


def cv_predictive(y: np.ndarray, locations: np.ndarray, phi_builder,
                  tau_sq: float, plan: CvPlan, include_nugget: bool = True,
                  **fit_kwargs):
    """Score each candidate by kriging RMSE at held-out locations.

    Fits on the training-location rows, predicts every replicate at the
    held-out locations, and selects the smallest RMSE over all
    (location, replicate) pairs; the winner is refit on all locations.
    Returns (selected penalty, score table, final FitReport).
    """
    if plan.mode != "spatial-holdout":
        raise ValueError("plan mode must be spatial-holdout")
    y = np.asarray(y, dtype=float)
    locations = np.asarray(locations, dtype=float)
    n = locations.shape[0]
    hold = plan.holdout
    train = np.setdiff1d(np.arange(n), hold)
    phi_train = phi_builder(locations[train])
    phi_hold = phi_builder(locations[hold])
    kernel_train = empirical_cov_projections(y[train], phi_train)

    rmse = np.full(len(plan.candidates), np.nan)
    flagged = []
    rows = []
    for ci, cand in enumerate(plan.candidates):
        report = dc_fit(kernel_train, tau_sq, cand, **fit_kwargs)
        if not report.converged:
            flagged.append(ci)
            rows.append({"candidate": ci, "rmse": np.nan, "converged": False})
            continue
        res = krige(phi_train.values, phi_hold.values, report.q_hat,
                    tau_sq, y[train], include_nugget=include_nugget)
        err = res.mean - y[hold]
        rmse[ci] = float(np.sqrt(np.mean(err**2)))
        rows.append({"candidate": ci, "rmse": rmse[ci], "converged": True})
    if np.all(np.isnan(rmse)):
        raise RuntimeError("no candidate converged")
    winner = _break_ties(rmse, plan.candidates)
    if winner in _boundary_indices(len(plan.candidates)):
        rows.append({"warning": f"selected candidate {winner} sits on the "
                                "boundary of the search grid"})
    phi_all = phi_builder(locations)
    kernel_all = empirical_cov_projections(y, phi_all)
    final = dc_fit(kernel_all, tau_sq, plan.candidates[winner], **fit_kwargs)
    table = {"rows": rows, "rmse": rmse.tolist(), "flagged": flagged,
             "selected": winner}
    return plan.candidates[winner], table, final


def _boundary_indices(count: int) -> set:
    return {0, count - 1} if count > 1 else set()
