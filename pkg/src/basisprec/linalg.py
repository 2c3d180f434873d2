"""Small shared linear-algebra helpers built on Cholesky factorizations."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular  # noqa: F401


class NotSPDError(np.linalg.LinAlgError):
    """A matrix required to be symmetric positive definite is not."""


class NumericError(ArithmeticError):
    """A numeric routine produced non-finite values."""


def sym(a: np.ndarray) -> np.ndarray:
    """Symmetrize to kill round-off asymmetry."""
    return 0.5 * (a + a.T)


def chol(a: np.ndarray, what: str = "matrix"):
    """Lower-triangular Cholesky factor; raises NotSPDError naming ``what``."""
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(f"{what} is not positive definite") from exc


def chol_logdet(factor: np.ndarray) -> float:
    """log det of A given its lower Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


def chol_solve_mat(factor: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b given the lower Cholesky factor of A."""
    y = solve_triangular(factor, b, lower=True)
    return solve_triangular(factor, y, lower=True, trans="T")


def chol_inverse(factor: np.ndarray) -> np.ndarray:
    """Inverse of A from its lower Cholesky factor, symmetrized."""
    inv = chol_solve_mat(factor, np.eye(factor.shape[0]))
    return sym(inv)


def is_spd(a: np.ndarray, shift: float = 0.0) -> bool:
    """Cholesky-based SPD test of a (+ shift * I)."""
    try:
        np.linalg.cholesky(a + shift * np.eye(a.shape[0]) if shift else a)
        return True
    except np.linalg.LinAlgError:
        return False
