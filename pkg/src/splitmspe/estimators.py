"""Closed-form linear estimators and their exact covariance matrices.

All fits are linear in ``y``: ordinary least squares, ridge, the simplified
(coordinatewise) garrote ``diag(omega) @ beta_ls`` and blockwise split least
squares, optionally shrunk by per-coordinate weights ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import RCOND_MIN, Dataset, GramBlocks, Partition, gram_blocks, rcond
from .errors import ParameterError, SingularBlockError, SingularityError

TUNING_KEYS = {
    "ls": set(),
    "ridge": {"lambda"},
    "garrote": {"omega"},
    "split": {"partition", "w"},
    "elastic_net": {"lambda", "alpha"},
    "splitreg": {"lambda_s", "alpha", "lambda_d", "G"},
}


@dataclass(frozen=True, eq=False)
class FitResult:
    coefficients: np.ndarray
    method: str
    tuning: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        if self.method not in TUNING_KEYS:
            raise ParameterError(f"unknown method tag '{self.method}'")
        if set(self.tuning) != TUNING_KEYS[self.method]:
            raise ParameterError(
                f"tuning keys {sorted(self.tuning)} do not match method '{self.method}'"
            )
        if not np.all(np.isfinite(coef)):
            raise ParameterError("coefficients must be finite")

    def predict(self, x0) -> np.ndarray | float:
        return np.asarray(x0, dtype=float) @ self.coefficients


@dataclass(frozen=True, eq=False)
class CovMatrix:
    matrix: np.ndarray
    sigma2: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ParameterError("covariance must be square")
        if not self.sigma2 > 0:
            raise ParameterError("sigma2 must be positive")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * scale:
            raise ParameterError("covariance is not symmetric")
        m = 0.5 * (m + m.T)
        if m.size and np.linalg.eigvalsh(m)[0] < -1e-10 * scale:
            raise ParameterError("covariance is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def _gram(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    A = ds.X.T @ ds.X
    return 0.5 * (A + A.T), ds.X.T @ ds.y


def _check_invertible(A: np.ndarray) -> None:
    rc = rcond(A)
    if rc < RCOND_MIN:
        raise SingularityError(rc)


def _check_unit_box(v, name: str, d: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (d,):
        raise ParameterError(f"{name} must have length {d}, got shape {v.shape}")
    if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} entries must lie in [0, 1]")
    return v


def fit_ls(ds: Dataset) -> FitResult:
    A, b = _gram(ds)
    _check_invertible(A)
    return FitResult(np.linalg.solve(A, b), "ls", {})


def fit_ridge(ds: Dataset, lam: float) -> FitResult:
    """Ridge regression ``(X'X + lam I)^-1 X'y`` with lam on the X'X scale."""
    if not lam >= 0:
        raise ParameterError(f"ridge penalty must be >= 0, got {lam}")
    A, b = _gram(ds)
    if lam == 0:
        _check_invertible(A)
        return FitResult(np.linalg.solve(A, b), "ridge", {"lambda": 0.0})
    A = A + lam * np.eye(ds.d)
    return FitResult(np.linalg.solve(A, b), "ridge", {"lambda": float(lam)})


def fit_garrote(ds: Dataset, omega) -> FitResult:
    omega = _check_unit_box(omega, "omega", ds.d)
    beta = fit_ls(ds).coefficients
    return FitResult(omega * beta, "garrote", {"omega": tuple(omega.tolist())})


def split_coefficients(X: np.ndarray, y: np.ndarray, p: Partition) -> np.ndarray:
    """Blockwise LS: group g gets ``A_gg^-1 X_g' y``; other groups ignored."""
    A, b = _gram(Dataset(X, y))
    beta = np.zeros(X.shape[1])
    for k, idx in enumerate(p.groups):
        ix = list(idx)
        blk = A[np.ix_(ix, ix)]
        rc = rcond(blk)
        if rc < RCOND_MIN:
            raise SingularBlockError(k, rc)
        beta[ix] = np.linalg.solve(blk, b[ix])
    return beta


def fit_split(ds: Dataset, p: Partition, w=None) -> FitResult:
    """Split least squares over any number of groups.

    The partition must cover every predictor. With ``w`` the coefficients
    are shrunk coordinatewise to ``w * beta_split``.
    """
    if not p.covers(ds.d):
        raise ParameterError(f"partition {p} does not cover all {ds.d} predictors")
    beta = split_coefficients(ds.X, ds.y, p)
    if w is None:
        w = np.ones(ds.d)
    w = _check_unit_box(w, "w", ds.d)
    return FitResult(w * beta, "split", {"partition": p, "w": tuple(w.tolist())})


def cov_ls(gb: GramBlocks, sigma2: float) -> CovMatrix:
    _check_invertible(gb.A)
    return CovMatrix(sigma2 * np.linalg.inv(gb.A), sigma2)


def cov_split(gb: GramBlocks, sigma2: float) -> CovMatrix:
    """``sigma2 * diag(A_gg^-1) A diag(A_gg^-1)`` for the blocks of ``gb``."""
    if not gb.partition.covers(gb.d):
        raise ParameterError("cov_split needs a partition covering every predictor")
    Binv = gb.block_inverse_matrix()
    return CovMatrix(sigma2 * Binv @ gb.A @ Binv, sigma2)


def cov_garrote(gb: GramBlocks, sigma2: float, omega) -> CovMatrix:
    omega = _check_unit_box(omega, "omega", gb.d)
    _check_invertible(gb.A)
    D = np.diag(omega)
    return CovMatrix(sigma2 * D @ np.linalg.inv(gb.A) @ D, sigma2)


def cov_ridge(gb: GramBlocks, sigma2: float, lam: float) -> CovMatrix:
    if not lam >= 0:
        raise ParameterError(f"ridge penalty must be >= 0, got {lam}")
    H = np.linalg.inv(gb.A + lam * np.eye(gb.d))
    return CovMatrix(sigma2 * H @ gb.A @ H, sigma2)


def generalized_variance(c: CovMatrix) -> float:
    return float(np.linalg.det(c.matrix))


def total_variance(c: CovMatrix) -> float:
    return float(np.trace(c.matrix))


def gram_for(ds: Dataset, p: Partition | None = None) -> GramBlocks:
    return gram_blocks(ds, p if p is not None else Partition.single(ds.d))
