"""Lasso / elastic net by cyclic coordinate descent.

The objective is

    (1/2n) ||y - X b||^2 + lam * ((1 - alpha)/2 ||b||^2 + alpha ||b||_1)

so ``alpha=1`` is the lasso and ``alpha=0`` is ridge with penalty ``n*lam``
on the X'X scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _cd
from .core import Dataset
from .errors import ConvergenceError, ParameterError
from .estimators import FitResult

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000

_NO_TRACE = np.empty(0)


@dataclass(frozen=True)
class EnetConfig:
    lam: float
    alpha: float = 1.0
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.lam >= 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if not 0 <= self.alpha <= 1:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise ParameterError("max_sweeps must be >= 1")


def soft_threshold(z: float, t: float) -> float:
    """``sign(z) * max(|z| - t, 0)``."""
    if t < 0:
        raise ParameterError("threshold must be non-negative")
    return float(_cd.soft_threshold(float(z), float(t)))


def design_T(ds: Dataset) -> np.ndarray:
    return np.ascontiguousarray(ds.X.T)


def enet_objective(ds: Dataset, beta, lam: float, alpha: float) -> float:
    beta = np.ascontiguousarray(beta, dtype=float)
    return float(_cd.enet_objective_kernel(design_T(ds), ds.y, beta, float(lam), float(alpha)))


def _run(XT, y, beta, cfg, trace):
    sweeps, change, ok = _cd.enet_cd(
        XT, y, beta, float(cfg.lam), float(cfg.alpha), float(cfg.tolerance),
        int(cfg.max_sweeps), trace,
    )
    if not ok:
        raise ConvergenceError(
            f"elastic net did not converge in {sweeps} sweeps "
            f"(lambda={cfg.lam}, alpha={cfg.alpha}, last change {change:.3g})",
            last_iterate=beta.copy(),
            last_change=change,
        )
    return sweeps, change


def fit_elastic_net(ds: Dataset, cfg: EnetConfig, init=None,
                    record_objective: bool = False) -> FitResult:
    """Coordinate descent from ``init`` (zeros by default).

    Converged when no coefficient moves by more than ``cfg.tolerance`` in a
    full sweep. With ``record_objective`` the objective after every sweep is
    returned in ``diagnostics["objective_trace"]``.
    """
    beta = np.zeros(ds.d) if init is None else np.array(init, dtype=float)
    if beta.shape != (ds.d,):
        raise ParameterError(f"init must have length {ds.d}")
    trace = np.empty(cfg.max_sweeps + 1) if record_objective else _NO_TRACE
    sweeps, change = _run(design_T(ds), ds.y, beta, cfg, trace)
    diag = {"sweeps": sweeps, "last_change": change}
    if record_objective:
        diag["objective_trace"] = trace[: sweeps + 1].copy()
    return FitResult(beta, "elastic_net", {"lambda": float(cfg.lam), "alpha": float(cfg.alpha)}, diag)


def fit_lasso(ds: Dataset, lam: float, **kwargs) -> FitResult:
    return fit_elastic_net(ds, EnetConfig(lam, 1.0, **kwargs))


def enet_path(ds: Dataset, lambdas, alpha: float, tolerance: float = DEFAULT_TOL,
              max_sweeps: int = DEFAULT_MAX_SWEEPS) -> np.ndarray:
    """Solutions along a descending lambda grid, each warm-started from the
    previous one. Returns an array of shape (len(lambdas), d)."""
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) > 0):
        raise ParameterError("lambda grid must be sorted in descending order")
    return _path(design_T(ds), ds.y, lambdas, alpha, tolerance, max_sweeps)


def _path(XT, y, lambdas, alpha, tolerance, max_sweeps):
    out = np.empty((len(lambdas), XT.shape[0]))
    beta = np.zeros(XT.shape[0])
    for k, lam in enumerate(lambdas):
        _run(XT, y, beta, EnetConfig(float(lam), alpha, max_sweeps, tolerance), _NO_TRACE)
        out[k] = beta
    return out


def null_lambda(ds: Dataset, alpha: float) -> float:
    """Smallest lambda whose solution is identically zero (alpha > 0)."""
    if alpha <= 0:
        return np.inf
    return float(np.max(np.abs(ds.X.T @ ds.y)) / ds.n / alpha)
