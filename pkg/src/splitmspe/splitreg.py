"""SplitReg: G elastic-net models fitted jointly with a diversity penalty.

The objective is

    sum_g (1/2n)||y - X b^g||^2 + lam_s * P_s(b^g)
          + (lam_d / 2) * sum_{h != g} sum_j |b^g_j| |b^h_j|

with ``P_s`` the elastic net penalty. Minimized by block coordinate
descent (groups in order 0..G-1, coordinates in order 0..d-1) starting from
zeros, so earlier groups claim correlated variables first. The fitted
models are combined by uniform averaging, fixed weights, or stacking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _cd
from .core import Dataset
from .elastic_net import DEFAULT_MAX_SWEEPS, DEFAULT_TOL
from .errors import ConvergenceError, ParameterError, ReplicateError, SplitMspeError
from .qp import nnls

_NO_TRACE = np.empty(0)


@dataclass(frozen=True)
class SplitRegConfig:
    G: int
    lambda_s: float
    alpha: float
    lambda_d: float
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        if self.G < 1:
            raise ParameterError("G must be >= 1")
        if not self.lambda_s >= 0 or not self.lambda_d >= 0:
            raise ParameterError("lambda_s and lambda_d must be >= 0")
        if not 0 <= self.alpha <= 1:
            raise ParameterError("alpha must lie in [0, 1]")
        if not self.tolerance > 0 or self.max_sweeps < 1:
            raise ParameterError("tolerance must be positive and max_sweeps >= 1")


@dataclass(frozen=True, eq=False)
class SplitRegFit:
    """Fitted models (rows of ``betas``) and their aggregation weights."""

    betas: np.ndarray
    aggregation: str = "uniform"
    delta: np.ndarray | None = None
    sweeps: int = 0

    def __post_init__(self):
        betas = np.array(self.betas, dtype=float)
        if betas.ndim != 2:
            raise ParameterError("betas must be a G x d array")
        G = betas.shape[0]
        if self.aggregation == "uniform":
            delta = np.full(G, 1.0 / G)
        elif self.aggregation in ("weighted", "stacking"):
            if self.delta is None:
                raise ParameterError(f"{self.aggregation} aggregation needs delta")
            delta = np.array(self.delta, dtype=float)
            if delta.shape != (G,) or np.any(delta < 0):
                raise ParameterError("delta must be a non-negative vector of length G")
        else:
            raise ParameterError(f"unknown aggregation '{self.aggregation}'")
        betas.setflags(write=False)
        delta.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "delta", delta)

    @property
    def G(self) -> int:
        return self.betas.shape[0]

    def with_weights(self, delta, aggregation: str = "weighted") -> "SplitRegFit":
        return SplitRegFit(self.betas, aggregation, delta, self.sweeps)


def _betas_array(betas, G, d):
    b = np.array(betas, dtype=float)
    if b.shape != (G, d):
        raise ParameterError(f"betas must have shape ({G}, {d}), got {b.shape}")
    return b


def objective(ds: Dataset, betas, cfg: SplitRegConfig) -> float:
    b = _betas_array(betas, cfg.G, ds.d)
    XT = np.ascontiguousarray(ds.X.T)
    return float(_cd.splitreg_objective_kernel(
        XT, ds.y, b, float(cfg.lambda_s), float(cfg.alpha), float(cfg.lambda_d)))


def _solve(XT, y, betas, cfg, trace):
    sweeps, change, ok = _cd.splitreg_cd(
        XT, y, betas, float(cfg.lambda_s), float(cfg.alpha), float(cfg.lambda_d),
        float(cfg.tolerance), int(cfg.max_sweeps), trace,
    )
    if not ok:
        raise ConvergenceError(
            f"SplitReg did not converge in {sweeps} sweeps (last change {change:.3g})",
            last_iterate=betas.copy(),
            last_change=change,
        )
    return sweeps


def fit_splitreg(ds: Dataset, cfg: SplitRegConfig, init=None,
                 record_objective: bool = False) -> SplitRegFit | tuple[SplitRegFit, np.ndarray]:
    """Fit the G models. With ``record_objective`` also return the objective
    value before the first sweep and after each sweep."""
    betas = np.zeros((cfg.G, ds.d)) if init is None else _betas_array(init, cfg.G, ds.d)
    trace = np.empty(cfg.max_sweeps + 1) if record_objective else _NO_TRACE
    XT = np.ascontiguousarray(ds.X.T)
    sweeps = _solve(XT, ds.y, betas, cfg, trace)
    fit = SplitRegFit(betas, "uniform", sweeps=sweeps)
    if record_objective:
        return fit, trace[: sweeps + 1].copy()
    return fit


def splitreg_path(ds: Dataset, lambdas_s, cfg: SplitRegConfig) -> np.ndarray:
    """Fits along a descending ``lambda_s`` grid with warm starts; the
    ``lambda_s`` of ``cfg`` is ignored. Returns shape (len(grid), G, d)."""
    lambdas_s = np.asarray(lambdas_s, dtype=float)
    if np.any(np.diff(lambdas_s) > 0):
        raise ParameterError("lambda_s grid must be sorted in descending order")
    XT = np.ascontiguousarray(ds.X.T)
    out = np.empty((len(lambdas_s), cfg.G, ds.d))
    betas = np.zeros((cfg.G, ds.d))
    for k, lam in enumerate(lambdas_s):
        step = SplitRegConfig(cfg.G, float(lam), cfg.alpha, cfg.lambda_d, cfg.max_sweeps, cfg.tolerance)
        _solve(XT, ds.y, betas, step, _NO_TRACE)
        out[k] = betas
    return out


def aggregate(fit: SplitRegFit) -> np.ndarray:
    """``sum_g delta_g beta^g``."""
    return fit.delta @ fit.betas


def predict_splitreg(fit: SplitRegFit, x0) -> float:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (fit.betas.shape[1],):
        raise ParameterError(f"x0 must have length {fit.betas.shape[1]}, got shape {x0.shape}")
    return float(x0 @ aggregate(fit))


def loo_predictions(ds: Dataset, cfg: SplitRegConfig) -> np.ndarray:
    """``z[i, g] = x_i' beta^{g,-i}``, each model refitted without row i."""
    z = np.empty((ds.n, cfg.G))
    for i in range(ds.n):
        try:
            fit = fit_splitreg(ds.drop_row(i), cfg)
        except SplitMspeError as exc:
            raise ReplicateError(i, exc, kind="leave-one-out row") from exc
        z[i] = fit.betas @ ds.X[i]
    return z


def stacking_weights(ds: Dataset, cfg: SplitRegConfig) -> np.ndarray:
    """Non-negative weights minimizing the leave-one-out squared error."""
    if ds.n < cfg.G + 1:
        raise ParameterError(f"stacking needs n >= G + 1 (n={ds.n}, G={cfg.G})")
    return nnls(loo_predictions(ds, cfg), ds.y)


def fit_stacked(ds: Dataset, cfg: SplitRegConfig) -> SplitRegFit:
    delta = stacking_weights(ds, cfg)
    return fit_splitreg(ds, cfg).with_weights(delta, "stacking")
