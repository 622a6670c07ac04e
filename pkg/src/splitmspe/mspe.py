"""Minimum attainable mean squared prediction error (MSPE).

Two routes:

* closed forms for two predictors with fixed empirical correlation ``r``
  and test-point correlation ``rho`` (these exclude the irreducible noise
  ``sigma2``), minimized exactly over the tuning parameters;
* a Monte Carlo estimate ``g_hat`` for any ``d``: N training sets whose
  designs have empirical covariance exactly ``gamma_r`` and M test pairs
  drawn from ``x0 ~ N(0, gamma_rho)``, ``y0 = x0'beta + eps0``. ``g_hat``
  includes ``sigma2``; records carry both ``mspe`` and ``mspe - sigma2``.

Every method evaluated on one scenario sees the same training sets and test
pairs (common random numbers), and every ``g_hat`` value is computed by
:func:`g_statistics` so values for different methods are directly
comparable.

SNR is taken as ``beta' gamma_rho beta / sigma2``.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import brentq, minimize_scalar

from .core import CorrelationSpec, Dataset, Partition, derive_stream
from .elastic_net import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, _path
from .errors import NumericalError, ParameterError, ReplicateError, SplitMspeError
from .partitions import adaptive_split_set
from .qp import box_lstsq, box_qp
from .splitreg import SplitRegConfig, _solve
from .targetcov import TargetCovRequest, generate

METHODS = ("ls", "ridge", "lasso", "elastic_net", "garrote", "split", "splitreg", "splitreg_weighted")
CLOSED_METHODS = ("ls", "ridge", "garrote", "split")
TEST_SAMPLING = ("matched", "iid")


# ---------------------------------------------------------------------------
# scenarios and grids


@dataclass(frozen=True, eq=False)
class Scenario:
    """One experimental point.

    ``beta`` has its first ``k`` coordinates equal to ``beta1`` and the rest
    equal to ``beta2``. ``test_sampling="matched"`` draws the M test pairs
    from their law and then rotates them (with the target-covariance
    generator) so that the test sample's second moments of ``(x0, eps0/sigma)``
    are exactly ``blockdiag(gamma_rho, 1)``; ``"iid"`` keeps the raw draws.

    ``noise_sampling="matched"`` adjusts the training noise inside the column
    space of each design so that the projections ``u_i = X_i' eps_i`` have
    mean exactly 0 and second moment exactly ``n * gamma_r`` across the N
    replicates. For any linear estimator the training error depends on the
    noise only through ``u_i``, so ``g_hat - sigma2`` then equals its
    expectation over the noise exactly. The replicate standard error is still
    reported and overstates the remaining uncertainty.
    """

    n: int
    d: int
    beta1: float
    beta2: float
    snr: float
    spec: CorrelationSpec
    N: int = 200
    M: int = 500
    seed: int = 0
    k: int | None = None
    test_sampling: str = "matched"
    noise_sampling: str = "matched"
    noise_variance: float | None = None

    def __post_init__(self):
        if self.k is None:
            object.__setattr__(self, "k", 1 if self.d <= 2 else 2)
        if self.spec.d != self.d:
            raise ParameterError(f"correlation spec has d={self.spec.d}, scenario has d={self.d}")
        if not self.snr > 0:
            raise ParameterError("snr must be positive")
        if self.noise_variance is not None and not self.noise_variance > 0:
            raise ParameterError("noise_variance must be positive")
        if self.N < 1 or self.M < 1:
            raise ParameterError("N and M must be >= 1")
        if not 1 <= self.k < self.d:
            raise ParameterError(f"allocation k must satisfy 1 <= k < d, got k={self.k}, d={self.d}")
        if self.test_sampling not in TEST_SAMPLING:
            raise ParameterError(f"test_sampling must be one of {TEST_SAMPLING}")
        if self.n <= self.d:
            raise ParameterError(f"need n > d, got n={self.n}, d={self.d}")
        if self.noise_sampling not in TEST_SAMPLING:
            raise ParameterError(f"noise_sampling must be one of {TEST_SAMPLING}")
        if self.noise_sampling == "matched" and self.N <= self.d:
            raise ParameterError("matched noise sampling needs N > d")
        if self.test_sampling == "matched" and self.M <= self.d + 1:
            raise ParameterError("matched test sampling needs M > d + 1")
        if self.noise_variance is None and self.signal <= 0:
            raise ParameterError("beta' gamma_rho beta must be positive to define sigma2")

    @classmethod
    def equicorrelated(cls, n, d, r, rho, beta1=1.0, beta2=0.0, snr=1.0, **kwargs) -> "Scenario":
        return cls(n, d, beta1, beta2, snr, CorrelationSpec.equicorrelation(d, rho, r), **kwargs)

    @property
    def beta(self) -> np.ndarray:
        b = np.full(self.d, float(self.beta2))
        b[: self.k] = self.beta1
        return b

    @property
    def signal(self) -> float:
        b = self.beta
        return float(b @ self.spec.gamma_rho @ b)

    @property
    def sigma2(self) -> float:
        if self.noise_variance is not None:
            return float(self.noise_variance)
        return self.signal / self.snr

    @property
    def effective_snr(self) -> float:
        """The SNR actually in force; differs from ``snr`` when the noise
        variance is fixed directly."""
        return self.signal / self.sigma2

    @property
    def r(self) -> float | None:
        return self.spec.r

    @property
    def rho(self) -> float | None:
        return self.spec.rho

    def replace(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


def log_grid(lo: float, hi: float, count: int) -> tuple[float, ...]:
    """``count`` log-spaced values from ``hi`` down to ``lo``."""
    if count == 1:
        return (float(hi),)
    return tuple(float(v) for v in np.logspace(math.log10(hi), math.log10(lo), count))


@dataclass(frozen=True)
class TuningGrid:
    """Search grids. ``ridge_lambdas`` are on the X'X scale; ``enet_lambdas``
    (lasso, elastic net, SplitReg ``lambda_s``) on the per-observation scale
    of the 1/(2n) loss. Weights (garrote, split, SplitReg deltas) are
    optimized exactly and have no grid."""

    ridge_lambdas: tuple[float, ...]
    enet_lambdas: tuple[float, ...]
    alphas: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    lambda_d: tuple[float, ...] = (0.0,) + log_grid(1e-3, 1e2, 20)[::-1]
    splitreg_groups: int = 3
    split_gmax: int = 3
    tolerance: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS

    def __post_init__(self):
        for name in ("ridge_lambdas", "enet_lambdas", "alphas", "lambda_d"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ParameterError(f"grid {name} is empty")
            if any(v < 0 for v in vals):
                raise ParameterError(f"grid {name} has negative entries")
            object.__setattr__(self, name, vals)
        for name in ("ridge_lambdas", "enet_lambdas"):
            vals = getattr(self, name)
            if any(b > a for a, b in zip(vals, vals[1:])):
                raise ParameterError(f"grid {name} must be sorted in descending order")
        if any(not 0 <= a <= 1 for a in self.alphas):
            raise ParameterError("alpha grid entries must lie in [0, 1]")
        if 0.0 not in self.lambda_d:
            raise ParameterError("lambda_d grid must contain 0")
        if self.splitreg_groups < 1 or self.split_gmax < 1:
            raise ParameterError("splitreg_groups and split_gmax must be >= 1")

    @classmethod
    def default(cls, n: int, **kwargs) -> "TuningGrid":
        base = log_grid(1e-4, 1e3, 50)
        return cls(ridge_lambdas=tuple(n * v for v in base), enet_lambdas=base, **kwargs)


@dataclass(frozen=True)
class MspeRecord:
    method: str
    beta2: float
    snr: float
    r: float | None
    rho: float | None
    mspe: float
    mspe_minus_sigma2: float
    se: float
    tuning: dict[str, Any] = field(default_factory=dict)
    sigma2: float = float("nan")
    source: str = "montecarlo"
    checksum: str = ""

    def __post_init__(self):
        if self.mspe < 0:
            raise ParameterError("MSPE must be non-negative")

    def argmin_string(self) -> str:
        return format_tuning(self.tuning)


def format_tuning(tuning: dict[str, Any]) -> str:
    parts = []
    for key, val in tuning.items():
        if isinstance(val, (tuple, list, np.ndarray)):
            val = " ".join(repr(float(v)) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        parts.append(f"{key}={val}")
    return ";".join(parts)


# ---------------------------------------------------------------------------
# closed forms, d = 2


def _check_r(r):
    if not -1 < r < 1:
        raise ParameterError(f"need |r| < 1, got r={r}")


def mspe_ls_closed(sigma2, n, r, rho) -> float:
    _check_r(r)
    return 2.0 * (sigma2 / n) * (1.0 - r * rho) / (1.0 - r * r)


def mspe_garrote_closed(w, beta, sigma2, n, r, rho) -> float:
    _check_r(r)
    w1, w2 = w
    b1, b2 = beta
    bias = (w1 - 1) ** 2 * b1**2 + (w2 - 1) ** 2 * b2**2 + 2 * rho * (w1 - 1) * (w2 - 1) * b1 * b2
    var = sigma2 / (n * (1 - r * r)) * (w1**2 + w2**2 - 2 * r * w1 * w2 * rho)
    return float(bias + var)


def _ridge_parts(lam, n, r):
    t = lam / n
    B = np.array([[1 + t, -r], [-r, 1 + t]])
    v11 = (1 + t) ** 2 - r * r * (1 + 2 * t)
    v12 = r * (t * t - 1 + r * r)
    V = np.array([[v11, v12], [v12, v11]])
    return t, B, V


def mspe_ridge_closed(lam, beta, sigma2, n, r, rho) -> float:
    _check_r(r)
    if not lam >= 0:
        raise ParameterError("ridge penalty must be >= 0")
    beta = np.asarray(beta, dtype=float)
    G = np.array([[1.0, rho], [rho, 1.0]])
    if math.isinf(lam):
        return float(beta @ G @ beta)
    t, B, V = _ridge_parts(lam, n, r)
    pre = ((1 + t) ** 2 - r * r) ** -2
    return float(pre * (t * t * beta @ B @ G @ B @ beta + sigma2 * np.trace(G @ V) / n))


def mspe_split2_closed(w, beta, sigma2, n, r, rho) -> float:
    _check_r(r)
    w1, w2 = w
    beta = np.asarray(beta, dtype=float)
    T = np.array([[1 - w1, -w1 * r], [-w2 * r, 1 - w2]])
    G_rho = np.array([[1.0, rho], [rho, 1.0]])
    G_r = np.array([[1.0, r], [r, 1.0]])
    W = np.diag([w1, w2])
    return float(beta @ T.T @ G_rho @ T @ beta + sigma2 / n * np.trace(G_rho @ W @ G_r @ W))


def garrote_quadratic(beta, sigma2, n, r, rho):
    """(H, h, c0) with garrote MSPE(w) = w'Hw - 2h'w + c0."""
    beta = np.asarray(beta, dtype=float)
    G = np.array([[1.0, rho], [rho, 1.0]])
    Db = np.diag(beta)
    s = sigma2 / (n * (1 - r * r))
    H = Db @ G @ Db + s * np.array([[1.0, -r * rho], [-r * rho, 1.0]])
    return H, Db @ G @ beta, float(beta @ G @ beta)


def split2_quadratic(beta, sigma2, n, r, rho):
    """(H, h, c0) with split MSPE(w) = w'Hw - 2h'w + c0."""
    beta = np.asarray(beta, dtype=float)
    G_rho = np.array([[1.0, rho], [rho, 1.0]])
    G_r = np.array([[1.0, r], [r, 1.0]])
    Dm = np.diag(G_r @ beta)
    H = Dm @ G_rho @ Dm + sigma2 / n * (G_rho * G_r)
    return H, Dm @ G_rho @ beta, float(beta @ G_rho @ beta)


def coef_mse_ls(sigma2, n, r) -> float:
    """MSE of the LS estimate of one coefficient with two standardized predictors."""
    _check_r(r)
    return sigma2 / ((1 - r * r) * n)


def coef_mse_split(beta2, sigma2, n, r) -> float:
    """MSE of the unshrunken split estimate ``(1/n) sum x_i1 y_i`` of beta1."""
    return r * r * beta2 * beta2 + sigma2 / n


def split_crossover(sigma2, n, r) -> float:
    """|beta2| at which split and LS estimates of beta1 have equal MSE."""
    if r == 0:
        return math.inf
    f = lambda b: coef_mse_split(b, sigma2, n, r) - coef_mse_ls(sigma2, n, r)  # noqa: E731
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-15)


def _ridge_closed_min(beta, sigma2, n, r, rho, lambdas):
    f = lambda lam: mspe_ridge_closed(lam, beta, sigma2, n, r, rho)  # noqa: E731
    cands = [(f(0.0), 0.0)]
    grid = sorted(float(v) for v in lambdas if v > 0)
    vals = [f(v) for v in grid]
    cands += list(zip(vals, grid))
    i = int(np.argmin(vals))
    if 0 < i < len(grid) - 1 and vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
        t = [math.log(grid[i - 1]), math.log(grid[i]), math.log(grid[i + 1])]
        res = minimize_scalar(lambda u: f(math.exp(u)), bracket=tuple(t), method="golden",
                              tol=1e-10)
        cands.append((float(res.fun), float(math.exp(res.x))))
    best = min(cands, key=lambda c: c[0])
    return best[0], {"lambda": best[1]}


def minimize_closed(method: str, beta, sigma2: float, n: int, r: float, rho: float,
                    ridge_lambdas: Sequence[float] | None = None) -> tuple[float, dict[str, Any]]:
    """Minimum closed-form MSPE (without sigma2) and its argmin tuning.

    Ridge: coarse log grid plus golden-section refinement. Garrote and split:
    exact minimization of a convex quadratic in ``w`` over ``[0, 1]^2``.
    ``split`` is the adaptive choice between the best shrunken split and the
    best garrote.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (2,):
        raise ParameterError("closed forms are for two predictors")
    if method == "ls":
        return mspe_ls_closed(sigma2, n, r, rho), {}
    if method == "ridge":
        if ridge_lambdas is None:
            ridge_lambdas = [n * v for v in log_grid(1e-4, 1e3, 50)]
        return _ridge_closed_min(beta, sigma2, n, r, rho, ridge_lambdas)
    if method == "garrote":
        H, h, _ = garrote_quadratic(beta, sigma2, n, r, rho)
        w = box_qp(H, h, 0.0, 1.0)
        return mspe_garrote_closed(w, beta, sigma2, n, r, rho), {"omega": tuple(w.tolist())}
    if method == "split":
        g_val, g_tun = minimize_closed("garrote", beta, sigma2, n, r, rho)
        H, h, _ = split2_quadratic(beta, sigma2, n, r, rho)
        w = box_qp(H, h, 0.0, 1.0)
        s_val = mspe_split2_closed(w, beta, sigma2, n, r, rho)
        if s_val < g_val:
            return s_val, {"partition": "{1}{2}", "w": tuple(w.tolist())}
        return g_val, {"partition": "{1,2}", "w": g_tun["omega"]}
    raise ParameterError(f"no closed form for method '{method}'")


# ---------------------------------------------------------------------------
# Monte Carlo sample


@dataclass(frozen=True, eq=False)
class MonteCarloSample:
    """Training designs ``X`` (N, n, d) with standard-normal noise (N, n),
    and test points ``X0`` (M, d) with standard-normal noise (M,). Responses
    are formed per beta and sigma by :meth:`responses`."""

    X: np.ndarray
    noise: np.ndarray
    X0: np.ndarray
    noise0: np.ndarray

    def responses(self, beta, sigma: float) -> tuple[np.ndarray, np.ndarray]:
        beta = np.asarray(beta, dtype=float)
        Y = np.einsum("inj,j->in", self.X, beta) + sigma * self.noise
        y0 = self.X0 @ beta + sigma * self.noise0
        return Y, y0

    def checksum(self) -> str:
        h = hashlib.sha256()
        for a in (self.X, self.noise, self.X0, self.noise0):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]


_SAMPLE_CACHE: dict[tuple, MonteCarloSample] = {}


def _sample_key(sc: Scenario) -> tuple:
    return (sc.seed, sc.n, sc.d, sc.N, sc.M, sc.test_sampling, sc.noise_sampling,
            sc.spec.gamma_r.tobytes(), sc.spec.gamma_rho.tobytes())


def draw_sample(sc: Scenario) -> MonteCarloSample:
    """Training and test data for ``sc``; depends only on the seed and the
    design parameters, not on beta or the SNR."""
    key = _sample_key(sc)
    if key in _SAMPLE_CACHE:
        return _SAMPLE_CACHE[key]
    X = np.empty((sc.N, sc.n, sc.d))
    noise = np.empty((sc.N, sc.n))
    for i in range(sc.N):
        try:
            X[i] = generate(TargetCovRequest(sc.n, sc.spec, derive_stream(sc.seed, i, "design")))
        except SplitMspeError as exc:
            raise ReplicateError(i, exc) from exc
        noise[i] = derive_stream(sc.seed, i, "noise").generator().standard_normal(sc.n)
    if sc.noise_sampling == "matched":
        noise = _match_noise(X, noise, sc.spec.gamma_r)
    stream = derive_stream(sc.seed, 0, "test")
    if sc.test_sampling == "matched":
        ext = block_diag(sc.spec.gamma_rho, np.ones((1, 1)))
        T = generate(TargetCovRequest(sc.M, CorrelationSpec(ext, ext), stream))
        X0, noise0 = T[:, : sc.d].copy(), T[:, sc.d].copy()
    else:
        rng = stream.generator()
        X0 = rng.standard_normal((sc.M, sc.d)) @ np.linalg.cholesky(sc.spec.gamma_rho).T
        noise0 = rng.standard_normal(sc.M)
    for a in (X, noise, X0, noise0):
        a.setflags(write=False)
    sample = MonteCarloSample(X, noise, X0, noise0)
    if len(_SAMPLE_CACHE) > 8:
        _SAMPLE_CACHE.clear()
    _SAMPLE_CACHE[key] = sample
    return sample


def _match_noise(X: np.ndarray, noise: np.ndarray, gamma_r: np.ndarray) -> np.ndarray:
    """Shift each noise vector within the column space of its design so the
    projections ``X_i' eps_i`` have exact mean 0 and second moment n gamma_r."""
    N, n, _ = X.shape
    U = np.einsum("inj,in->ij", X, noise)
    C = U - U.mean(axis=0)
    S = C.T @ C / N
    try:
        W = np.linalg.solve(np.linalg.cholesky(S), C.T).T
        V = math.sqrt(n) * W @ np.linalg.cholesky(gamma_r).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("noise projections are degenerate; use more replicates") from exc
    out = noise.copy()
    for i in range(N):
        A = X[i].T @ X[i]
        out[i] -= X[i] @ np.linalg.solve(A, U[i] - V[i])
    return out


@dataclass(frozen=True, eq=False)
class GEstimate:
    g: float
    se: float
    per_replicate: np.ndarray
    checksum: str = ""


def g_statistics(B: np.ndarray, X0: np.ndarray, y0: np.ndarray) -> tuple[float, float, np.ndarray]:
    """``g_hat`` for coefficient rows ``B`` (N, d): the mean over replicates
    of the mean squared test error, with its replicate-level standard error.

    Totals use exactly rounded summation, so the value does not depend on
    the order of the replicates.
    """
    # contiguous copy so the value depends only on B's entries, not its layout
    err = np.ascontiguousarray(B) @ X0.T - y0
    gi = np.mean(err * err, axis=1)
    N = gi.shape[0]
    g = math.fsum(gi) / N
    se = math.sqrt(math.fsum((gi - g) ** 2) / (N - 1) / N) if N > 1 else 0.0
    return g, se, gi


def estimate_g(predictor: Callable[[Dataset], np.ndarray], sc: Scenario,
               sample: MonteCarloSample | None = None) -> GEstimate:
    """``g_hat`` for a fixed-tuning linear predictor ``Dataset -> coefficients``."""
    sample = draw_sample(sc) if sample is None else sample
    Y, y0 = sample.responses(sc.beta, math.sqrt(sc.sigma2))
    B = np.empty((sc.N, sc.d))
    for i in range(sc.N):
        try:
            B[i] = predictor(Dataset(sample.X[i], Y[i], standardized=True))
        except SplitMspeError as exc:
            raise ReplicateError(i, exc) from exc
    g, se, gi = g_statistics(B, sample.X0, y0)
    return GEstimate(g, se, gi, sample.checksum())


# ---------------------------------------------------------------------------
# batched fits over replicates


class _Workspace:
    """Shared per-scenario quantities: Gram matrices, LS fits, test moments."""

    def __init__(self, sc: Scenario, sample: MonteCarloSample):
        self.sc = sc
        self.sample = sample
        self.Y, self.y0 = sample.responses(sc.beta, math.sqrt(sc.sigma2))
        A = np.einsum("inj,ink->ijk", sample.X, sample.X)
        self.A = 0.5 * (A + np.transpose(A, (0, 2, 1)))
        self.b = np.einsum("inj,in->ij", sample.X, self.Y)
        # ||X0 b - y0||^2 = ||R0[:, :d] b - R0[:, d]||^2 + const
        self.R0 = np.linalg.qr(np.column_stack([sample.X0, self.y0]), mode="r")
        self.XT = [np.ascontiguousarray(sample.X[i].T) for i in range(sc.N)]
        self.checksum = sample.checksum()
        self._ls = None
        self._enet: dict[float, np.ndarray] = {}

    def g(self, B):
        g, se, _ = g_statistics(B, self.sample.X0, self.y0)
        return g, se

    @property
    def ls(self) -> np.ndarray:
        if self._ls is None:
            self._ls = np.linalg.solve(self.A, self.b[..., None])[..., 0]
        return self._ls

    def ridge(self, lam: float) -> np.ndarray:
        d = self.sc.d
        return np.linalg.solve(self.A + lam * np.eye(d), self.b[..., None])[..., 0]

    def split(self, p: Partition) -> np.ndarray:
        B = np.zeros((self.sc.N, self.sc.d))
        for idx in p.groups:
            ix = list(idx)
            blk = self.A[:, ix][:, :, ix]
            B[:, ix] = np.linalg.solve(blk, self.b[:, ix][..., None])[..., 0]
        return B

    def weight_qp(self, B: np.ndarray, lower: float, upper: float) -> np.ndarray:
        """Exact minimizer of g_hat(w) for predictions ``x0'(w * beta_i)``."""
        d = self.sc.d
        Z = (B[:, None, :] * self.R0[None, :, :d]).reshape(-1, d)
        y = np.tile(self.R0[:, d], B.shape[0])
        return box_lstsq(Z, y, lower, upper)

    def enet(self, alpha: float, lambdas, tol, max_sweeps) -> np.ndarray:
        """Warm-started paths for every replicate, shape (N, L, d)."""
        if alpha not in self._enet:
            out = np.empty((self.sc.N, len(lambdas), self.sc.d))
            lam = np.asarray(lambdas, dtype=float)
            for i in range(self.sc.N):
                try:
                    out[i] = _path(self.XT[i], self.Y[i], lam, alpha, tol, max_sweeps)
                except SplitMspeError as exc:
                    raise ReplicateError(i, exc) from exc
            self._enet[alpha] = out
        return self._enet[alpha]

    def splitreg(self, G, alpha, lambda_d, lambdas, tol, max_sweeps) -> np.ndarray:
        """SplitReg paths over descending lambda_s, shape (N, L, G, d)."""
        out = np.empty((self.sc.N, len(lambdas), G, self.sc.d))
        for i in range(self.sc.N):
            betas = np.zeros((G, self.sc.d))
            for k, lam in enumerate(lambdas):
                cfg = SplitRegConfig(G, float(lam), alpha, lambda_d, max_sweeps, tol)
                try:
                    _solve(self.XT[i], self.Y[i], betas, cfg, np.empty(0))
                except SplitMspeError as exc:
                    raise ReplicateError(i, exc) from exc
                out[i, k] = betas
        return out


def _record(sc: Scenario, method, g, se, tuning, ws) -> MspeRecord:
    return MspeRecord(method, float(sc.beta2), sc.effective_snr, sc.r, sc.rho, g, g - sc.sigma2, se,
                      tuning, sc.sigma2, "montecarlo", ws.checksum)


class _Best:
    """Running argmin; ties keep the earliest candidate."""

    def __init__(self):
        self.g = math.inf
        self.se = 0.0
        self.tuning: dict[str, Any] = {}

    def offer(self, g, se, tuning):
        if g < self.g:
            self.g, self.se, self.tuning = g, se, tuning


def _min_ls(ws, grid):
    g, se = ws.g(ws.ls)
    return g, se, {}


def _min_ridge(ws, grid):
    best = _Best()
    for lam in grid.ridge_lambdas:
        best.offer(*ws.g(ws.ridge(lam)), {"lambda": lam})
    return best.g, best.se, best.tuning


def _min_garrote(ws, grid):
    B = ws.ls
    best = _Best()
    w = ws.weight_qp(B, 0.0, 1.0)
    best.offer(*ws.g(B * w), {"omega": tuple(w.tolist())})
    # unshrunken LS is a feasible garrote
    best.offer(*ws.g(B), {"omega": (1.0,) * ws.sc.d})
    return best.g, best.se, best.tuning


def _min_split(ws, grid, garrote=None):
    """Adaptive SPLIT: best shrunken split over the candidate partitions or
    the best garrote, whichever is lower. The single-group partition is the
    garrote itself."""
    if garrote is None:
        garrote = _min_garrote(ws, grid)
    g0, se0, tun0 = garrote
    best = _Best()
    d = ws.sc.d
    best.offer(g0, se0, {"partition": str(Partition.single(d)), "w": tun0["omega"]})
    for p in adaptive_split_set(d, min(grid.split_gmax, d))[1:]:
        B = ws.split(p)
        w = ws.weight_qp(B, 0.0, 1.0)
        best.offer(*ws.g(B * w), {"partition": str(p), "w": tuple(w.tolist())})
    return best.g, best.se, best.tuning


def _min_enet(ws, grid, alphas):
    best = _Best()
    for alpha in alphas:
        path = ws.enet(alpha, grid.enet_lambdas, grid.tolerance, grid.max_sweeps)
        for k, lam in enumerate(grid.enet_lambdas):
            best.offer(*ws.g(path[:, k, :]), {"lambda": lam, "alpha": alpha})
    return best.g, best.se, best.tuning


def _min_splitreg(ws, grid, weighted: bool):
    """Grid over (alpha, lambda_d, lambda_s). At lambda_d = 0 the models
    decouple and each equals the elastic net fit, which is used directly."""
    G = grid.splitreg_groups
    best = _Best()
    for alpha in grid.alphas:
        for lam_d in grid.lambda_d:
            if lam_d == 0.0:
                en = ws.enet(alpha, grid.enet_lambdas, grid.tolerance, grid.max_sweeps)
                paths = np.repeat(en[:, :, None, :], G, axis=2)
            else:
                paths = ws.splitreg(G, alpha, lam_d, grid.enet_lambdas, grid.tolerance, grid.max_sweeps)
            for k, lam in enumerate(grid.enet_lambdas):
                tuning = {"lambda_s": lam, "alpha": alpha, "lambda_d": lam_d, "G": G}
                betas = paths[:, k]  # (N, G, d)
                if lam_d == 0.0:
                    uniform = ws.g(paths[:, k, 0, :])
                else:
                    uniform = ws.g(betas.mean(axis=1))
                if not weighted:
                    best.offer(*uniform, tuning)
                    continue
                delta = _delta_qp(ws, betas)
                best.offer(*ws.g(np.einsum("g,igd->id", delta, betas)),
                           {**tuning, "delta": tuple(delta.tolist())})
                best.offer(*uniform, {**tuning, "delta": (1.0 / G,) * G})
    return best.g, best.se, best.tuning


def _delta_qp(ws, betas):
    d = betas.shape[2]
    Z = np.einsum("kd,igd->ikg", ws.R0[:, :d], betas).reshape(-1, betas.shape[1])
    y = np.tile(ws.R0[:, d], betas.shape[0])
    return box_lstsq(Z, y, 0.0, np.inf)


def min_g_many(methods: Sequence[str], sc: Scenario, grid: TuningGrid,
               sample: MonteCarloSample | None = None) -> dict[str, MspeRecord]:
    """Monte Carlo minimum ``g_hat`` for several methods on shared data."""
    for m in methods:
        if m not in METHODS:
            raise ParameterError(f"unknown method '{m}'")
    sample = draw_sample(sc) if sample is None else sample
    ws = _Workspace(sc, sample)
    out: dict[str, MspeRecord] = {}
    garrote = None
    for m in methods:
        if m == "ls":
            res = _min_ls(ws, grid)
        elif m == "ridge":
            res = _min_ridge(ws, grid)
        elif m == "lasso":
            res = _min_enet(ws, grid, (1.0,))
        elif m == "elastic_net":
            res = _min_enet(ws, grid, grid.alphas)
        elif m == "garrote":
            res = garrote = garrote or _min_garrote(ws, grid)
        elif m == "split":
            garrote = garrote or _min_garrote(ws, grid)
            res = _min_split(ws, grid, garrote)
        elif m == "splitreg":
            res = _min_splitreg(ws, grid, weighted=False)
        else:
            res = _min_splitreg(ws, grid, weighted=True)
        out[m] = _record(sc, m, res[0], res[1], res[2], ws)
    return out


def min_g(method: str, sc: Scenario, grid: TuningGrid,
          sample: MonteCarloSample | None = None) -> MspeRecord:
    return min_g_many([method], sc, grid, sample)[method]


# ---------------------------------------------------------------------------
# sweeps


def closed_record(method: str, sc: Scenario, grid: TuningGrid | None = None) -> MspeRecord:
    if sc.d != 2 or sc.r is None:
        raise ParameterError("closed forms need d = 2 with equicorrelation parameters")
    lambdas = grid.ridge_lambdas if grid is not None else None
    val, tuning = minimize_closed(method, sc.beta, sc.sigma2, sc.n, sc.r, sc.rho, lambdas)
    return MspeRecord(method, float(sc.beta2), sc.effective_snr, sc.r, sc.rho, val + sc.sigma2, val,
                      0.0, tuning, sc.sigma2, "closed", "")


def _point_task(args):
    sc, methods, grid = args
    recs = min_g_many(methods, sc, grid)
    return [recs[m] for m in methods]


def sweep_curve(template: Scenario, beta2_grid: Sequence[float], methods: Sequence[str],
                grid: TuningGrid, snrs: Sequence[float] | None = None, mode: str = "auto",
                jobs: int = 1) -> list[MspeRecord]:
    """Minimum MSPE for every (snr, method, beta2). Rows are ordered by snr,
    then method (as given), then beta2. With ``mode="auto"`` the closed forms
    are used when d = 2 and they exist; ``"montecarlo"`` forces simulation
    and ``"closed"`` rejects methods without a closed form.

    Work is split by (snr, beta2) point; results do not depend on ``jobs``.
    """
    if mode not in ("auto", "closed", "montecarlo"):
        raise ParameterError(f"unknown mode '{mode}'")
    snrs = [template.snr] if snrs is None else list(snrs)
    if template.r is not None and template.rho is not None and template.r < template.rho:
        warnings.warn(f"r={template.r} < rho={template.rho}: outside the r >= rho design",
                      stacklevel=2)
    closed_ok = template.d == 2 and template.r is not None
    if mode == "closed":
        bad = [m for m in methods if m not in CLOSED_METHODS]
        if bad or not closed_ok:
            raise ParameterError(f"no closed form for {bad or 'd != 2'}")
    use_closed = [m for m in methods if mode != "montecarlo" and closed_ok and m in CLOSED_METHODS]
    use_mc = [m for m in methods if m not in use_closed]

    points = [(s, b) for s in snrs for b in beta2_grid]
    mc: dict[tuple[float, float], list[MspeRecord]] = {}
    if use_mc:
        tasks = [(template.replace(snr=float(s), beta2=float(b)), use_mc, grid) for s, b in points]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_point_task, tasks))
        else:
            results = [_point_task(t) for t in tasks]
        mc = dict(zip(points, results))

    rows: list[MspeRecord] = []
    for s in snrs:
        for m in methods:
            for b in beta2_grid:
                if m in use_closed:
                    sc = template.replace(snr=float(s), beta2=float(b))
                    rows.append(closed_record(m, sc, grid))
                else:
                    rows.append(mc[(s, b)][use_mc.index(m)])
    return rows
