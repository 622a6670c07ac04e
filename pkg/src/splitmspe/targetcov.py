"""Gaussian samples whose *empirical* covariance equals a target exactly.

Procedure (all covariances use the 1/n divisor):

1. draw n rows from N(0, gamma_rho);
2. standardize the columns and form S = X'X / n;
3. eigendecompose S (eigenvalues descending, each eigenvector signed so
   its largest-magnitude entry is positive) and rotate, Z~ = X P;
4. standardize the columns of Z~, giving Z with Z'Z / n = I;
5. build Y column by column, Y^k = (sum_{j<k} c_j Z^j + Z^k) / sqrt(1 + sum c_j^2),
   with the c_j solved so that cov(Y^j, Y^k) = gamma_r[j, k] for every j < k.

Because Z is orthonormal in the empirical inner product, the step-5
conditions for column k form a lower-triangular system in the normalized
coefficients, and the resulting coefficient rows are exactly the Cholesky
factor of gamma_r. :func:`triangular_factor` computes that factor directly
and is used only to cross-check the sequential construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import CorrelationSpec, RngStream
from .errors import DecompositionError, DegenerateSampleError, ParameterError, RankError

EIG_MIN = 1e-12


@dataclass(frozen=True)
class TargetCovRequest:
    n: int
    spec: CorrelationSpec
    stream: RngStream

    def __post_init__(self):
        if self.n <= self.spec.d:
            raise RankError(f"need n > d for an exact identity Z (n={self.n}, d={self.spec.d})")


class TargetCovSample(NamedTuple):
    raw: np.ndarray  # step 1 draw
    Z: np.ndarray  # step 4, empirical covariance I
    Y: np.ndarray  # step 5, empirical covariance gamma_r
    coefficients: np.ndarray  # lower-triangular rows used in step 5


def _standardize_columns(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    c = a - a.mean(axis=0)
    m2 = (c * c).sum(axis=0) / n
    if np.min(m2) <= EIG_MIN:
        raise DegenerateSampleError(f"column with variance {np.min(m2):.3g} in generated sample")
    return c / np.sqrt(m2)


def _ordered_eigh(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, P = np.linalg.eigh(S)
    order = np.argsort(lam)[::-1]
    lam, P = lam[order], P[:, order]
    idx = np.argmax(np.abs(P), axis=0)
    signs = np.sign(P[idx, np.arange(P.shape[1])])
    return lam, P * signs


def sequential_coefficients(gamma_r: np.ndarray) -> np.ndarray:
    """Rows ``(c_1, ..., c_{k-1}, 1) / sqrt(1 + sum c_j^2)`` for every column k.

    Column k's unknowns satisfy ``L[:k, :k] u = gamma_r[:k, k]``, solved by
    forward substitution against the rows already built.
    """
    d = gamma_r.shape[0]
    L = np.zeros((d, d))
    for k in range(d):
        u = np.zeros(k)
        for j in range(k):
            u[j] = (gamma_r[j, k] - L[j, :j] @ u[:j]) / L[j, j]
        rest = 1.0 - u @ u
        if rest <= EIG_MIN:
            raise DecompositionError(f"target matrix is not positive definite (column {k})")
        # c_j = u_j / u_k with u_k = sqrt(rest); the normalizer then equals 1 / u_k
        c = u / np.sqrt(rest)
        norm = np.sqrt(1.0 + c @ c)
        L[k, :k] = c / norm
        L[k, k] = 1.0 / norm
    return L


def generate_detailed(req: TargetCovRequest) -> TargetCovSample:
    spec, n, d = req.spec, req.n, req.spec.d
    rng = req.stream.generator()
    try:
        root = np.linalg.cholesky(spec.gamma_rho)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("population correlation is not positive definite") from exc
    L = sequential_coefficients(spec.gamma_r)
    raw = rng.standard_normal((n, d)) @ root.T
    X = _standardize_columns(raw)
    S = X.T @ X / n
    lam, P = _ordered_eigh(0.5 * (S + S.T))
    if lam[-1] < EIG_MIN:
        raise DegenerateSampleError(f"sample covariance eigenvalue {lam[-1]:.3g} below {EIG_MIN}")
    Z = _standardize_columns(X @ P)
    Y = np.empty_like(Z)
    for k in range(d):
        Y[:, k] = Z[:, : k + 1] @ L[k, : k + 1]
    return TargetCovSample(raw, Z, Y, L)


def generate(req: TargetCovRequest) -> np.ndarray:
    """n x d matrix with empirical covariance ``req.spec.gamma_r``."""
    return generate_detailed(req).Y


def triangular_factor(gamma_r) -> np.ndarray:
    """Lower-triangular L with ``L @ L.T == gamma_r`` (Cholesky)."""
    g = np.asarray(gamma_r, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ParameterError("gamma_r must be square")
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("gamma_r is not positive definite") from exc


def empirical_cov(a: np.ndarray) -> np.ndarray:
    """Covariance with the 1/n divisor."""
    c = a - a.mean(axis=0)
    return c.T @ c / a.shape[0]
