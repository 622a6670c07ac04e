"""Shared domain types: datasets, partitions, Gram blocks, correlation specs
and deterministic random streams.

Variance convention: every "variance" and "covariance" in this package uses
the 1/n divisor, so a standardized column satisfies mean 0 and
(1/n) * sum(x**2) == 1.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateColumnError, ParameterError, SingularBlockError

STANDARDIZED_TOL = 1e-10
RCOND_MIN = 1e-12


def _frozen(a, dtype=float):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def rcond(a: np.ndarray) -> float:
    """Reciprocal 2-norm condition number; 0 for singular input."""
    if a.size == 0:
        return 1.0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0 or not np.all(np.isfinite(s)):
        return 0.0
    return float(s[-1] / s[0])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``X`` (n x d, rows are observations) and response ``y``.

    ``center`` and ``scale`` hold the column transform applied by
    :func:`standardize`, so new points can be mapped with
    :meth:`transform`. They are ``None`` for datasets built directly.
    """

    X: np.ndarray
    y: np.ndarray
    standardized: bool = False
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        X = _frozen(self.X)
        y = _frozen(self.y)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ParameterError(f"X must be a non-empty 2-d array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ParameterError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ParameterError("X and y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.center is not None:
            object.__setattr__(self, "center", _frozen(self.center))
            object.__setattr__(self, "scale", _frozen(self.scale))
        if self.standardized:
            n = X.shape[0]
            mean = X.mean(axis=0)
            m2 = (X * X).sum(axis=0) / n
            if np.max(np.abs(mean)) > STANDARDIZED_TOL or np.max(np.abs(m2 - 1)) > STANDARDIZED_TOL:
                raise ParameterError("dataset flagged standardized but columns are not")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Apply the stored standardization to new points (rows of ``x``)."""
        if self.center is None:
            return np.asarray(x, dtype=float)
        return (np.asarray(x, dtype=float) - self.center) / self.scale

    def drop_row(self, i: int) -> "Dataset":
        keep = np.arange(self.n) != i
        return Dataset(self.X[keep], self.y[keep])


def standardize(raw, response) -> Dataset:
    """Center each column and scale it to unit 1/n second moment.

    The response is left untouched (no intercept is modelled). The returned
    dataset records ``center`` and ``scale`` so that
    ``ds.transform(raw)`` reproduces ``ds.X``.

    Raises
    ------
    DegenerateColumnError
        If a column has centered second moment <= 1e-12.
    """
    X = np.asarray(raw, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim != 2:
        raise ParameterError("raw design must be 2-d")
    n = X.shape[0]
    if n < 2:
        raise ParameterError(f"standardize needs n >= 2, got {n}")
    center = X.mean(axis=0)
    Xc = X - center
    m2 = (Xc * Xc).sum(axis=0) / n
    for j, v in enumerate(m2):
        if v <= 1e-12:
            raise DegenerateColumnError(j, v)
    scale = np.sqrt(m2)
    # Already-standardized columns pass through bit-for-bit.
    done = (np.abs(center) <= 1e-12) & (np.abs(m2 - 1.0) <= 1e-12)
    center = np.where(done, 0.0, center)
    scale = np.where(done, 1.0, scale)
    Xs = (X - center) / scale
    return Dataset(Xs, y, standardized=True, center=center, scale=scale)


@dataclass(frozen=True)
class Partition:
    """Disjoint, non-empty groups of 0-based predictor indices.

    Always stored in canonical form: each group sorted ascending and groups
    ordered by their smallest element. Construct through
    :meth:`from_groups` to canonicalize arbitrary input.
    """

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.groups:
            if len(g) == 0:
                raise ParameterError("partition groups must be non-empty")
            for j in g:
                if j < 0:
                    raise ParameterError(f"negative index {j} in partition")
                if j in seen:
                    raise ParameterError(f"index {j} appears in more than one group")
                seen.add(j)
        if self.groups != _canonical(self.groups):
            raise ParameterError("partition is not in canonical form; use Partition.from_groups")

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[int]]) -> "Partition":
        return cls(_canonical(tuple(tuple(int(j) for j in g) for g in groups)))

    @classmethod
    def single(cls, d: int) -> "Partition":
        return cls((tuple(range(d)),))

    def canonical(self) -> "Partition":
        return Partition.from_groups(self.groups)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(j for g in self.groups for j in g))

    def covers(self, d: int) -> bool:
        return self.indices == tuple(range(d))

    def __len__(self):
        return len(self.groups)

    def __str__(self):
        # 1-based for humans
        return "".join("{" + ",".join(str(j + 1) for j in g) + "}" for g in self.groups)


def _canonical(groups):
    inner = [tuple(sorted(g)) for g in groups]
    return tuple(sorted(inner, key=lambda g: g[0] if g else -1))


@dataclass(frozen=True, eq=False)
class GramBlocks:
    """``A = X'X`` (unnormalized) with cached inverses of its diagonal blocks."""

    A: np.ndarray
    partition: Partition
    inverses: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def block(self, g: int) -> np.ndarray:
        idx = self.partition.groups[g]
        return self.A[np.ix_(idx, idx)]

    def block_inverse_matrix(self) -> np.ndarray:
        """d x d matrix with A_gg^-1 on the diagonal blocks and zeros elsewhere."""
        out = np.zeros_like(self.A)
        for idx, inv in zip(self.partition.groups, self.inverses):
            out[np.ix_(idx, idx)] = inv
        return out


def gram_blocks(ds: Dataset, p: Partition) -> GramBlocks:
    """Form X'X and invert each diagonal block of ``p``.

    Only diagonal blocks are inverted: the full matrix may be singular.
    """
    d = ds.d
    for g in p.groups:
        if max(g) >= d:
            raise ParameterError(f"partition index {max(g)} out of range for d={d}")
    A = ds.X.T @ ds.X
    A = 0.5 * (A + A.T)
    inverses = []
    for k, idx in enumerate(p.groups):
        blk = A[np.ix_(idx, idx)]
        rc = rcond(blk)
        if rc < RCOND_MIN:
            raise SingularBlockError(k, rc)
        inverses.append(_frozen(np.linalg.inv(blk)))
    return GramBlocks(_frozen(A), p, tuple(inverses))


@dataclass(frozen=True, eq=False)
class CorrelationSpec:
    """Population (``gamma_rho``) and target empirical (``gamma_r``)
    correlation matrices.

    ``rho`` and ``r`` are the equicorrelation parameters when the object was
    built by :meth:`equicorrelation`; they are ``None`` for explicit matrices.
    """

    gamma_rho: np.ndarray
    gamma_r: np.ndarray
    rho: float | None = None
    r: float | None = None
    structure: str = "explicit"

    def __post_init__(self):
        for name in ("gamma_rho", "gamma_r"):
            m = _frozen(getattr(self, name))
            _check_correlation(m, name)
            object.__setattr__(self, name, m)
        if self.gamma_rho.shape != self.gamma_r.shape:
            raise ParameterError("gamma_rho and gamma_r differ in dimension")

    @property
    def d(self) -> int:
        return self.gamma_r.shape[0]

    @classmethod
    def equicorrelation(cls, d: int, rho: float, r: float) -> "CorrelationSpec":
        if d < 1:
            raise ParameterError("d must be >= 1")
        lo = -1.0 / (d - 1) if d > 1 else -np.inf
        for name, v in (("rho", rho), ("r", r)):
            if not (lo < v < 1):
                raise ParameterError(f"{name}={v} outside ({lo:.4g}, 1) for d={d}")
        return cls(equicorrelation(d, rho), equicorrelation(d, r), rho=rho, r=r,
                   structure="equicorrelation")


def equicorrelation(d: int, c: float) -> np.ndarray:
    m = np.full((d, d), float(c))
    np.fill_diagonal(m, 1.0)
    return m


def _check_correlation(m, name):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"{name} must be square")
    if np.max(np.abs(m - m.T)) > 1e-12:
        raise ParameterError(f"{name} is not symmetric")
    if np.max(np.abs(np.diag(m) - 1.0)) > 1e-12:
        raise ParameterError(f"{name} must have unit diagonal")
    if np.linalg.eigvalsh(m)[0] <= 1e-12:
        raise ParameterError(f"{name} is not positive definite")


def _purpose_key(purpose: str) -> int:
    return int.from_bytes(hashlib.blake2b(purpose.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """Identifies one random stream: ``(seed, replicate, purpose)``.

    The generator state is derived through numpy's ``SeedSequence``, which
    hashes the 64-bit seed together with the spawn key
    ``(replicate, blake2b64(purpose))``. The mapping does not depend on the
    order in which streams are created, so results are independent of how
    replicates are scheduled across workers.
    """

    seed: int
    replicate: int
    purpose: str

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=self.seed & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(self.replicate, _purpose_key(self.purpose)),
        )

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def state(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.seed_sequence().generate_state(4, np.uint64))


def derive_stream(master: int, replicate: int, purpose: str) -> RngStream:
    if replicate < 0:
        raise ParameterError("replicate index must be non-negative")
    return RngStream(int(master), int(replicate), str(purpose))

