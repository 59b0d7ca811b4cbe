"""Synthesis of true, noisy, squared and masked range data.

Cross-body distances live in one of two domains: plain meters or
element-wise squares.  ``CrossDistanceMatrix.squared`` tracks which, and the
operations below refuse to mix them up.  Erasures follow the deterministic
block pattern in which the first ``m`` landmarks of either body see
everything and the remaining pairs are unobserved; a uniform-random mask
with matched completeness is available for robustness studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import Conformation, SensorMatrix, _as_3xn
from .errors import DomainMismatchError, InvalidArgumentError

__all__ = [
    "CrossDistanceMatrix",
    "FullEdm",
    "ConnectivityMask",
    "ErasureMatrix",
    "NoiseModel",
    "cross_edm",
    "intra_edm",
    "full_edm",
    "add_range_noise",
    "square_measurements",
    "connectivity_mask",
    "random_mask",
    "completeness_fraction",
    "erasure_matrix",
    "apply_mask",
]


@dataclass(frozen=True)
class CrossDistanceMatrix:
    """N1xN2 cross-body distances; ``squared`` flags the element-wise square domain."""

    d12: np.ndarray
    squared: bool = False

    def __post_init__(self):
        d = np.asarray(self.d12, dtype=float)
        if d.ndim != 2:
            raise InvalidArgumentError(f"cross-distance matrix must be 2-D, got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise InvalidArgumentError("cross-distance matrix must be finite")
        if np.any(d < 0):
            raise InvalidArgumentError("distances must be nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "d12", d)

    @property
    def shape(self) -> tuple[int, int]:
        return self.d12.shape


@dataclass(frozen=True)
class FullEdm:
    """(N1+N2)x(N1+N2) plain-distance EDM with the body split recorded in ``n1``."""

    d: np.ndarray
    n1: int

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        n = d.shape[0]
        if d.ndim != 2 or d.shape[1] != n:
            raise InvalidArgumentError(f"EDM must be square, got {d.shape}")
        if not (0 < self.n1 < n):
            raise InvalidArgumentError(f"body split n1={self.n1} outside (0, {n})")
        if not np.all(np.isfinite(d)):
            raise InvalidArgumentError("EDM must be finite")
        if np.any(d < 0):
            raise InvalidArgumentError("EDM entries must be nonnegative")
        if np.linalg.norm(d - d.T) > 1e-12 * max(1.0, np.linalg.norm(d)):
            raise InvalidArgumentError("EDM must be symmetric")
        if np.any(np.abs(np.diag(d)) > 0):
            raise InvalidArgumentError("EDM must be hollow")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n_total(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class ConnectivityMask:
    """Binary N1xN2 mask of observed cross-body links with its block parameter m."""

    w: np.ndarray
    m: int

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2:
            raise InvalidArgumentError(f"mask must be 2-D, got {w.shape}")
        if not np.all((w == 0) | (w == 1)):
            raise InvalidArgumentError("mask entries must be 0 or 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    @property
    def is_full(self) -> bool:
        return bool(np.all(self.w == 1))


@dataclass(frozen=True)
class ErasureMatrix:
    """Stacked (N1+N2)-square erasure matrix ``[[I, W], [W^T, I]]``."""

    w_hat: np.ndarray


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian range noise of standard deviation ``sigma`` (meters)."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma >= 0):
            raise InvalidArgumentError(f"sigma must be >= 0, got {self.sigma}")


def squared_column_norms(x: Conformation | SensorMatrix | np.ndarray) -> np.ndarray:
    """Vector of squared column norms (the psi vector of the range model)."""
    m = _as_3xn(x)
    return (m * m).sum(axis=0)


def cross_edm(s1: SensorMatrix | np.ndarray, s2: SensorMatrix | np.ndarray) -> CrossDistanceMatrix:
    """Pairwise distances ``||s1_n - s2_m||_2`` between two sensor sets."""
    a, b = _as_3xn(s1), _as_3xn(s2)
    d2 = (
        (a * a).sum(axis=0)[:, None]
        + (b * b).sum(axis=0)[None, :]
        - 2.0 * a.T @ b
    )
    return CrossDistanceMatrix(np.sqrt(np.maximum(d2, 0.0)))


def intra_edm(x: Conformation | SensorMatrix | np.ndarray) -> np.ndarray:
    """Plain EDM of a single point set, returned as a bare symmetric array."""
    d = cross_edm(_as_3xn(x), _as_3xn(x)).d12.copy()
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def full_edm(s: SensorMatrix | np.ndarray, n1: int) -> FullEdm:
    """Full two-body EDM of stacked sensors, split after column ``n1``."""
    m = _as_3xn(s)
    if not (0 < n1 < m.shape[1]):
        raise InvalidArgumentError(f"n1={n1} must split the {m.shape[1]} stacked columns")
    return FullEdm(intra_edm(m), n1)


def add_range_noise(d12: CrossDistanceMatrix, noise: NoiseModel) -> CrossDistanceMatrix:
    """Add i.i.d. Gaussian noise to plain distances, clamping below at zero.

    Draws are reproducible from ``noise.seed``.  Clamping is safe in the
    intended sigma <= 0.2 m regime where distances are meters-scale.
    """
    if d12.squared:
        raise DomainMismatchError("range noise applies to plain distances, not squares")
    if noise.sigma == 0.0:
        return d12
    rng = np.random.default_rng(noise.seed)
    noisy = d12.d12 + rng.normal(0.0, noise.sigma, size=d12.shape)
    return CrossDistanceMatrix(np.maximum(noisy, 0.0))


def square_measurements(d12: CrossDistanceMatrix) -> CrossDistanceMatrix:
    """Element-wise square, moving the matrix to the squared domain."""
    if d12.squared:
        raise DomainMismatchError("measurements are already squared")
    return CrossDistanceMatrix(d12.d12 ** 2, squared=True)


def connectivity_mask(n1: int, n2: int, m: int) -> ConnectivityMask:
    """Deterministic block mask: entry (i, j) unobserved iff i > m and j > m."""
    if not (0 <= m <= min(n1, n2)):
        raise InvalidArgumentError(f"m={m} outside [0, min({n1}, {n2})]")
    w = np.ones((n1, n2))
    w[m:, m:] = 0.0
    return ConnectivityMask(w, m)


def random_mask(n1: int, n2: int, m: int, rng: np.random.Generator) -> ConnectivityMask:
    """Uniform-random mask with the same completeness as the block mask."""
    zeros = (n1 - m) * (n2 - m)
    flat = np.ones(n1 * n2)
    off = rng.choice(n1 * n2, size=zeros, replace=False)
    flat[off] = 0.0
    return ConnectivityMask(flat.reshape(n1, n2), m)


def completeness_fraction(w: ConnectivityMask) -> float:
    """Fraction of observed cross-body links, nnz(W) / (N1 * N2)."""
    n1, n2 = w.shape
    return float(np.count_nonzero(w.w)) / float(n1 * n2)


def erasure_matrix(w: ConnectivityMask) -> ErasureMatrix:
    """Stacked erasure matrix ``[[I_N1, W], [W^T, I_N2]]``."""
    n1, n2 = w.shape
    top = np.hstack([np.eye(n1), w.w])
    bottom = np.hstack([w.w.T, np.eye(n2)])
    return ErasureMatrix(np.vstack([top, bottom]))


def apply_mask(d12: CrossDistanceMatrix, w: ConnectivityMask) -> CrossDistanceMatrix:
    """Zero out unobserved entries (domain-preserving element-wise product)."""
    if d12.shape != w.shape:
        raise InvalidArgumentError(f"shape mismatch: data {d12.shape} vs mask {w.shape}")
    return CrossDistanceMatrix(d12.d12 * w.w, squared=d12.squared)
