"""Classical MDS on the assembled EDM and alignment into the primary frame.

The MDS embedding is only determined up to a rigid motion and a reflection.
Alignment onto the primary body's known conformation fixes the frame: both
chiralities of the embedding are aligned by a proper-rotation Procrustes
fit and the one reproducing the primary body better wins.  The stored
embedding is the chirality that was kept, so the alignment identity
``s2_aligned = r_star @ s2_star + t_star @ 1^T`` always holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import Conformation, RotationMatrix, SensorMatrix, _as_3xn, schonberg_dcm
from .errors import AmbiguousAlignmentError, DegenerateEmbeddingError, InvalidArgumentError
from .measurement import FullEdm

__all__ = [
    "EmbeddingEstimate",
    "classical_mds",
    "procrustes_align",
    "align_target",
    "build_stacked_estimate",
]


@dataclass(frozen=True)
class EmbeddingEstimate:
    """MDS coordinates of both bodies plus the transform into the primary frame."""

    s1_star: np.ndarray
    s2_star: np.ndarray
    s2_aligned: np.ndarray
    r_star: RotationMatrix
    t_star: np.ndarray

    def __post_init__(self):
        recon = self.r_star.q @ self.s2_star + self.t_star[:, None]
        if np.linalg.norm(recon - self.s2_aligned) > 1e-9 * max(1.0, np.linalg.norm(self.s2_aligned)):
            raise InvalidArgumentError("s2_aligned does not match r_star @ s2_star + t_star")


def classical_mds(d_hat: FullEdm, dim: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Embed an EDM by eigendecomposition of the double-centered squared matrix.

    Coordinates are the leading eigenvector columns scaled by the square
    roots of their eigenvalues; negative leading eigenvalues (possible under
    noise or completion error) are clamped to zero.  Eigenvectors are taken
    in descending eigenvalue order with the sign fixed so the first
    non-negligible component is positive, making the output deterministic.

    Returns
    -------
    (s1_star, s2_star)
        dim x N1 and dim x N2 coordinate blocks in the arbitrary MDS frame.
    """
    n = d_hat.n_total
    j = schonberg_dcm(n)
    b = -0.5 * j @ (d_hat.d ** 2) @ j
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]

    scale = max(float(evals[0]), 0.0)
    if scale <= 0.0 or np.count_nonzero(evals > 1e-10 * scale) < 1:
        raise DegenerateEmbeddingError("double-centered EDM has no usable spectrum")

    k = min(dim, n)
    coords = np.zeros((dim, n))
    for i in range(k):
        v = evecs[:, i]
        nz = np.nonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))[0]
        if nz.size and v[nz[0]] < 0:
            v = -v
        coords[i] = np.sqrt(max(evals[i], 0.0)) * v
    return coords[:, : d_hat.n1], coords[:, d_hat.n1 :]


def procrustes_align(source: np.ndarray, target: np.ndarray) -> tuple[RotationMatrix, np.ndarray]:
    """Best proper rotation + translation mapping source points onto target.

    Solves ``min ||target - (R @ source + t 1^T)||_F`` over rotations with
    det = +1 (closed form via SVD of the centered cross-covariance, sign
    of the smallest singular direction flipped when needed).

    Raises
    ------
    AmbiguousAlignmentError
        If the centered source has rank < 2 (rotation about the point/line
        is undetermined).
    """
    src = np.asarray(source, dtype=float)
    dst = np.asarray(target, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[0] != 3:
        raise InvalidArgumentError(f"point sets must both be 3xN, got {src.shape} and {dst.shape}")
    if src.shape[1] < 3:
        raise InvalidArgumentError("alignment needs at least 3 point pairs")
    mu_s = src.mean(axis=1, keepdims=True)
    mu_d = dst.mean(axis=1, keepdims=True)
    sc = src - mu_s
    sv = np.linalg.svd(sc, compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1e-30):
        raise AmbiguousAlignmentError("source points are collinear; alignment is ambiguous")
    h = sc @ (dst - mu_d).T
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d if d != 0 else 1.0]) @ u.T
    t = (mu_d - r @ mu_s).ravel()
    return RotationMatrix(r), t


def align_target(
    s1_star: np.ndarray,
    s2_star: np.ndarray,
    c1: Conformation,
) -> EmbeddingEstimate:
    """Carry the raw MDS embedding into the primary body's reference frame.

    Both the embedding and its mirror image (third coordinate negated) are
    candidate gauges; each is aligned to the primary conformation with a
    proper rotation and the chirality with the smaller body-1 residual is
    kept.
    """
    best = None
    for flip in (False, True):
        s1 = np.asarray(s1_star, dtype=float).copy()
        s2 = np.asarray(s2_star, dtype=float).copy()
        if flip:
            s1[2] *= -1.0
            s2[2] *= -1.0
        r_star, t_star = procrustes_align(s1, c1.c)
        residual = np.linalg.norm(c1.c - (r_star.q @ s1 + t_star[:, None]))
        if best is None or residual < best[0] - 1e-12:
            best = (residual, s1, s2, r_star, t_star)
    _, s1, s2, r_star, t_star = best
    s2_aligned = r_star.q @ s2 + t_star[:, None]
    return EmbeddingEstimate(s1, s2, s2_aligned, r_star, t_star)


def build_stacked_estimate(c1: Conformation, s2_aligned: np.ndarray) -> SensorMatrix:
    """Stack the known primary conformation with the aligned target estimate."""
    s2 = _as_3xn(s2_aligned)
    return SensorMatrix(np.hstack([c1.c, s2]))
