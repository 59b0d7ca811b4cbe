"""Target intra-distance recovery and low-rank completion of erased entries.

The unknown intra-distance block of the target body is reconstructed from
the known block and the cross block via a Nystrom approximation.  Erased
cross-block entries can be filled beforehand by rank-r completion (spectral
initialization plus alternating least-squares refinement on the factor
pair), applied in the squared-distance domain where the block is low rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, RankDeficiencyError, UnderDeterminedError
from .measurement import ConnectivityMask, CrossDistanceMatrix

__all__ = [
    "CompletionOptions",
    "hollow",
    "nystrom_d2",
    "assemble_full_edm",
    "rank_r_complete",
    "complete_cross_block",
]

# Squared EDMs of 3-D point sets factor as psi 1^T + 1 psi^T - 2 S^T S,
# so their rank never exceeds 5.
SQUARED_EDM_RANK = 5
PLAIN_COND_LIMIT = 1e12


@dataclass(frozen=True)
class CompletionOptions:
    rank: int = SQUARED_EDM_RANK
    max_iters: int = 500
    tol: float = 1e-8
    # relative singular-value cutoff for the pivot pseudo-inverse of the
    # structured (corner-erasure) completion path
    pivot_rtol: float = 1e-2


def hollow(x: np.ndarray) -> np.ndarray:
    """Copy of a square matrix with the diagonal forced to zero."""
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"hollow needs a square matrix, got {a.shape}")
    out = a.copy()
    np.fill_diagonal(out, 0.0)
    return out


def _truncated_pinv(a: np.ndarray, rank: int) -> np.ndarray:
    u, s, vt = np.linalg.svd(a)
    k = min(rank, np.count_nonzero(s > 1e-12 * s[0])) if s[0] > 0 else 0
    if k == 0:
        return np.zeros_like(a.T)
    return (vt[:k].T / s[:k]) @ u[:, :k].T


def nystrom_d2(
    d1: np.ndarray,
    d12: CrossDistanceMatrix,
    mode: str = "squared",
) -> np.ndarray:
    """Estimate the target body's intra-distance matrix from D1 and D12.

    Parameters
    ----------
    d1 : ndarray
        Plain intra-distance matrix of the primary body (N1 x N1).
    d12 : CrossDistanceMatrix
        Plain cross-distance block (N1 x N2), possibly with erased zeros.
    mode : {"squared", "plain"}
        "squared" applies the approximation to the element-wise squared
        blocks with a rank-truncated pseudo-inverse and maps back by square
        root; it is exact on noiseless data because squared EDMs have rank
        at most 5.  "plain" inverts D1 directly, which is only a crude
        approximation since plain EDMs are full rank.

    Returns
    -------
    ndarray
        Symmetric, hollow plain-distance estimate of D2 (N2 x N2).
    """
    d1 = np.asarray(d1, dtype=float)
    if d12.squared:
        raise InvalidArgumentError("nystrom_d2 expects the plain-distance cross block")
    b = d12.d12
    n1 = d1.shape[0]
    if d1.shape != (n1, n1) or b.shape[0] != n1:
        raise InvalidArgumentError(f"inconsistent shapes: D1 {d1.shape}, D12 {b.shape}")
    if mode == "plain" and n1 < b.shape[1]:
        # plain-domain inversion leans on rank(D1) >= rank(D2)
        raise InvalidArgumentError("Nystrom needs N1 >= N2 (rank condition)")
    if mode == "squared":
        inner = b.T ** 2 @ _truncated_pinv(d1 ** 2, SQUARED_EDM_RANK) @ b ** 2
        inner = 0.5 * (inner + inner.T)
        return hollow(np.sqrt(np.maximum(inner, 0.0)))
    if mode == "plain":
        if np.linalg.cond(d1) >= PLAIN_COND_LIMIT:
            raise RankDeficiencyError("D1 is ill-conditioned; retry with mode='squared'")
        inner = b.T @ np.linalg.inv(d1) @ b
        return hollow(np.maximum(0.5 * (inner + inner.T), 0.0))
    raise InvalidArgumentError(f"unknown nystrom mode {mode!r}")


def assemble_full_edm(
    d1: np.ndarray,
    d12_measured: CrossDistanceMatrix,
    d2_hat: np.ndarray,
):
    """Assemble the full sample EDM ``[[D1, D12~], [D12~^T, D2^]]``."""
    from .measurement import FullEdm

    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2_hat, dtype=float)
    if d12_measured.squared:
        raise InvalidArgumentError("assemble_full_edm expects plain distances")
    b = d12_measured.d12
    n1, n2 = b.shape
    if d1.shape != (n1, n1) or d2.shape != (n2, n2):
        raise InvalidArgumentError(
            f"block shapes inconsistent: D1 {d1.shape}, D12 {b.shape}, D2 {d2.shape}"
        )
    full = np.block([[d1, b], [b.T, d2]])
    return FullEdm(full, n1)


def rank_r_complete(
    observed: np.ndarray,
    mask: np.ndarray,
    r: int,
    opts: CompletionOptions | None = None,
) -> np.ndarray:
    """Fill erased entries of a (near) rank-r matrix.

    Spectral initialization: truncated SVD of the zero-filled matrix scaled
    by the inverse observed fraction.  Refinement runs in two phases, both
    deterministic: repeated rank-r SVD projection with observed entries
    re-imposed (escapes the poor basins the raw spectral start can land
    in), then alternating least squares on the factor pair until the
    relative residual on observed entries drops below ``opts.tol`` (or
    stalls) or the iteration budget runs out.

    Raises
    ------
    UnderDeterminedError
        If fewer observed entries than the ``r * (rows + cols - r)``
        degrees of freedom of a rank-r factorization.
    """
    opts = opts or CompletionOptions(rank=r)
    a = np.asarray(observed, dtype=float)
    om = np.asarray(mask, dtype=float)
    if a.shape != om.shape:
        raise InvalidArgumentError(f"shape mismatch: data {a.shape} vs mask {om.shape}")
    if r < 1:
        raise InvalidArgumentError(f"rank must be >= 1, got {r}")
    n_obs = int(np.count_nonzero(om))
    rows, cols = a.shape
    if n_obs < r * (rows + cols - r):
        raise UnderDeterminedError(
            f"{n_obs} observed entries cannot pin down a rank-{r} {rows}x{cols} matrix"
        )
    r = min(r, rows, cols)
    if np.all(om == 1):
        return a.copy()

    zero_filled = a * om
    obs_norm = max(np.linalg.norm(zero_filled), 1e-30)
    z = zero_filled / max(n_obs / om.size, 1e-12)
    prev = np.inf
    s0 = 1.0
    for _ in range(opts.max_iters):
        u, s, vt = np.linalg.svd(z)
        s0 = max(float(s[0]), 1e-30)
        low = (u[:, :r] * s[:r]) @ vt[:r]
        z = np.where(om == 1, zero_filled, low)
        res = np.linalg.norm((low - a) * om) / obs_norm
        if res < opts.tol or prev - res < 1e-6 * max(res, 1e-30):
            break
        prev = res
    u, s, vt = np.linalg.svd(z)
    x = u[:, :r] * np.sqrt(s[:r])
    y = vt[:r].T * np.sqrt(s[:r])

    ridge = 1e-12 * s0
    prev = np.inf
    for _ in range(opts.max_iters):
        x = _masked_ls(y, om, zero_filled, ridge)
        y = _masked_ls(x, om.T, zero_filled.T, ridge)
        res = np.linalg.norm((x @ y.T - a) * om) / obs_norm
        if res < opts.tol or prev - res < 1e-4 * opts.tol:
            break
        prev = res
    return x @ y.T


def _masked_ls(y: np.ndarray, om: np.ndarray, target: np.ndarray, ridge: float) -> np.ndarray:
    # rows of X solve min ||(x_i Y^T - t_i) . om_i||^2, batched over i
    r = y.shape[1]
    gram = np.einsum("ij,jk,jl->ikl", om, y, y)
    gram += ridge * np.eye(r)
    rhs = target @ y
    return np.linalg.solve(gram, rhs[..., None])[..., 0]


def _corner_blocks(w: np.ndarray):
    """Index sets (full rows, full cols, deficient rows, deficient cols) when
    the erased entries form exactly the product of deficient rows x deficient
    cols (the structured connectivity pattern); None otherwise."""
    rows0 = np.nonzero((w == 0).any(axis=1))[0]
    cols0 = np.nonzero((w == 0).any(axis=0))[0]
    if rows0.size == 0 or cols0.size == 0:
        return None
    expected = np.ones_like(w)
    expected[np.ix_(rows0, cols0)] = 0.0
    if not np.array_equal(expected, w):
        return None
    rows1 = np.setdiff1d(np.arange(w.shape[0]), rows0)
    cols1 = np.setdiff1d(np.arange(w.shape[1]), cols0)
    if rows1.size == 0 or cols1.size == 0:
        return None
    return rows1, cols1, rows0, cols0


def _complete_corner(sq: np.ndarray, blocks, rtol: float) -> np.ndarray:
    # missing corner of a low-rank matrix from the observed pivot:
    # B22 = B21 pinv(B11) B12, pivot pseudo-inverse truncated at rtol to
    # keep measurement noise out of the tiny pivot directions
    rows1, cols1, rows0, cols0 = blocks
    pivot = sq[np.ix_(rows1, cols1)]
    u, s, vt = np.linalg.svd(pivot)
    k = max(int(np.count_nonzero(s > rtol * max(s[0], 1e-30))), 1)
    pinv = (vt[:k].T / s[:k]) @ u[:, :k].T
    out = sq.copy()
    out[np.ix_(rows0, cols0)] = sq[np.ix_(rows0, cols1)] @ pinv @ sq[np.ix_(rows1, cols0)]
    return out


def complete_cross_block(
    d12_observed: CrossDistanceMatrix,
    w: ConnectivityMask,
    opts: CompletionOptions | None = None,
) -> CrossDistanceMatrix:
    """Complete erased cross-block entries in the squared-distance domain.

    The structured connectivity pattern erases exactly a corner block, and
    that corner is recovered far more stably from the fully observed pivot
    (a Schur-complement fill with a truncated pseudo-inverse) than by
    free-form iteration; unstructured masks fall back to
    :func:`rank_r_complete`.  Observed entries are kept exactly as
    measured; only masked-out entries take completed values, mapped back to
    the plain domain by square root with negative clamping.
    """
    if d12_observed.squared:
        raise InvalidArgumentError("complete_cross_block expects plain distances")
    if d12_observed.shape != w.shape:
        raise InvalidArgumentError(
            f"shape mismatch: data {d12_observed.shape} vs mask {w.shape}"
        )
    if w.is_full:
        return d12_observed
    opts = opts or CompletionOptions()
    sq = d12_observed.d12 ** 2
    blocks = _corner_blocks(w.w)
    if blocks is not None:
        filled = _complete_corner(sq, blocks, opts.pivot_rtol)
    else:
        filled = rank_r_complete(sq, w.w, opts.rank, opts)
    merged = np.where(w.w == 1, sq, np.maximum(filled, 0.0))
    return CrossDistanceMatrix(np.sqrt(merged))
