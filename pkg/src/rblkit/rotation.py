"""Egoistic rotation estimation and the genie-aided orthogonal-Procrustes baseline.

Range-only data determines the target's orientation only up to a proper
signed permutation of its body axes: relabeling or flipping the axes of an
unknown conformation produces identical distances.  The egoistic estimator
therefore enumerates all 24 proper axis assignments consistent with the
eigendecomposition of the measurement-path Gram matrix, scores them with
the spectral-fit objective, and resolves the remaining gauge freedom by
picking the candidate closest to a reference orientation (the primary's
own frame by default, i.e. the minimal-relative-rotation convention).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

from .bodies import Conformation, RotationMatrix, schonberg_dcm
from .errors import (
    DegenerateConfigurationError,
    InsufficientLinksError,
    InvalidArgumentError,
    RankDeficiencyError,
)
from .measurement import ConnectivityMask, CrossDistanceMatrix

__all__ = [
    "RotationEstimate",
    "double_center_cross",
    "project_left",
    "estimate_rotation_ego",
    "estimate_rotation_naive",
    "estimate_rotation_opp",
    "nearest_rotation",
]

COND_LIMIT = 1e12
MIN_VISIBLE_LINKS = 4


@dataclass(frozen=True)
class RotationEstimate:
    q_hat: RotationMatrix
    method: str
    permutation_index: int
    objective: float
    ambiguous: bool = False


def double_center_cross(d12_sq: CrossDistanceMatrix, n1: int, n2: int) -> np.ndarray:
    """Double-center the squared cross block: ``-1/2 J_N1 D12^2 J_N2``.

    For exact centered inputs this equals ``C1^T Q C2``.
    """
    if not d12_sq.squared:
        raise InvalidArgumentError("double_center_cross expects the squared domain")
    if d12_sq.shape != (n1, n2):
        raise InvalidArgumentError(f"expected shape {(n1, n2)}, got {d12_sq.shape}")
    return -0.5 * schonberg_dcm(n1) @ d12_sq.d12 @ schonberg_dcm(n2)


def project_left(c1: Conformation, d_bar: np.ndarray) -> np.ndarray:
    """Left-multiply by the pseudo-inverse of C1^T: ``(C1 C1^T)^-1 C1 Dbar``.

    Equals ``Q C2`` for exact centered inputs.
    """
    d_bar = np.asarray(d_bar, dtype=float)
    if d_bar.shape[0] != c1.n_points:
        raise InvalidArgumentError(
            f"row count {d_bar.shape[0]} does not match N1={c1.n_points}"
        )
    gram = c1.c @ c1.c.T
    if np.linalg.cond(gram) >= COND_LIMIT:
        raise RankDeficiencyError("C1 C1^T is ill-conditioned")
    return np.linalg.solve(gram, c1.c @ d_bar)


def nearest_rotation(m: np.ndarray) -> RotationMatrix:
    """Orthogonal polar factor with det +1 (nearest proper rotation)."""
    a = np.asarray(m, dtype=float)
    if a.shape != (3, 3) or not np.all(np.isfinite(a)):
        raise InvalidArgumentError("nearest_rotation needs a finite 3x3 matrix")
    u, s, vt = np.linalg.svd(a)
    if s[1] <= 1e-12 * max(s[0], 1e-30):
        raise DegenerateConfigurationError("matrix rank < 2; polar factor undetermined")
    d = np.sign(np.linalg.det(u @ vt))
    return RotationMatrix(u @ np.diag([1.0, 1.0, d if d != 0 else 1.0]) @ vt)


def _desc_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(evals)[::-1]
    return evals[order], evecs[:, order]


def _canonical_signs(u: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made positive, det fixed last
    v = u.copy()
    for k in range(3):
        i = int(np.argmax(np.abs(v[:, k])))
        if v[i, k] < 0:
            v[:, k] *= -1.0
    if np.linalg.det(v) < 0:
        v[:, 2] *= -1.0
    return v


_PERMS = list(permutations(range(3)))


def estimate_rotation_ego(
    c1: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
    s2_aligned: np.ndarray,
    reference: RotationMatrix | None = None,
) -> RotationEstimate:
    """Egoistic rotation estimate via eigen-permutation search.

    Builds ``M = D'' D''^T`` from the measurement path, takes the axis
    spreads from the embedding Gram matrix, and evaluates the spectral-fit
    objective over the 6 eigenvalue orderings x 4 proper sign patterns.
    Objective ties (exact in the noiseless case) are broken by Frobenius
    distance to ``reference``; the default identity reference encodes the
    convention that the target labels its body axes like the primary, which
    holds whenever the true relative rotation is the smallest in its
    signed-permutation gauge orbit.
    """
    if d12_measured.squared:
        raise InvalidArgumentError("estimate_rotation_ego expects plain distances")
    s2 = np.asarray(s2_aligned, dtype=float)
    n1, n2 = d12_measured.shape
    masked_sq = CrossDistanceMatrix((d12_measured.d12 * w.w) ** 2, squared=True)
    d_bar = double_center_cross(masked_sq, n1, n2)
    d_check = project_left(c1, d_bar)
    m = d_check @ d_check.T

    jn2 = schonberg_dcm(n2)
    gram_emb = (s2 @ jn2) @ (s2 @ jn2).T
    lam = np.sort(np.linalg.eigvalsh(0.5 * (gram_emb + gram_emb.T)))[::-1]
    lam = np.maximum(lam, 0.0)

    mu, u = _desc_eigh(m)
    u = _canonical_signs(u)
    spread = max(lam[0], 1e-30)
    ambiguous = bool(
        min(lam[0] - lam[1], lam[1] - lam[2]) < 1e-9 * spread
    )

    ref = np.eye(3) if reference is None else reference.q
    best = None
    for p_idx, perm in enumerate(_PERMS):
        cols = u[:, perm]
        lam_cand = lam[list(perm)]
        for signs in product((1.0, -1.0), repeat=3):
            cand = cols * np.array(signs)
            if np.linalg.det(cand) < 0:
                continue
            fit = m - (cand * lam_cand) @ cand.T
            obj = float(np.sum(fit * fit))
            ref_dist = float(np.linalg.norm(cand - ref))
            key = (obj, ref_dist)
            if best is None or _better(key, best[0], spread):
                best = (key, cand, p_idx)
    key, cand, p_idx = best
    return RotationEstimate(
        q_hat=nearest_rotation(cand),
        method="ego",
        permutation_index=p_idx,
        objective=key[0],
        ambiguous=ambiguous,
    )


def _better(key, best_key, scale: float) -> bool:
    # objective first with an fp-noise tie band, then reference distance
    tie = 1e-9 * max(scale * scale, 1.0)
    if key[0] < best_key[0] - tie:
        return True
    if key[0] > best_key[0] + tie:
        return False
    return key[1] < best_key[1]


def estimate_rotation_naive(s2_aligned: np.ndarray) -> RotationEstimate:
    """Magnitude-ordered eigendecomposition of the embedding Gram matrix.

    Diagnostic only: columns come out sorted by axis spread, so bodies whose
    frame axes are not spread-ordered get their estimate columns swapped.
    """
    s2 = np.asarray(s2_aligned, dtype=float)
    n2 = s2.shape[1]
    jn2 = schonberg_dcm(n2)
    gram = (s2 @ jn2) @ (s2 @ jn2).T
    lam, u = _desc_eigh(gram)
    u = _canonical_signs(u)
    q = nearest_rotation(u)
    fit = gram - (u * np.maximum(lam, 0.0)) @ u.T
    return RotationEstimate(
        q_hat=q,
        method="naive-eig",
        permutation_index=0,
        objective=float(np.sum(fit * fit)),
        ambiguous=bool(min(lam[0] - lam[1], lam[1] - lam[2]) < 1e-9 * max(lam[0], 1e-30)),
    )


def _visible_rectangle(w: ConnectivityMask) -> tuple[np.ndarray, np.ndarray]:
    """Largest fully-observed rectangle of the structured masks.

    Either every primary row sees a common set of target columns (the block
    pattern) or vice versa; whichever set is larger wins.
    """
    wm = w.w
    full_cols = np.nonzero(wm.min(axis=0) == 1)[0]
    full_rows = np.nonzero(wm.min(axis=1) == 1)[0]
    by_cols = (np.arange(wm.shape[0]), full_cols)
    by_rows = (full_rows, np.arange(wm.shape[1]))
    area_cols = wm.shape[0] * full_cols.size
    area_rows = full_rows.size * wm.shape[1]
    return by_cols if area_cols >= area_rows else by_rows


def estimate_rotation_opp(
    c1: Conformation,
    c2_genie: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
) -> RotationEstimate:
    """Genie-aided orthogonal-Procrustes rotation from the visible sub-block.

    Restricts to a fully-observed rectangle of links, double-centers its
    squared distances and solves the Procrustes problem against the known
    target conformation in closed form.  Needs at least 4 visible links on
    each body and non-coplanar visible landmarks.
    """
    if d12_measured.squared:
        raise InvalidArgumentError("estimate_rotation_opp expects plain distances")
    rows, cols = _visible_rectangle(w)
    p, q_count = rows.size, cols.size
    if p < MIN_VISIBLE_LINKS or q_count < MIN_VISIBLE_LINKS:
        raise InsufficientLinksError(
            f"need at least {MIN_VISIBLE_LINKS} fully visible links per body, "
            f"got {p} x {q_count}"
        )
    c1v = c1.c[:, rows] @ schonberg_dcm(p)
    c2v = c2_genie.c[:, cols] @ schonberg_dcm(q_count)
    sv = np.linalg.svd(c2v, compute_uv=False)
    if sv[2] <= 1e-9 * max(sv[0], 1e-30):
        raise RankDeficiencyError("visible target landmarks are coplanar (rank < 3)")
    block = d12_measured.d12[np.ix_(rows, cols)] ** 2
    d_bar = -0.5 * schonberg_dcm(p) @ block @ schonberg_dcm(q_count)
    d_check = d_bar @ c2v.T @ np.linalg.inv(c2v @ c2v.T)
    u, _, vt = np.linalg.svd(c1v @ d_check)
    d = np.sign(np.linalg.det(u @ vt))
    q_hat = RotationMatrix(u @ np.diag([1.0, 1.0, d if d != 0 else 1.0]) @ vt)
    residual = float(np.linalg.norm(d_check - c1v.T @ q_hat.q) ** 2)
    return RotationEstimate(
        q_hat=q_hat,
        method="opp-genie",
        permutation_index=0,
        objective=residual,
        ambiguous=False,
    )
