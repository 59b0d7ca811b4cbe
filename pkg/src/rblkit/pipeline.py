"""Shared front end of the estimation algorithms.

Every estimator starts the same way: fill erased cross-distance entries if
completion is enabled, reconstruct the target intra-distance block, assemble
the full sample EDM, embed it by MDS and align into the primary frame.  The
products are bundled so translation and rotation estimators can share one
pipeline run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import Conformation
from .completion import CompletionOptions, assemble_full_edm, complete_cross_block, nystrom_d2
from .embedding import EmbeddingEstimate, align_target, classical_mds
from .errors import InvalidArgumentError
from .measurement import ConnectivityMask, CrossDistanceMatrix, FullEdm, intra_edm

__all__ = ["PipelineProducts", "build_embedding"]


@dataclass(frozen=True)
class PipelineProducts:
    """Everything the estimators need downstream of the MDS step."""

    embedding: EmbeddingEstimate
    d_hat: FullEdm
    d12_used: CrossDistanceMatrix
    w_effective: ConnectivityMask


def build_embedding(
    c1: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
    *,
    d2_mode: str = "squared",
    d2_known: np.ndarray | None = None,
    completion: bool = False,
    completion_opts: CompletionOptions | None = None,
) -> PipelineProducts:
    """Run measurements through completion, Nystrom, MDS and alignment.

    Parameters
    ----------
    d2_mode : {"squared", "plain", "known"}
        Source of the target intra-distance block: Nystrom approximation in
        the squared or plain domain, or a caller-supplied matrix ("known",
        used by the genie-aided baselines).
    completion : bool
        Fill erased cross entries by rank-r completion before the Nystrom
        step; the effective mask is then fully observed.
    """
    if d12_measured.squared:
        raise InvalidArgumentError("pipeline expects plain-distance measurements")
    d1 = intra_edm(c1)
    d12_used = d12_measured
    w_eff = w
    if completion and not w.is_full:
        d12_used = complete_cross_block(d12_measured, w, completion_opts)
        w_eff = ConnectivityMask(np.ones(w.shape), m=min(w.shape))
    if d2_mode == "known":
        if d2_known is None:
            raise InvalidArgumentError("d2_mode='known' requires d2_known")
        d2_hat = np.asarray(d2_known, dtype=float)
    else:
        d2_hat = nystrom_d2(d1, d12_used, mode=d2_mode)
    d_hat = assemble_full_edm(d1, d12_used, d2_hat)
    s1_star, s2_star = classical_mds(d_hat)
    est = align_target(s1_star, s2_star, c1)
    return PipelineProducts(est, d_hat, d12_used, w_eff)
