"""Egoistic translation estimators and the genie-aided relative-distance oracle.

Two estimators are provided.  The quadratic-program estimator fits the
translation that reconciles the stacked Gram matrix with the (masked)
squared sample EDM.  The robust estimator instead minimizes the scalar
consistency relation ``|a t + b|`` subject to the reconstructed squared
cross distances matching the observed ones, which confines the fit to the
measured entries and degrades more gracefully under erasures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import Conformation, Pose, schonberg_dcm
from .completion import CompletionOptions
from .errors import InvalidArgumentError
from .measurement import ConnectivityMask, CrossDistanceMatrix, cross_edm
from .pipeline import PipelineProducts, build_embedding

__all__ = [
    "SolverOptions",
    "TranslationEstimate",
    "RobustCoefficients",
    "estimate_translation_mds",
    "estimate_translation_mds_genie",
    "robust_coefficients",
    "default_epsilon",
    "estimate_translation_robust",
    "estimate_translation_robust_genie",
    "corrected_distance_estimator",
]


@dataclass(frozen=True)
class SolverOptions:
    """Gradient-descent settings shared by both estimators."""

    tol: float = 1e-8
    max_iters: int = 500
    penalty_stages: int = 5
    penalty_growth: float = 10.0
    completion: bool = False
    completion_opts: CompletionOptions | None = None
    nystrom_mode: str = "squared"


@dataclass(frozen=True)
class TranslationEstimate:
    t_hat: np.ndarray
    method: str
    iterations: int
    objective: float
    converged: bool


@dataclass(frozen=True)
class RobustCoefficients:
    """Row vector a and scalar b of the consistency relation a t + b = 0."""

    a: np.ndarray
    b: float


_EYE3 = np.eye(3)


def _descend(fun, x0: np.ndarray, tol: float, max_iters: int):
    """Modified-Newton descent with Armijo backtracking.

    ``fun`` returns (value, gradient, Hessian); the objectives here are
    smooth low-order polynomials in three variables with cheap analytic
    Hessians.  Indefinite Hessians (possible far from the minimum of a
    quartic) get an eigenvalue floor so the step is always a descent
    direction and the line search accepts quickly.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g, h = fun(x)
    iters = 0
    for iters in range(1, max_iters + 1):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return x, f, iters - 1, True
        evals = np.linalg.eigvalsh(h)
        shift = max(0.0, -float(evals[0])) + 1e-12 * max(float(evals[-1]), 1.0)
        direction = np.linalg.solve(h + shift * _EYE3, -g)
        slope = float(direction @ g)
        if slope >= 0.0:
            direction = -g / max(gn, 1.0)
            slope = float(direction @ g)
        alpha = 1.0
        for _ in range(40):
            x_new = x + alpha * direction
            f_new, g_new, h_new = fun(x_new)
            if f_new <= f + 1e-4 * alpha * slope:
                break
            alpha *= 0.5
        else:
            return x, f, iters, bool(gn <= tol)
        x, f, g, h = x_new, f_new, g_new, h_new
    return x, f, iters, bool(np.linalg.norm(g) <= tol)


def _objective_mask(w_eff: ConnectivityMask) -> np.ndarray:
    # Intra-body blocks are fully trusted (D1 exact, D2 estimated); only the
    # cross blocks carry erasures.  Identity diagonal blocks would discard
    # the intra-distance information and break the zero-residual identity of
    # the Gram/EDM relation at the truth.
    n1, n2 = w_eff.shape
    return np.block(
        [[np.ones((n1, n1)), w_eff.w], [w_eff.w.T, np.ones((n2, n2))]]
    )


def _mds_translation(
    c1: Conformation,
    products: PipelineProducts,
    opts: SolverOptions,
    method: str,
) -> TranslationEstimate:
    n1 = c1.n_points
    n2 = products.embedding.s2_aligned.shape[1]
    n = n1 + n2
    j = schonberg_dcm(n)
    jn2 = schonberg_dcm(n2)
    x2 = products.embedding.s2_aligned @ jn2  # centered target estimate
    k = 0.5 * j @ (products.d_hat.d ** 2 * _objective_mask(products.w_effective)) @ j
    # derivative structure: dR/dt_i = z u_i^T + u_i z^T with u_i the i-th
    # row of the centered stack and z the centered target-column indicator
    z = j @ np.concatenate([np.zeros(n1), np.ones(n2)])
    zz = float(z @ z)
    s_buf = np.empty((3, n))
    s_buf[:, :n1] = c1.c
    # normalize so the gradient tolerance acts relative to the data scale;
    # the reported objective is un-normalized
    seeds = [products.embedding.t_star, products.embedding.s2_aligned.mean(axis=1)]

    def make_fun(scale):
        inv = 1.0 / scale

        def fun(t):
            s_buf[:, n1:] = x2 + t[:, None]
            u = s_buf - s_buf.mean(axis=1, keepdims=True)  # S J
            r = u.T @ u + k
            f = float(np.sum(r * r)) * inv
            rz = r @ z
            grad = (4.0 * inv) * (u @ rz)
            uz = u @ z
            hess = (4.0 * inv) * (
                zz * (u @ u.T) + np.outer(uz, uz) + float(z @ rz) * _EYE3
            )
            return f, grad, hess

        return fun

    raw = make_fun(1.0)
    scale = max(raw(seeds[0])[0], raw(seeds[1])[0], 1.0)
    fun = make_fun(scale)

    # both natural seeds are cheap; keep whichever descends further
    best = None
    for seed in seeds:
        t, f, iters, ok = _descend(fun, seed, opts.tol, opts.max_iters)
        if best is None or f < best[1]:
            best = (t, f, iters, ok)
    t, f, iters, ok = best
    return TranslationEstimate(t, method, iters, f * scale, ok)


def estimate_translation_mds(
    c1: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
    opts: SolverOptions | None = None,
) -> TranslationEstimate:
    """Egoistic MDS-based translation estimate (no target-shape knowledge).

    Minimizes ``||J (S^ T S^ + 1/2 D^2 . W^) J||_F^2`` over the free
    translation block of the stacked estimate, seeded from the alignment
    step.
    """
    opts = opts or SolverOptions()
    products = build_embedding(
        c1,
        d12_measured,
        w,
        d2_mode=opts.nystrom_mode,
        completion=opts.completion,
        completion_opts=opts.completion_opts,
    )
    return _mds_translation(c1, products, opts, "mds")


def estimate_translation_mds_genie(
    c1: Conformation,
    c2: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
    opts: SolverOptions | None = None,
) -> TranslationEstimate:
    """Genie-aided variant: the true target intra-distance matrix replaces Nystrom."""
    opts = opts or SolverOptions()
    products = build_embedding(
        c1,
        d12_measured,
        w,
        d2_mode="known",
        d2_known=cross_edm(c2.c, c2.c).d12,
        completion=opts.completion,
        completion_opts=opts.completion_opts,
    )
    return _mds_translation(c1, products, opts, "genie-mds")


def robust_coefficients(
    c1: Conformation,
    s2_aligned: np.ndarray,
    d12_measured: CrossDistanceMatrix,
) -> RobustCoefficients:
    """Coefficients of the scalar consistency relation ``a t + b = 0``.

    ``a`` is assembled through the vectorization identity
    ``1^T (C1^T t 1^T) 1 = 1^T (1 (x) C1^T) t`` and reduces to twice the
    primary body's geometric center; for a centered conformation it
    vanishes and the relation carries no translation information.
    """
    if d12_measured.squared:
        raise InvalidArgumentError("robust_coefficients expects plain distances")
    s2 = np.asarray(s2_aligned, dtype=float)
    n1, n2 = c1.n_points, s2.shape[1]
    ones = np.ones(n1 * n2)
    a = (2.0 / (n1 * n2)) * ones @ np.kron(np.ones((n2, 1)), c1.c.T)
    jn2 = schonberg_dcm(n2)
    b = (
        -np.sum(c1.c ** 2) / n1
        - np.sum(s2 ** 2) / n2
        + np.sum(d12_measured.d12 ** 2) / (n1 * n2)
        + (2.0 / (n1 * n2)) * float(np.ones(n1) @ (c1.c.T @ s2 @ jn2) @ np.ones(n2))
    )
    return RobustCoefficients(a, float(b))


def default_epsilon(d12_measured: CrossDistanceMatrix, w: ConnectivityMask, sigma: float) -> float:
    """Constraint slack matched to the squared-measurement noise variance.

    Per observed entry the squared distance has variance
    ``4 d^2 sigma^2 + 2 sigma^4``; the slack budgets that for every
    observed link using the mean observed distance.
    """
    nnz = int(np.count_nonzero(w.w))
    if nnz == 0 or sigma == 0.0:
        return 0.0
    dbar = float(d12_measured.d12[w.w == 1].mean())
    return nnz * (4.0 * dbar * dbar * sigma * sigma + 2.0 * sigma ** 4)


def _robust_translation(
    c1: Conformation,
    products: PipelineProducts,
    epsilon: float,
    opts: SolverOptions,
    method: str,
) -> TranslationEstimate:
    emb = products.embedding
    n2 = emb.s2_aligned.shape[1]
    coeff = robust_coefficients(c1, emb.s2_aligned, products.d12_used)
    x2 = emb.s2_aligned @ schonberg_dcm(n2)
    psi1 = (c1.c ** 2).sum(axis=0)
    wm = products.w_effective.w
    sq_meas = products.d12_used.d12 ** 2

    col_w = wm.sum(axis=0)
    row_w = wm.sum(axis=1)

    def constraint(t):
        s2 = x2 + t[:, None]
        d_star = psi1[:, None] + (s2 * s2).sum(axis=0)[None, :] - 2.0 * c1.c.T @ s2
        e = (d_star - sq_meas) * wm
        g = float(np.sum(e * e))
        grad = 4.0 * (s2 @ e.sum(axis=0) - c1.c @ e.sum(axis=1))
        cross = s2 @ wm.T @ c1.c.T
        hess = 8.0 * (
            (s2 * col_w) @ s2.T - cross - cross.T + (c1.c * row_w) @ c1.c.T
        ) + 4.0 * float(e.sum()) * _EYE3
        return g, grad, hess

    t = emb.s2_aligned.mean(axis=1)
    # unit normalization keeps the penalty schedule scale-free across noise
    # levels and body sizes
    lin0 = float(coeff.a @ t + coeff.b)
    g0 = constraint(t)[0]
    s_lin = max(abs(lin0), 1.0)
    s_g = max(g0, epsilon, 1.0)

    def make_fun(mu):
        # stage objective normalized by its penalty weight so the gradient
        # tolerance keeps the same meaning at every escalation
        norm = 1.0 / (1.0 + mu)

        def fun(t):
            lin = float(coeff.a @ t + coeff.b) / s_lin
            g, g_grad, g_hess = constraint(t)
            excess = max((g - epsilon) / s_g, 0.0)
            f = (lin * lin + mu * excess * excess) * norm
            grad = norm * (
                (2.0 * lin / s_lin) * coeff.a + (2.0 * mu * excess / s_g) * g_grad
            )
            hess = norm * (
                (2.0 / s_lin ** 2) * np.outer(coeff.a, coeff.a)
                + (2.0 * mu / s_g)
                * (
                    excess * g_hess
                    + ((1.0 / s_g) if excess > 0 else 0.0) * np.outer(g_grad, g_grad)
                )
            )
            return f, grad, hess

        return fun

    total_iters = 0
    mu = 1.0
    per_stage = max(opts.max_iters // opts.penalty_stages, 1)
    ok = False
    for _ in range(opts.penalty_stages):
        t_prev = t
        t, _, iters, ok = _descend(make_fun(mu), t, opts.tol, per_stage)
        total_iters += iters
        mu *= opts.penalty_growth
        if np.linalg.norm(t - t_prev) <= 1e-14 * (1.0 + np.linalg.norm(t)):
            break
    g_final = constraint(t)[0]
    # the squared-hinge penalty approaches the constraint from the
    # infeasible side; allow the O(1/mu) overshoot of the final stage
    mu_final = opts.penalty_growth ** (opts.penalty_stages - 1)
    feasible = g_final <= epsilon + s_g * 10.0 / mu_final + 1e-9
    objective = float(abs(coeff.a @ t + coeff.b))
    return TranslationEstimate(t, method, total_iters, objective, bool(ok and feasible))


def estimate_translation_robust(
    c1: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
    epsilon: float,
    opts: SolverOptions | None = None,
) -> TranslationEstimate:
    """Robust egoistic translation estimate.

    Minimizes ``|a t + b|`` subject to the reconstructed squared cross
    distances matching the observed ones within ``epsilon``, solved by
    exact-penalty gradient descent with an escalating penalty weight,
    seeded at the geometric center of the aligned target estimate.  If the
    constraint cannot be met the best-effort iterate is returned with
    ``converged=False``.
    """
    opts = opts or SolverOptions()
    products = build_embedding(
        c1,
        d12_measured,
        w,
        d2_mode=opts.nystrom_mode,
        completion=opts.completion,
        completion_opts=opts.completion_opts,
    )
    return _robust_translation(c1, products, epsilon, opts, "robust")


def estimate_translation_robust_genie(
    c1: Conformation,
    c2: Conformation,
    d12_measured: CrossDistanceMatrix,
    w: ConnectivityMask,
    epsilon: float,
    opts: SolverOptions | None = None,
) -> TranslationEstimate:
    """Genie-aided variant of the robust estimator (true D2 replaces Nystrom)."""
    opts = opts or SolverOptions()
    products = build_embedding(
        c1,
        d12_measured,
        w,
        d2_mode="known",
        d2_known=cross_edm(c2.c, c2.c).d12,
        completion=opts.completion,
        completion_opts=opts.completion_opts,
    )
    return _robust_translation(c1, products, epsilon, opts, "genie-robust")


def corrected_distance_estimator(
    c1: Conformation,
    c2: Conformation,
    pose1: Pose,
    pose2: Pose,
    d12: CrossDistanceMatrix,
    include_correction_terms: bool = True,
) -> float:
    """Closed-form squared relative translation ``||t1 - t2||^2`` for equal-size bodies.

    Requires full genie knowledge of both conformations and poses.  With
    ``include_correction_terms=False`` the two groups of pose-dependent
    terms are dropped, reproducing the earlier published estimator, which
    is biased whenever the bodies are rotated or displaced.
    """
    if c1.n_points != c2.n_points:
        raise InvalidArgumentError("equal body sizes required (N1 == N2)")
    if d12.squared:
        raise InvalidArgumentError("corrected_distance_estimator expects plain distances")
    n = c1.n_points
    q1, t1 = pose1.rotation.q, pose1.translation
    q2, t2 = pose2.rotation.q, pose2.translation
    ones = np.ones(n)
    est = np.sum(d12.d12 ** 2) / n ** 2 - (np.sum(c1.c ** 2) + np.sum(c2.c ** 2)) / n
    if include_correction_terms:
        cross = (
            c1.c.T @ q1.T @ q2 @ c2.c
            + np.outer(c1.c.T @ q1.T @ t2, ones)
            + np.outer(ones, t1 @ q2 @ c2.c)
        )
        est += (2.0 / n ** 2) * float(ones @ cross @ ones)
        est -= (2.0 / n) * float(np.sum(c1.c.T @ q1.T @ t1) + np.sum(c2.c.T @ q2.T @ t2))
    return float(est)
