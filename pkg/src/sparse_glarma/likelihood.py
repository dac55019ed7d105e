"""Conditional log-likelihood and its exact first and second derivatives.

The log-likelihood (Poisson factorial constant omitted) is

    L(delta) = sum_t (Y_t W_t - exp(W_t)),       delta = (beta, gamma),

and both derivative orders of W_t satisfy forward recursions driven by the
working residuals.  Writing a_{t,j} = gamma_j (1 + E_{t-j}) and stacking the
partials into a vector dW_t over the active coordinates:

    dW_t  = c_t - sum_{j=1}^{min(q,t-1)} a_{t,j} dW_{t-j},

where the seed c_t has entry x_{t,k} for the beta_k coordinate and E_{t-l}
for the gamma_l coordinate (zero when t-l <= 0).  The second-derivative
matrices satisfy

    d2W_t = B_t + sum_{j=1}^{min(q,t-1)} a_{t,j} (dW_{t-j} dW_{t-j}' - d2W_{t-j}),

where the border matrix B_t adds -(1 + E_{t-l}) dW_{t-l} into the gamma_l
row and column for each lag l with t-l >= 1 (so B_t = 0 in the pure-beta
block).  Both recursions start from dW_1 = (x_1, 0) and d2W_1 = 0.

The full n x d matrix of first derivatives is materialized (it is reused by
the gradient and the Hessian), while the per-t second-derivative matrices
stream through a ring buffer of depth q and are accumulated directly into
the Hessian:

    dL  = sum_t (Y_t - mu_t) dW_t
    d2L = sum_t (Y_t - mu_t) d2W_t - sum_t mu_t dW_t dW_t'
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteCurvature
from .model import GlarmaParams, SeriesData, _check_dims, compute_state_path


@dataclass
class LikelihoodEval:
    """Value, gradient, Hessian and first-derivative paths at one point.

    ``hess`` is symmetrized as (H + H')/2 after assembly;
    ``hess_asymmetry`` records the relative asymmetry seen before that.
    ``dw`` holds the n x d matrix of dW_t rows for the active coordinates.
    """

    value: float
    grad: np.ndarray
    hess: np.ndarray | None
    dw: np.ndarray
    hess_asymmetry: float = 0.0


def _seed_matrix(data: SeriesData, e: np.ndarray, q: int, mode: str) -> np.ndarray:
    """Build the n x d matrix of recursion seeds c_t for the chosen mode."""
    n = data.n
    blocks = []
    if mode in ("full", "beta"):
        blocks.append(data.x)
    if mode in ("full", "gamma"):
        lagged = np.zeros((n, q))
        for lag in range(1, q + 1):
            lagged[lag:, lag - 1] = e[: n - lag]
        blocks.append(lagged)
    return np.ascontiguousarray(np.hstack(blocks))


def evaluate(
    params: GlarmaParams,
    data: SeriesData,
    mode: str = "full",
    want_hessian: bool = True,
    drop_w_curvature: bool = False,
) -> LikelihoodEval:
    """Evaluate L and its derivatives over the requested coordinate block.

    mode : "full" differentiates over (beta, gamma); "beta" and "gamma"
        restrict to one block (the restricted recursions are autonomous).
    drop_w_curvature : omit the sum_t (Y_t - mu_t) d2W_t term of the
        Hessian (Fisher-scoring style); off by default.
    """
    if mode not in ("full", "beta", "gamma"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_dims(params, data)
    path = compute_state_path(params, data)
    n = data.n
    q = params.q
    gamma = params.gamma
    y = data.y.astype(float)
    e, mu = path.e, path.mu

    c = _seed_matrix(data, e, q, mode)
    d = c.shape[1]
    gamma_offset = {"full": params.p_plus_1, "gamma": 0, "beta": None}[mode]
    has_gamma = mode != "beta" and q > 0

    dw = np.empty((n, d))
    need_d2 = want_hessian and not drop_w_curvature and q > 0
    ring = np.zeros((q, d, d)) if need_d2 else None  # d2W_{t-1} .. d2W_{t-q}
    hess1 = np.zeros((d, d)) if want_hessian else None
    resid = y - mu

    for t in range(n):
        m = min(q, t)
        dwt = c[t].copy()
        for j in range(1, m + 1):
            dwt -= gamma[j - 1] * (1.0 + e[t - j]) * dw[t - j]
        dw[t] = dwt

        if not want_hessian:
            continue
        if need_d2:
            d2t = np.zeros((d, d))
            if has_gamma:
                for lag in range(1, m + 1):
                    v = -(1.0 + e[t - lag]) * dw[t - lag]
                    gi = gamma_offset + lag - 1
                    d2t[gi, :] += v
                    d2t[:, gi] += v
            for j in range(1, m + 1):
                a = gamma[j - 1] * (1.0 + e[t - j])
                d2t += a * (np.outer(dw[t - j], dw[t - j]) - ring[(t - j) % q])
            hess1 += resid[t] * d2t
            ring[t % q] = d2t

    value = float(np.sum(y * path.w - mu))
    grad = dw.T @ resid

    hess = None
    asym = 0.0
    if want_hessian:
        hess = hess1 - (dw * mu[:, None]).T @ dw
        scale = max(1.0, float(np.max(np.abs(hess))))
        asym = float(np.max(np.abs(hess - hess.T))) / scale
        hess = 0.5 * (hess + hess.T)

    return LikelihoodEval(
        value=value, grad=grad, hess=hess, dw=dw, hess_asymmetry=asym
    )


def log_likelihood(params: GlarmaParams, data: SeriesData) -> float:
    """L(delta) = sum_t (Y_t W_t - exp(W_t))."""
    path = compute_state_path(params, data)
    return float(np.sum(data.y * path.w - path.mu))


def gradient(params: GlarmaParams, data: SeriesData) -> np.ndarray:
    """Exact gradient over (beta_0..beta_p, gamma_1..gamma_q)."""
    return evaluate(params, data, mode="full", want_hessian=False).grad


def hessian(
    params: GlarmaParams, data: SeriesData, drop_w_curvature: bool = False
) -> np.ndarray:
    """Exact symmetric Hessian over (beta, gamma)."""
    return evaluate(
        params, data, mode="full", drop_w_curvature=drop_w_curvature
    ).hess


def beta_block(params: GlarmaParams, data: SeriesData):
    """Beta-restricted gradient and negated beta-Hessian block.

    Returned as sub-blocks of the full-coordinate evaluation, so they match
    ``gradient``/``hessian`` output exactly. The negation makes the
    curvature matrix positive semidefinite at or near a maximum.
    """
    ev = evaluate(params, data, mode="full")
    P = params.p_plus_1
    grad_beta = ev.grad[:P].copy()
    neg_hess_beta = -ev.hess[:P, :P]
    if not (np.all(np.isfinite(grad_beta)) and np.all(np.isfinite(neg_hess_beta))):
        raise NonFiniteCurvature("beta gradient/Hessian block is not finite")
    return grad_beta, neg_hess_beta


def gamma_block(params: GlarmaParams, data: SeriesData):
    """Gamma-restricted gradient and Hessian, via the autonomous recursion.

    Cheap compared to the full evaluation (dimension q instead of p+1+q);
    used by the ARMA-part Newton iterations.
    """
    ev = evaluate(params, data, mode="gamma")
    return ev.grad, ev.hess
