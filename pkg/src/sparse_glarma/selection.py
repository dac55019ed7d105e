"""Selection strategies over the pseudo-problem.

Three stability flavors plus two plain-lasso baselines:

* ``ss_cv`` / ``ss_min``: pick one lambda (by cross-validation, or the
  smallest grid element), refit the lasso on many random half-size row
  subsamples, and keep coefficients whose selection frequency clears a
  threshold.
* ``fast_ss``: fit the lasso once per grid lambda and count how often each
  coefficient is nonzero along the path.
* ``lasso_cv`` / ``lasso_best``: single lasso fits, at the cross-validated
  lambda or at the grid lambda maximizing TPR - FPR against a known true
  support (benchmark-only oracle).

Final coefficients are unpenalized refits on the selected support, since
they feed the next pipeline iteration and shrunken values would bias the
next Newton step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingOracle, SubsampleTooSmall
from .quad_lasso import (
    DEFAULT_GRID_COUNT,
    DEFAULT_GRID_RATIO,
    PseudoProblem,
    cross_validate,
    lambda_grid,
    lasso_cd,
    solve_lasso_xy,
)

STANDARD_METHODS = ("ss_cv", "ss_min")
FAST_METHODS = ("fast_ss",)
BASELINE_METHODS = ("lasso_cv", "lasso_best")
ALL_METHODS = STANDARD_METHODS + FAST_METHODS + BASELINE_METHODS

# trade-off thresholds at the 5% sparsity operating point
DEFAULT_THRESHOLDS = {"ss_cv": 0.7, "ss_min": 0.8, "fast_ss": 0.4}

# Subsampled problems at the smallest grid lambda occasionally need a few
# hundred thousand sweeps; the larger internal budget keeps those rare fits
# from aborting a whole selection run (~9 us per sweep, so the worst case
# stays under ten seconds).
SUBSAMPLE_MAX_SWEEPS = 1_000_000


@dataclass
class SelectionConfig:
    method: str
    threshold: float | None = None  # None -> per-method default
    n_subsamples: int = 1000
    grid_count: int = DEFAULT_GRID_COUNT
    grid_ratio: float | None = None  # None -> DEFAULT_GRID_RATIO
    cv_folds: int = 10
    seed: int = 0
    penalize_intercept: bool = True

    def __post_init__(self):
        if self.method not in ALL_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.n_subsamples < 1:
            raise ValueError("n_subsamples must be >= 1")

    def resolved_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return DEFAULT_THRESHOLDS.get(self.method, 0.0)

    def resolved_ratio(self) -> float:
        return DEFAULT_GRID_RATIO if self.grid_ratio is None else self.grid_ratio


@dataclass
class SelectionResult:
    """Frequencies, thresholded support, and refit coefficients."""

    frequencies: np.ndarray
    support: np.ndarray
    beta_hat: np.ndarray
    lambda_used: float | np.ndarray
    diagnostics: np.ndarray  # integer selection counts per coefficient
    method: str = ""
    threshold: float = 0.0


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def refit_support(prob: PseudoProblem, support) -> np.ndarray:
    """Unpenalized least squares of Y on the support columns (min-norm)."""
    support = np.asarray(sorted(set(int(j) for j in np.atleast_1d(support))), dtype=int)
    beta = np.zeros(prob.dim)
    if support.size == 0:
        return beta
    coef, *_ = np.linalg.lstsq(prob.X[:, support], prob.Y, rcond=None)
    beta[support] = coef
    return beta


def _threshold_and_refit(prob, freqs, counts, lam_used, cfg) -> SelectionResult:
    thr = cfg.resolved_threshold()
    support = np.flatnonzero(freqs >= thr)
    if not cfg.penalize_intercept and 0 not in support:
        support = np.union1d(support, [0])
    return SelectionResult(
        frequencies=freqs,
        support=support,
        beta_hat=refit_support(prob, support),
        lambda_used=lam_used,
        diagnostics=counts,
        method=cfg.method,
        threshold=thr,
    )


def _subsample_counts(prob, lam, row_sets, warm, penalize_intercept) -> np.ndarray:
    counts = np.zeros(prob.dim, dtype=np.int64)
    for rows in row_sets:
        fit = solve_lasso_xy(
            prob.X[rows],
            prob.Y[rows],
            lam,
            warm=warm,
            penalize_intercept=penalize_intercept,
            max_sweeps=SUBSAMPLE_MAX_SWEEPS,
        )
        counts += fit.beta != 0.0
    return counts


def select_standard(prob: PseudoProblem, cfg: SelectionConfig) -> SelectionResult:
    """Stability selection at one lambda over random half-size subsamples."""
    if cfg.method not in STANDARD_METHODS:
        raise ValueError(f"select_standard cannot run method {cfg.method!r}")
    grid = lambda_grid(prob, cfg.grid_count, cfg.resolved_ratio())
    cv_seed, sub_seed = _child_seeds(cfg.seed, 2)
    if cfg.method == "ss_cv":
        lam, _ = cross_validate(
            prob,
            grid,
            k=min(cfg.cv_folds, prob.dim),
            seed=cv_seed,
            penalize_intercept=cfg.penalize_intercept,
            max_sweeps=SUBSAMPLE_MAX_SWEEPS,
        )
    else:
        lam = float(grid[-1])

    m = prob.dim // 2
    if m < 2:
        raise SubsampleTooSmall(f"subsample size {m} is too small to fit")
    rng = np.random.Generator(np.random.PCG64(sub_seed))
    row_sets = [
        np.sort(rng.choice(prob.dim, size=m, replace=False))
        for _ in range(cfg.n_subsamples)
    ]
    warm = lasso_cd(
        prob, lam, penalize_intercept=cfg.penalize_intercept,
        max_sweeps=SUBSAMPLE_MAX_SWEEPS,
    ).beta
    counts = _subsample_counts(prob, lam, row_sets, warm, cfg.penalize_intercept)
    freqs = counts / cfg.n_subsamples
    return _threshold_and_refit(prob, freqs, counts, lam, cfg)


def select_fast(prob: PseudoProblem, cfg: SelectionConfig) -> SelectionResult:
    """Frequency of nonzero coefficients along the whole lambda path."""
    if cfg.method not in FAST_METHODS:
        raise ValueError(f"select_fast cannot run method {cfg.method!r}")
    grid = lambda_grid(prob, cfg.grid_count, cfg.resolved_ratio())
    counts = np.zeros(prob.dim, dtype=np.int64)
    warm = None
    for lam in grid:
        fit = lasso_cd(prob, lam, warm=warm, penalize_intercept=cfg.penalize_intercept,
                       max_sweeps=SUBSAMPLE_MAX_SWEEPS)
        warm = fit.beta
        counts += fit.beta != 0.0
    freqs = counts / grid.size
    return _threshold_and_refit(prob, freqs, counts, grid, cfg)


def lasso_baselines(
    prob: PseudoProblem, true_support=None, cfg: SelectionConfig | None = None
) -> SelectionResult:
    """Plain-lasso comparison fits (no thresholding, no refit).

    ``lasso_best`` scans the grid for the lambda maximizing TPR - FPR
    against ``true_support`` and therefore needs the oracle support.
    """
    if cfg is None or cfg.method not in BASELINE_METHODS:
        raise ValueError("cfg.method must be lasso_cv or lasso_best")
    grid = lambda_grid(prob, cfg.grid_count, cfg.resolved_ratio())
    p = prob.dim - 1

    if cfg.method == "lasso_cv":
        cv_seed, _ = _child_seeds(cfg.seed, 2)
        lam, _ = cross_validate(
            prob,
            grid,
            k=min(cfg.cv_folds, prob.dim),
            seed=cv_seed,
            penalize_intercept=cfg.penalize_intercept,
            max_sweeps=SUBSAMPLE_MAX_SWEEPS,
        )
        fit = lasso_cd(prob, lam, penalize_intercept=cfg.penalize_intercept,
                       max_sweeps=SUBSAMPLE_MAX_SWEEPS)
    else:
        if true_support is None:
            raise MissingOracle("lasso_best needs the true support")
        from .bench import tpr_fpr  # deferred: bench imports this module

        truth = set(int(j) for j in true_support)
        best = None
        warm = None
        for lam in grid:
            cand = lasso_cd(prob, lam, warm=warm,
                            penalize_intercept=cfg.penalize_intercept,
                            max_sweeps=SUBSAMPLE_MAX_SWEEPS)
            warm = cand.beta
            est = set(np.flatnonzero(cand.beta).tolist()) - {0}
            tpr, fpr = tpr_fpr(est, truth, p)
            if best is None or tpr - fpr > best[0]:
                best = (tpr - fpr, cand)
        fit = best[1]

    selected = np.flatnonzero(fit.beta)
    indicator = (fit.beta != 0.0).astype(np.int64)
    return SelectionResult(
        frequencies=indicator.astype(float),
        support=selected,
        beta_hat=fit.beta,
        lambda_used=fit.lam,
        diagnostics=indicator,
        method=cfg.method,
        threshold=0.0,
    )
