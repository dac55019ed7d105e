"""SVD-transformed pseudo-regression and the l1-penalized solver.

Around an expansion point (beta0, gamma_hat), the log-likelihood restricted
to beta is replaced by its second-order Taylor model. With g the beta
gradient, and U diag(lam) U' the eigendecomposition of the negated beta
Hessian (the SVD of a symmetric PSD matrix), minus the model equals, up to
a beta-free constant,

    (1/2) || Y - X beta ||^2,
    X = diag(sqrt(lam)) U',
    Y = X beta0 + diag(1/sqrt(lam)) U' g,

so the sparse estimator solves  min_beta (1/2)||Y - X beta||^2 + lambda
||beta||_1 by cyclic coordinate descent with soft thresholding.  The
intercept coordinate is penalized by default, matching the l1 norm summed
from k = 0; ``penalize_intercept=False`` exempts it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import likelihood
from .errors import DegenerateProblem, IndefiniteHessian, NoConvergence
from .model import GlarmaParams, SeriesData

DEFAULT_MAX_SWEEPS = 100_000
# convergence: max coordinate change below SWEEP_TOL * (1 + ||beta||_inf)
SWEEP_TOL = 1e-9
EIGENVALUE_FLOOR_REL = 1e-10
DEFAULT_GRID_COUNT = 100
DEFAULT_GRID_RATIO = 1e-4
WIDE_GRID_RATIO = 1e-2


def _cd_sweeps(X, y, lam_vec, beta, col_norms, max_sweeps, tol, kkt_tol):
    """Cyclic coordinate-descent sweeps; mutates beta, returns (sweeps, ok).

    Stops when the largest coordinate change in a sweep drops below
    tol * (1 + ||beta||_inf). Fits that have not converged after 1000
    sweeps are usually sliding along a nearly flat valley of an
    underdetermined problem; from there on (kkt_tol > 0, checked every
    tenth sweep) a KKT violation within kkt_tol also counts as converged,
    since the iterate is already optimal to within the return contract.
    """
    n, d = X.shape
    r = y.copy()
    for j in range(d):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        max_delta = 0.0
        max_abs = 0.0
        for j in range(d):
            cj = col_norms[j]
            if cj <= 0.0:
                # dead column: l1 term alone forces zero when penalized
                if lam_vec[j] > 0.0:
                    beta[j] = 0.0
                continue
            bj = beta[j]
            rho = cj * bj
            for i in range(n):
                rho += X[i, j] * r[i]
            lam = lam_vec[j]
            if rho > lam:
                bnew = (rho - lam) / cj
            elif rho < -lam:
                bnew = (rho + lam) / cj
            else:
                bnew = 0.0
            diff = bnew - bj
            if diff != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * diff
                beta[j] = bnew
            if abs(diff) > max_delta:
                max_delta = abs(diff)
            if abs(beta[j]) > max_abs:
                max_abs = abs(beta[j])
        if max_delta < tol * (1.0 + max_abs):
            return sweeps, True
        if kkt_tol > 0.0 and sweeps >= 1000 and sweeps % 10 == 0:
            worst = 0.0
            for j in range(d):
                corr = 0.0
                for i in range(n):
                    corr += X[i, j] * r[i]
                if beta[j] != 0.0:
                    sign = 1.0 if beta[j] > 0.0 else -1.0
                    viol = abs(corr - lam_vec[j] * sign)
                else:
                    viol = abs(corr) - lam_vec[j]
                if viol > worst:
                    worst = viol
            if worst <= kkt_tol:
                return sweeps, True
    return sweeps, False


def _max_abs_col_dot(X, y):
    """max_j |X_j' y| with the same summation order as the CD kernel.

    Keeps the lambda_max convention exactly consistent with the solver, so
    a fit at lambda >= lambda_max returns the all-zero vector bit for bit.
    """
    n, d = X.shape
    out = 0.0
    for j in range(d):
        s = 0.0
        for i in range(n):
            s += X[i, j] * y[i]
        if abs(s) > out:
            out = abs(s)
    return out


try:  # pragma: no cover - exercised implicitly when numba is installed
    import numba

    _cd_sweeps = numba.njit(cache=True)(_cd_sweeps)
    _max_abs_col_dot = numba.njit(cache=True)(_max_abs_col_dot)
except ImportError:  # pragma: no cover
    pass


@dataclass
class PseudoProblem:
    """Transformed least-squares problem of dimension (p+1) x (p+1).

    lambda_diag holds the floored curvature eigenvalues, nonincreasing;
    dropped lists the positions that were raised to the floor.
    """

    Y: np.ndarray
    X: np.ndarray
    U: np.ndarray
    lambda_diag: np.ndarray
    dropped: np.ndarray

    @property
    def dim(self) -> int:
        return self.Y.size


@dataclass
class LassoFit:
    """Solution of the penalized pseudo-regression at one lambda."""

    beta: np.ndarray
    lam: float
    objective: float
    kkt_violation: float
    sweeps: int = 0


def pseudo_from_curvature(
    beta0: np.ndarray, grad_beta: np.ndarray, neg_hess_beta: np.ndarray
) -> PseudoProblem:
    """Assemble the transformed problem from an explicit curvature pair."""
    beta0 = np.asarray(beta0, dtype=float)
    vals, vecs = np.linalg.eigh(neg_hess_beta)
    order = np.argsort(-vals, kind="stable")  # nonincreasing, ties keep eigh order
    vals, vecs = vals[order], vecs[:, order]
    top = vals[0]
    if not np.isfinite(top) or top <= 0.0:
        raise IndefiniteHessian("negated beta-Hessian has no positive curvature")
    if vals[-1] < -0.01 * top:
        raise IndefiniteHessian(
            f"most negative eigenvalue {vals[-1]:.3g} below -0.01 * {top:.3g}; "
            "the expansion point is far from a maximum"
        )
    floor = EIGENVALUE_FLOOR_REL * top
    dropped = np.flatnonzero(vals < floor)
    lam_diag = np.maximum(vals, floor)
    root = np.sqrt(lam_diag)
    X = root[:, None] * vecs.T
    Y = X @ beta0 + (vecs.T @ grad_beta) / root
    return PseudoProblem(Y=Y, X=X, U=vecs, lambda_diag=lam_diag, dropped=dropped)


def build_pseudo_problem(
    beta0: np.ndarray, gamma_hat: np.ndarray, data: SeriesData
) -> PseudoProblem:
    """Evaluate the beta gradient/curvature at (beta0, gamma_hat) and transform."""
    params = GlarmaParams(beta=np.asarray(beta0, dtype=float), gamma=gamma_hat)
    grad_beta, neg_hess_beta = likelihood.beta_block(params, data)
    return pseudo_from_curvature(params.beta, grad_beta, neg_hess_beta)


def solve_lasso_xy(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    warm: np.ndarray | None = None,
    penalize_intercept: bool = True,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    debug: bool = False,
) -> LassoFit:
    """Coordinate-descent lasso on an explicit (X, y) pair.

    ``debug`` re-runs sweep by sweep and asserts the objective never
    increases (slow; for diagnosis only).
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    d = X.shape[1]
    lam_vec = np.full(d, float(lam))
    if not penalize_intercept:
        lam_vec[0] = 0.0
    beta = np.zeros(d) if warm is None else np.asarray(warm, dtype=float).copy()
    col_norms = np.sum(X * X, axis=0)
    # certified-optimality stop for long-running fits; disabled at lam = 0
    # where the orthogonality contract is stricter
    kkt_tol = 1e-6 if lam > 0 else -1.0

    if debug:
        sweeps, ok = _debug_sweeps(X, y, lam_vec, beta, col_norms, max_sweeps, kkt_tol)
    else:
        sweeps, ok = _cd_sweeps(
            X, y, lam_vec, beta, col_norms, max_sweeps, SWEEP_TOL, kkt_tol
        )
    if not ok:
        raise NoConvergence(f"coordinate descent exceeded {max_sweeps} sweeps")

    resid = y - X @ beta
    corr = X.T @ resid
    viol = np.where(
        beta != 0.0,
        np.abs(corr - lam_vec * np.sign(beta)),
        np.maximum(np.abs(corr) - lam_vec, 0.0),
    )
    objective = 0.5 * float(resid @ resid) + float(lam_vec @ np.abs(beta))
    return LassoFit(
        beta=beta,
        lam=float(lam),
        objective=objective,
        kkt_violation=float(np.max(viol)) if viol.size else 0.0,
        sweeps=sweeps,
    )


def _debug_sweeps(X, y, lam_vec, beta, col_norms, max_sweeps, kkt_tol):
    prev = 0.5 * float((y - X @ beta) @ (y - X @ beta)) + float(
        lam_vec @ np.abs(beta)
    )
    for sweep in range(1, max_sweeps + 1):
        _, ok = _cd_sweeps(X, y, lam_vec, beta, col_norms, 1, SWEEP_TOL, kkt_tol)
        cur = 0.5 * float((y - X @ beta) @ (y - X @ beta)) + float(
            lam_vec @ np.abs(beta)
        )
        assert cur <= prev + 1e-12 * (1.0 + abs(prev)), "objective increased"
        prev = cur
        if ok:
            return sweep, True
    return max_sweeps, False


def lasso_cd(
    prob: PseudoProblem,
    lam: float,
    warm: np.ndarray | None = None,
    penalize_intercept: bool = True,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    debug: bool = False,
) -> LassoFit:
    """Solve min (1/2)||Y - X beta||^2 + lambda ||beta||_1 on the pseudo-problem."""
    return solve_lasso_xy(
        prob.X,
        prob.Y,
        lam,
        warm=warm,
        penalize_intercept=penalize_intercept,
        max_sweeps=max_sweeps,
        debug=debug,
    )


def lambda_max_xy(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which the lasso solution is identically zero."""
    return float(
        _max_abs_col_dot(
            np.ascontiguousarray(X, dtype=float), np.ascontiguousarray(y, dtype=float)
        )
    )


def lambda_grid(
    prob: PseudoProblem,
    count: int = DEFAULT_GRID_COUNT,
    ratio: float = DEFAULT_GRID_RATIO,
) -> np.ndarray:
    """Log-spaced grid from lambda_max down to ratio * lambda_max."""
    if count < 2:
        raise ValueError("count must be >= 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    lam_max = lambda_max_xy(prob.X, prob.Y)
    if not lam_max > 0.0:
        raise DegenerateProblem("lambda_max is zero: X'Y carries no signal")
    return lam_max * ratio ** np.linspace(0.0, 1.0, count)


def cross_validate(
    prob: PseudoProblem,
    grid: np.ndarray,
    k: int = 10,
    seed: int = 0,
    penalize_intercept: bool = True,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
):
    """K-fold cross-validation of lambda over the pseudo-observations.

    Rows are shuffled by a PCG64 generator seeded with ``seed`` and split
    into k folds; the returned lambda minimizes the mean held-out squared
    error (first minimum on ties, i.e. the largest such lambda).
    """
    grid = np.asarray(grid, dtype=float)
    rows = prob.dim
    if k < 2 or k > rows:
        raise ValueError(f"k must be in [2, {rows}]")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(rows)
    folds = np.array_split(perm, k)
    total_sq = np.zeros(grid.size)
    for fold in folds:
        train = np.setdiff1d(perm, fold, assume_unique=True)
        if train.size == 0:
            raise DegenerateProblem("empty training fold")
        Xtr, ytr = prob.X[train], prob.Y[train]
        Xte, yte = prob.X[fold], prob.Y[fold]
        warm = None
        for gi, lam in enumerate(grid):
            fit = solve_lasso_xy(
                Xtr, ytr, lam, warm=warm, penalize_intercept=penalize_intercept,
                max_sweeps=max_sweeps,
            )
            warm = fit.beta
            err = yte - Xte @ fit.beta
            total_sq[gi] += float(err @ err)
    cv_curve = total_sq / rows
    return float(grid[int(np.argmin(cv_curve))]), cv_curve
