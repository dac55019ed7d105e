"""Initial GLM fit and Newton-Raphson maximization of the log-likelihood.

Newton steps maximize L, so the update solves the negated Hessian system:
``x_new = x + (-H)^{-1} g``.  With damping enabled, a step that lowers L is
halved (up to a cap), then retried once on a ridged system; an accepted step
therefore never decreases L.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import likelihood
from .errors import NoConvergence, OverflowGuard, SingularSystem
from .model import GlarmaParams, SeriesData


@dataclass
class NewtonConfig:
    """Stopping and safeguarding knobs for the Newton loops."""

    max_iter: int = 100
    tol_inf: float = 1e-6
    damping: bool = True
    max_halvings: int = 20
    ridge: float = 1e-8

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol_inf <= 0:
            raise ValueError("tol_inf must be positive")


@dataclass
class NewtonReport:
    """Outcome of a Newton run.

    trajectory holds one (estimate, L) pair per accepted iterate, starting
    with the initial point.
    """

    estimate: np.ndarray
    iterations: int
    converged: bool
    trajectory: list = field(default_factory=list)


def fit_glm_init(
    data: SeriesData, max_iter: int = 100, tol: float = 1e-10
) -> np.ndarray:
    """Poisson log-link ML fit of y on x, ignoring the ARMA part.

    Uses iteratively reweighted least squares with step halving. When
    p+1 >= n the fit is ridge-penalized (penalty 1e-3 * n on the squared
    non-intercept coefficients) so the working systems stay solvable.
    """
    y = data.y.astype(float)
    x = data.x
    n, P = x.shape
    ybar = float(np.mean(y))
    if ybar <= 0.0:
        raise NoConvergence("all-zero response has no finite Poisson GLM fit")
    if P == 1:
        return np.array([np.log(ybar)])

    penalized = P >= n
    ridge = 1e-3 * n if penalized else 0.0
    pen_diag = np.full(P, ridge)
    pen_diag[0] = 0.0

    def objective(beta: np.ndarray) -> float:
        eta = x @ beta
        with np.errstate(over="ignore"):
            mu = np.exp(eta)
        val = float(np.sum(y * eta - mu)) - 0.5 * float(pen_diag @ (beta * beta))
        return val if np.isfinite(val) else -np.inf

    beta = np.zeros(P)
    beta[0] = np.log(ybar)
    obj = objective(beta)
    for _ in range(max_iter):
        eta = x @ beta
        mu = np.exp(np.clip(eta, -700, 700))
        wgt = np.maximum(mu, 1e-10)
        z = eta + (y - mu) / wgt
        lhs = x.T @ (wgt[:, None] * x)
        lhs[np.diag_indices_from(lhs)] += pen_diag
        try:
            beta_new = np.linalg.solve(lhs, x.T @ (wgt * z))
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"IRLS system is singular: {exc}") from exc

        step = beta_new - beta
        if float(np.max(np.abs(step))) < tol:
            return beta_new
        # float-level objective dribble at convergence must not count as a
        # decrease, hence the relative slack
        slack = 1e-12 * (1.0 + abs(obj))
        obj_new = objective(beta_new)
        halved = 0
        while obj_new < obj - slack and halved < 20:
            step *= 0.5
            beta_new = beta + step
            obj_new = objective(beta_new)
            halved += 1
        if obj_new < obj - slack:
            raise NoConvergence(
                "IRLS cannot improve the fit (possible separation)"
            )
        delta = float(np.max(np.abs(beta_new - beta)))
        beta, obj = beta_new, max(obj_new, obj)
        if delta < tol:
            return beta
    raise NoConvergence(f"IRLS did not converge in {max_iter} iterations")


def _finite_eval(ev) -> bool:
    value, grad, hess = ev
    return (
        np.isfinite(value)
        and bool(np.all(np.isfinite(grad)))
        and bool(np.all(np.isfinite(hess)))
    )


def _newton_loop(eval_fn, x0: np.ndarray, cfg: NewtonConfig) -> NewtonReport:
    """Shared damped-Newton driver over an arbitrary coordinate block.

    A step is accepted only if the likelihood does not decrease (modulo a
    tolerance-sized slack for float-level dribble at the optimum) and the
    derivatives at the new point are finite; otherwise the step is halved
    and, failing that, recomputed from increasingly ridged systems (a large
    ridge bends the direction toward the gradient, always an ascent
    direction).
    """
    x = np.asarray(x0, dtype=float).copy()
    d = x.size
    current = eval_fn(x)
    if not _finite_eval(current):
        raise OverflowGuard("derivatives are not finite at the starting point")
    value, grad, hess = current
    trajectory = [(x.copy(), value)]
    converged = False
    iterations = 0

    for _ in range(cfg.max_iter):
        iterations += 1
        neg_hess = -hess
        step = _solve_newton_system(neg_hess, grad, cfg.ridge)
        slack = 1e-12 * (1.0 + abs(value))
        scale = cfg.ridge * (1.0 + abs(float(np.trace(neg_hess))) / d)
        accepted = None
        for attempt in range(8):
            trial = step.copy()
            for _halving in range(cfg.max_halvings + 1):
                candidate = x + trial
                try:
                    cand = eval_fn(candidate)
                except OverflowGuard:
                    cand = None
                if cand is not None and _finite_eval(cand):
                    if not cfg.damping or cand[0] >= value - slack:
                        accepted = (candidate, trial, cand)
                        break
                trial = trial * 0.5
            if accepted is not None:
                break
            ridge = scale * 100.0**attempt
            try:
                step = np.linalg.solve(neg_hess + ridge * np.eye(d), grad)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(step)):
                continue
        if accepted is None:
            raise NoConvergence("Newton line search found no ascent step")
        x, taken, (value, grad, hess) = accepted
        trajectory.append((x.copy(), value))
        if float(np.max(np.abs(taken))) < cfg.tol_inf:
            converged = True
            break

    return NewtonReport(
        estimate=x, iterations=iterations, converged=converged, trajectory=trajectory
    )


def _solve_newton_system(neg_hess: np.ndarray, grad: np.ndarray, ridge: float):
    """Solve (-H) step = grad, ridging once; structurally singular -> error."""
    d = grad.size
    try:
        step = np.linalg.solve(neg_hess, grad)
        if np.all(np.isfinite(step)):
            return step
    except np.linalg.LinAlgError:
        pass
    if np.linalg.matrix_rank(neg_hess) < d:
        raise SingularSystem(
            f"Newton system of dimension {d} is rank deficient"
        )
    amount = ridge * (1.0 + abs(float(np.trace(neg_hess))) / d)
    try:
        step = np.linalg.solve(neg_hess + amount * np.eye(d), grad)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"ridged Newton system still singular: {exc}") from exc
    if not np.all(np.isfinite(step)):
        raise SingularSystem("Newton step is not finite after ridging")
    return step


def newton_gamma(
    beta0: np.ndarray,
    data: SeriesData,
    q: int,
    cfg: NewtonConfig | None = None,
    gamma0: np.ndarray | None = None,
) -> NewtonReport:
    """Newton-Raphson over the ARMA coefficients at fixed beta.

    Starts from the null vector unless ``gamma0`` is given. Only the
    gamma-restricted gradient/Hessian recursion is evaluated, so the cost
    per iteration is independent of p.
    """
    if q < 1:
        raise ValueError("newton_gamma requires q >= 1")
    beta0 = np.asarray(beta0, dtype=float)
    cfg = cfg or NewtonConfig()
    start = np.zeros(q) if gamma0 is None else np.asarray(gamma0, dtype=float).copy()

    def eval_fn(gamma):
        ev = likelihood.evaluate(
            GlarmaParams(beta=beta0, gamma=gamma), data, mode="gamma"
        )
        return ev.value, ev.grad, ev.hess

    return _newton_loop(eval_fn, start, cfg)


def newton_full(
    delta0: GlarmaParams, data: SeriesData, cfg: NewtonConfig | None = None
) -> NewtonReport:
    """Newton-Raphson over the full parameter vector delta = (beta, gamma).

    This is the classical one-stage GLARMA estimation baseline; the report
    estimate is the stacked (beta, gamma) vector.
    """
    cfg = cfg or NewtonConfig()
    q = delta0.q

    def eval_fn(vec):
        ev = likelihood.evaluate(GlarmaParams.from_vector(vec, q), data, mode="full")
        return ev.value, ev.grad, ev.hess

    return _newton_loop(eval_fn, delta0.as_vector(), cfg)
