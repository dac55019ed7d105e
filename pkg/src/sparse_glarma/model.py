"""GLARMA model objects, the forward state recursion, and the seeded simulator.

The observation model for counts ``Y_1..Y_n`` with covariate rows ``x_t``:

    Y_t | past  ~  Poisson(mu_t),      mu_t = exp(W_t),
    W_t = beta' x_t + sum_{j=1}^{min(q, t-1)} gamma_j * E_{t-j},
    E_t = Y_t * exp(-W_t) - 1   for t >= 1,   E_t = 0 for t <= 0.

Formulas throughout the package are documented 1-based (t = 1..n, lags
j = 1..q) while arrays are stored 0-based. Mapping:

    ===================  =========================
    1-based (docs)       0-based (arrays)
    ===================  =========================
    W_t, E_t, mu_t, Y_t  w[t-1], e[t-1], mu[t-1], y[t-1]
    x_{t,k}              x[t-1, k]
    gamma_j              gamma[j-1]
    lag term E_{t-j}     e[t-1-j], absent if t-j <= 0
    ===================  =========================

Randomness: all sampling uses ``numpy.random.Generator`` seeded with PCG64,
so a given seed reproduces the same series bit for bit (numpy pins the
Poisson sampling algorithm per release; the numpy version is recorded in CLI
manifests). Poisson draws use numpy's small-mean multiplication method and
a transformed-rejection method for large means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OverflowGuard

# W_t above this signals divergent parameters: exp(50) ~ 5e21 is far outside
# the range where Poisson sampling and the likelihood are meaningful. Large
# negative W_t is harmless in itself (mu ~ 0, and E_t = -1 exactly whenever
# y_t = 0, as happens at quasi-separated GLM fits), so the lower guard only
# rejects the region where mu_t < 1e-300 and exp(-W_t) overflows.
W_MAX = 50.0
W_MIN = -690.0


@dataclass
class GlarmaParams:
    """Model parameters delta = (beta, gamma).

    beta : regression coefficients, length p+1, intercept first.
    gamma : ARMA feedback coefficients, length q (may be empty).
    """

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        if self.beta.size < 1:
            raise ValueError("beta must have at least the intercept entry")
        if not np.all(np.isfinite(self.beta)) or not np.all(np.isfinite(self.gamma)):
            raise ValueError("parameters must be finite")

    @property
    def p_plus_1(self) -> int:
        return self.beta.size

    @property
    def q(self) -> int:
        return self.gamma.size

    def as_vector(self) -> np.ndarray:
        """Concatenated (beta_0..beta_p, gamma_1..gamma_q)."""
        return np.concatenate([self.beta, self.gamma])

    @classmethod
    def from_vector(cls, delta: np.ndarray, q: int) -> "GlarmaParams":
        delta = np.asarray(delta, dtype=float)
        if q == 0:
            return cls(beta=delta.copy(), gamma=np.empty(0))
        return cls(beta=delta[:-q].copy(), gamma=delta[-q:].copy())


@dataclass
class SeriesData:
    """Observed counts plus covariate matrix.

    y : nonnegative integer counts, length n.
    x : n x (p+1) covariate matrix whose column 0 is all ones.
    """

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y)
        if self.y.ndim != 1 or self.y.size < 1:
            raise ValueError("y must be a nonempty vector")
        if np.any(self.y < 0) or np.any(self.y != np.floor(self.y)):
            raise ValueError("y must contain nonnegative integers")
        self.y = self.y.astype(np.int64)
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 2 or self.x.shape[0] != self.y.size:
            raise ValueError("x must be an n x (p+1) matrix")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("x must be finite")
        if not np.all(self.x[:, 0] == 1.0):
            raise ValueError("column 0 of x must be all ones")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p_plus_1(self) -> int:
        return self.x.shape[1]


@dataclass
class StatePath:
    """Forward-recursion state: w (log-means), e (working residuals), mu."""

    w: np.ndarray
    e: np.ndarray
    mu: np.ndarray


def _check_dims(params: GlarmaParams, data: SeriesData) -> None:
    if params.p_plus_1 != data.p_plus_1:
        raise ValueError(
            f"beta has {params.p_plus_1} entries but x has {data.p_plus_1} columns"
        )


def _regression_term(x: np.ndarray, beta: np.ndarray) -> np.ndarray:
    # Restrict the product to nonzero coefficients so that padding beta with
    # zeros (plus matching covariate columns) leaves results bit-identical.
    nz = np.flatnonzero(beta)
    if nz.size == 0:
        return np.zeros(x.shape[0])
    return x[:, nz] @ beta[nz]


def compute_state_path(params: GlarmaParams, data: SeriesData) -> StatePath:
    """Run the forward recursion for W_t, E_t and mu_t at fixed parameters.

    Raises OverflowGuard when any |W_t| exceeds ``W_CAP``.
    """
    _check_dims(params, data)
    n = data.n
    q = params.q
    gamma = params.gamma
    y = data.y
    xb = _regression_term(data.x, params.beta)

    w = np.empty(n)
    e = np.empty(n)
    mu = np.empty(n)
    for t in range(n):
        wt = xb[t]
        for j in range(1, min(q, t) + 1):
            wt += gamma[j - 1] * e[t - j]
        if not (W_MIN <= wt <= W_MAX):
            raise OverflowGuard(f"W_{t + 1} = {wt:.3g} outside [{W_MIN}, {W_MAX}]")
        w[t] = wt
        mu[t] = np.exp(wt)
        e[t] = y[t] * np.exp(-wt) - 1.0
    return StatePath(w=w, e=e, mu=mu)


def simulate(
    params: GlarmaParams,
    x: np.ndarray,
    n: int,
    seed: int,
    return_path: bool = False,
):
    """Draw a length-n series from the model, sequentially in t.

    Each W_t is built from the residuals of the draws already made, then
    Y_t ~ Poisson(exp(W_t)). Identical seed and inputs give identical output.

    Parameters
    ----------
    params : true model parameters.
    x : n x (p+1) covariate matrix with leading ones column.
    n : series length; must equal ``x.shape[0]``.
    seed : PCG64 seed.
    return_path : also return the internally generated StatePath.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != n:
        raise ValueError("x must have n rows")
    if not np.all(x[:, 0] == 1.0):
        raise ValueError("column 0 of x must be all ones")
    if params.p_plus_1 != x.shape[1]:
        raise ValueError("beta length must match the number of x columns")

    q = params.q
    gamma = params.gamma
    xb = _regression_term(x, params.beta)
    rng = np.random.Generator(np.random.PCG64(seed))

    y = np.empty(n, dtype=np.int64)
    w = np.empty(n)
    e = np.empty(n)
    mu = np.empty(n)
    for t in range(n):
        wt = xb[t]
        for j in range(1, min(q, t) + 1):
            wt += gamma[j - 1] * e[t - j]
        if not (W_MIN <= wt <= W_MAX):
            raise OverflowGuard(f"W_{t + 1} = {wt:.3g} outside [{W_MIN}, {W_MAX}]")
        w[t] = wt
        mu[t] = np.exp(wt)
        y[t] = rng.poisson(mu[t])
        e[t] = y[t] * np.exp(-wt) - 1.0

    data = SeriesData(y=y, x=x)
    if return_path:
        return data, StatePath(w=w, e=e, mu=mu)
    return data
