"""Maximum-likelihood logistic regression via iteratively reweighted least
squares.

All per-observation arithmetic lives in numba kernels with explicit loops:
no BLAS calls, so results are bit-identical regardless of thread pools or
how the surrounding benchmark distributes work over processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import ColumnMismatch, DegenerateOutcome, LengthMismatch
from ..mathutil import expit, logit


@dataclass(frozen=True)
class LogisticConfig:
    tol: float = 1e-8        # converged iff max |score| < tol * n
    max_iter: int = 35
    ridge: float = 1e-12     # jitter on the normal-equation diagonal


@dataclass(frozen=True)
class LogisticModel:
    intercept: float
    coef: np.ndarray          # one slope per fit-time column
    converged: bool
    n_iter: int

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return _linear_predictor(np.ascontiguousarray(X, dtype=np.float64),
                                 self.intercept, np.ascontiguousarray(self.coef))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.coef.shape[0]:
            raise ColumnMismatch(
                f"model has {self.coef.shape[0]} slopes, got {X.shape[1]} columns")
        return expit(self.linear_predictor(X))


@njit(cache=True)
def _linear_predictor(X, b0, coef):
    n, p = X.shape
    eta = np.empty(n)
    for i in range(n):
        s = b0
        for j in range(p):
            s += X[i, j] * coef[j]
        eta[i] = s
    return eta


@njit(cache=True)
def _scalar_expit(t):
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def _nll(X, y, b0, coef):
    """Negative Bernoulli log-likelihood (sum over rows)."""
    n, p = X.shape
    total = 0.0
    for i in range(n):
        eta = b0
        for j in range(p):
            eta += X[i, j] * coef[j]
        # -log lik of one row: log(1 + exp(eta)) - y*eta, stable form
        if eta > 0.0:
            total += eta + np.log1p(np.exp(-eta)) - y[i] * eta
        else:
            total += np.log1p(np.exp(eta)) - y[i] * eta
    return total


@njit(cache=True)
def _chol_solve(H, g):
    """Solve H x = g for symmetric positive-definite H, in place.

    Returns False if a pivot is not positive (H not PD at working
    precision)."""
    q = H.shape[0]
    L = np.zeros((q, q))
    for j in range(q):
        s = H[j, j]
        for t in range(j):
            s -= L[j, t] * L[j, t]
        if s <= 0.0:
            return False, g
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, q):
            s = H[i, j]
            for t in range(j):
                s -= L[i, t] * L[j, t]
            L[i, j] = s / L[j, j]
    x = g.copy()
    for i in range(q):
        for t in range(i):
            x[i] -= L[i, t] * x[t]
        x[i] /= L[i, i]
    for i in range(q - 1, -1, -1):
        for t in range(i + 1, q):
            x[i] -= L[t, i] * x[t]
        x[i] /= L[i, i]
    return True, x


@njit(cache=True)
def _irls(X, y, b0_start, tol, max_iter, ridge):
    """Newton/IRLS on the logistic log-likelihood with step halving.

    Returns (b0, coef, converged, n_iter).  Convergence: every component
    of the score vector below tol * n.  On (quasi-)separated data the
    score never reaches the threshold and the best iterate is returned
    with converged = False.
    """
    n, p = X.shape
    q = p + 1
    b0 = b0_start
    coef = np.zeros(p)
    eta = np.empty(n)
    resid = np.empty(n)
    w = np.empty(n)
    g = np.empty(q)
    H = np.empty((q, q))
    nll_cur = _nll(X, y, b0, coef)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        for i in range(n):
            s = b0
            for j in range(p):
                s += X[i, j] * coef[j]
            eta[i] = s
            pi = _scalar_expit(s)
            resid[i] = y[i] - pi
            wi = pi * (1.0 - pi)
            w[i] = wi if wi > 1e-10 else 1e-10
        # score
        gmax = 0.0
        for j in range(q):
            s = 0.0
            if j == 0:
                for i in range(n):
                    s += resid[i]
            else:
                for i in range(n):
                    s += X[i, j - 1] * resid[i]
            g[j] = s
            if abs(s) > gmax:
                gmax = abs(s)
        if gmax < tol * n:
            converged = True
            break
        # weighted Gram of [1 X]
        for a in range(q):
            for b in range(a, q):
                s = 0.0
                if a == 0 and b == 0:
                    for i in range(n):
                        s += w[i]
                elif a == 0:
                    for i in range(n):
                        s += w[i] * X[i, b - 1]
                else:
                    for i in range(n):
                        s += w[i] * X[i, a - 1] * X[i, b - 1]
                H[a, b] = s
                H[b, a] = s
        dmax = H[0, 0]
        for a in range(1, q):
            if H[a, a] > dmax:
                dmax = H[a, a]
        jit = ridge * (1.0 if dmax < 1.0 else dmax)
        ok = False
        delta = g
        for _ in range(8):
            for a in range(q):
                H[a, a] += jit
            ok, delta = _chol_solve(H, g)
            if ok:
                break
            jit *= 1e4
        if not ok:
            break
        # step halving against the exact objective
        step = 1.0
        improved = False
        for _ in range(12):
            b0_try = b0 + step * delta[0]
            coef_try = coef + step * delta[1:]
            nll_try = _nll(X, y, b0_try, coef_try)
            if nll_try <= nll_cur + 1e-10:
                b0 = b0_try
                coef = coef_try
                nll_cur = nll_try
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return b0, coef, converged, it


def fit_logistic(X: np.ndarray, y: np.ndarray,
                 config: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """Fit an (unpenalized) logistic regression of ``y`` on the columns of
    ``X`` plus an intercept.

    Raises :class:`DegenerateOutcome` when ``y`` is constant.  Separated or
    otherwise non-converged fits return the best iterate with
    ``converged=False``.  An empty ``X`` (zero columns) yields the exact
    intercept-only maximum-likelihood fit.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise LengthMismatch("X rows and y length differ")
    if X.shape[0] < 2:
        raise ValueError("need at least two observations")
    ybar = float(y.mean())
    if ybar <= 0.0 or ybar >= 1.0:
        raise DegenerateOutcome("outcome vector is constant")
    if X.shape[1] == 0:
        return LogisticModel(float(logit(ybar)), np.zeros(0), True, 0)
    b0, coef, converged, it = _irls(X, y, float(logit(ybar)),
                                    config.tol, config.max_iter, config.ridge)
    return LogisticModel(float(b0), coef, bool(converged), int(it))


def logistic_nll_grad(X: np.ndarray, y: np.ndarray, b0: float,
                      coef: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact negative log-likelihood and its gradient in (b0, coef).

    Reference implementation for gradient checking; not on the hot path.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eta = b0 + X @ coef
    nll = float(np.sum(np.logaddexp(0.0, eta) - y * eta))
    r = expit(eta) - y
    grad = np.concatenate(([r.sum()], X.T @ r))
    return nll, grad


def binomial_deviance(y: np.ndarray, p: np.ndarray, eps: float = 1e-10) -> float:
    """Mean binomial deviance, -2/n * sum of Bernoulli log-likelihoods."""
    y = np.asarray(y, dtype=np.float64).ravel()
    p = np.asarray(p, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise LengthMismatch("y and p must have equal length")
    p = np.clip(p, eps, 1.0 - eps)
    return float(-2.0 * np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
