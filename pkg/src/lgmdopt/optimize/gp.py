"""Gaussian-process surrogate with a Matérn-5/2 ARD kernel.

Inputs are expected on the unit cube and outputs standardised; the prior
mean is zero. Hyper-parameters are the amplitude θ and one length scale per
dimension, fitted by maximising the log marginal likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri, dpotrs
from scipy.optimize import minimize

from numba import njit

from ..errors import IllConditioned

SQRT5 = math.sqrt(5.0)
JITTER_MAX = 1e-4
N_RESTARTS = 16
MAX_ITER = 100
LOG_THETA_BOUNDS = (math.log(1e-2), math.log(1e2))
LOG_LENGTH_BOUNDS = (math.log(1e-2), math.log(1e2))


def matern52(x_i, x_j, theta: float = 1.0, length_scales=1.0) -> float:
    r2 = float(np.sum(((np.asarray(x_i, float) - np.asarray(x_j, float)) / length_scales) ** 2))
    r = math.sqrt(r2)
    return theta * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * math.exp(-SQRT5 * r)


@njit(cache=True)
def _cross_kernel(A, B, theta, inv_ls2):
    n, D = A.shape
    m = B.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            r2 = 0.0
            for d in range(D):
                diff = A[i, d] - B[j, d]
                r2 += diff * diff * inv_ls2[d]
            r = math.sqrt(r2)
            out[i, j] = theta * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * math.exp(-SQRT5 * r)
    return out


def matern52_matrix(A, B, theta: float, length_scales) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    ls = np.broadcast_to(np.asarray(length_scales, dtype=float), (A.shape[1],))
    return _cross_kernel(A, B, float(theta), 1.0 / (ls * ls))


def _cholesky_with_jitter(K, jitter):
    n = len(K)
    while True:
        try:
            return cholesky(K + jitter * np.eye(n), lower=True), jitter
        except LinAlgError:
            # zero jitter means no escalation
            if jitter <= 0 or jitter * 10 > JITTER_MAX * (1 + 1e-9):
                raise IllConditioned(f"kernel matrix not positive definite at jitter {jitter:g}") from None
            jitter *= 10


def _pair_sq_diffs(X):
    """Per-dimension squared differences, shape (D, n, n)."""
    return np.ascontiguousarray(((X[:, None, :] - X[None, :, :]) ** 2).transpose(2, 0, 1))


@njit(cache=True)
def _kernel_and_radial(sq, inv_ls2, theta):
    D, n, _ = sq.shape
    K = np.empty((n, n))
    radial = np.empty((n, n))
    for i in range(n):
        K[i, i] = theta
        radial[i, i] = theta * 5.0 / 3.0
        for j in range(i):
            r2 = 0.0
            for d in range(D):
                r2 += sq[d, i, j] * inv_ls2[d]
            r = math.sqrt(r2)
            e = math.exp(-SQRT5 * r)
            K[i, j] = K[j, i] = theta * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * e
            radial[i, j] = radial[j, i] = theta * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e
    return K, radial


@njit(cache=True)
def _lml_grad(alpha, Kinv_lower, K, radial, sq, inv_ls2):
    D, n, _ = sq.shape
    g = np.zeros(D + 1)
    for i in range(n):
        g[0] += (alpha[i] * alpha[i] - Kinv_lower[i, i]) * K[i, i]
        for j in range(i):
            w = 2.0 * (alpha[i] * alpha[j] - Kinv_lower[i, j])
            g[0] += w * K[i, j]
            wr = w * radial[i, j]
            for d in range(D):
                g[d + 1] += wr * sq[d, i, j] * inv_ls2[d]
    return -0.5 * g


def _neg_lml_and_grad(log_params, X, y, jitter, sq=None):
    theta = math.exp(log_params[0])
    inv_ls2 = np.exp(-2.0 * log_params[1:])
    sq = _pair_sq_diffs(X) if sq is None else sq
    n = len(y)
    K, radial = _kernel_and_radial(sq, inv_ls2, theta)
    eye = np.eye(n)
    while True:
        L, info = dpotrf(K + jitter * eye, lower=1)
        if info == 0:
            break
        if jitter <= 0 or jitter * 10 > JITTER_MAX * (1 + 1e-9):
            return 1e25, np.zeros_like(log_params)
        jitter *= 10
    alpha, _ = dpotrs(L, y, lower=1)
    # only the lower triangles of L and Kinv are meaningful
    Kinv, _ = dpotri(L, lower=1)
    nll = 0.5 * y @ alpha + np.log(np.diag(L)).sum() + 0.5 * n * math.log(2 * math.pi)
    return float(nll), _lml_grad(alpha, Kinv, K, radial, sq, inv_ls2)


@dataclass
class GpModel:
    X: np.ndarray
    y: np.ndarray
    theta: float
    length_scales: np.ndarray
    jitter: float
    L: np.ndarray
    alpha: np.ndarray

    @classmethod
    def from_hyper(cls, X, y, theta, length_scales, jitter=1e-6) -> "GpModel":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        ls = np.broadcast_to(np.asarray(length_scales, dtype=float), (X.shape[1],)).copy()
        K = matern52_matrix(X, X, theta, ls)
        L, jitter = _cholesky_with_jitter(K, jitter)
        return cls(X, y, float(theta), ls, jitter, L, cho_solve((L, True), y))

    def predict(self, Xs) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at the rows of ``Xs``."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        Ks = matern52_matrix(Xs, self.X, self.theta, self.length_scales)
        mean = Ks @ self.alpha
        v = solve_triangular(self.L, Ks.T, lower=True)
        var = np.maximum(self.theta - np.sum(v * v, axis=0), 0.0)
        return mean, np.sqrt(var)


def gp_fit(X, y, jitter: float = 1e-6, rng=None, n_restarts: int = N_RESTARTS, max_iter: int = MAX_ITER) -> GpModel:
    """Fit θ and the length scales by multi-start L-BFGS-B on the log marginal likelihood."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(X) < 2:
        raise ValueError("need at least two observations")
    rng = np.random.default_rng(rng)
    D = X.shape[1]
    bounds = [LOG_THETA_BOUNDS] + [LOG_LENGTH_BOUNDS] * D
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    starts = [np.concatenate([[0.0], np.full(D, math.log(0.3))])]
    starts += [lo + rng.random(D + 1) * (hi - lo) for _ in range(n_restarts - 1)]
    best, best_val = starts[0], np.inf
    sq = _pair_sq_diffs(X)
    for x0 in starts:
        res = minimize(_neg_lml_and_grad, x0, args=(X, y, jitter, sq), jac=True, method="L-BFGS-B",
                       bounds=bounds, options={"maxiter": max_iter})
        if np.isfinite(res.fun) and res.fun < best_val:
            best, best_val = res.x, res.fun
    return GpModel.from_hyper(X, y, math.exp(best[0]), np.exp(best[1:]), jitter)
