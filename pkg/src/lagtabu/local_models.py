"""Per-node conditional models: Gaussian OLS and ridge-stabilised IRLS logistic regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DesignMatrix, InadmissibleCandidate

SIGMA2_FLOOR = 1e-12
PROB_CLAMP = 1e-12

IRLS_MAX_ITER = 25
IRLS_TOL = 1e-8
IRLS_RIDGE = 1e-8


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    log_likelihood: float
    param_count: int
    n_used: int
    converged: bool = True
    iterations: int = 0
    loglik_path: tuple[float, ...] = ()


def gaussian_loglik(residuals: np.ndarray, sigma2: float) -> float:
    n = residuals.shape[0]
    return -0.5 * n * np.log(2.0 * np.pi * sigma2) - 0.5 * float(residuals @ residuals) / sigma2


def fit_ols(dm: DesignMatrix) -> FitResult:
    """Least-squares fit with the MLE variance RSS/n.

    The returned parameter count includes the variance term.
    """
    X, y = dm.rows, dm.response
    n, p = X.shape
    if n < p:
        raise InadmissibleCandidate(f"n={n} < p={p}")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        raise InadmissibleCandidate(f"rank-deficient design (rank {rank} < {p})")
    resid = y - X @ beta
    rss = float(resid @ resid)
    sigma2 = max(rss / n, SIGMA2_FLOOR)
    # at the MLE this equals -(n/2)(log(2 pi sigma2) + 1); the general form keeps the floor honest
    ll = gaussian_loglik(resid, sigma2)
    return FitResult(beta, float(ll), p + 1, n, True, 1)


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def bernoulli_loglik(y: np.ndarray, eta: np.ndarray) -> float:
    mu = np.clip(_sigmoid(eta), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(np.sum(y * np.log(mu) + (1.0 - y) * np.log1p(-mu)))


def fit_logistic_irls(dm: DesignMatrix, max_iter: int = IRLS_MAX_ITER,
                      tol: float = IRLS_TOL, ridge: float = IRLS_RIDGE) -> FitResult:
    """Logistic regression by iteratively reweighted least squares.

    Each iteration forms eta = X b, mu = sigmoid(eta), W = mu (1 - mu),
    z = eta + (y - mu) / W and solves (X'WX + ridge I) b = X'Wz. Stops when
    the largest coefficient change drops below ``tol``.
    """
    X, y = dm.rows, dm.response
    n, p = X.shape
    if n < p:
        raise InadmissibleCandidate(f"n={n} < p={p}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("logistic response must be 0/1")
    beta = np.zeros(p)
    ridge_eye = ridge * np.eye(p)
    path = [bernoulli_loglik(y, X @ beta)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = X @ beta
        mu = np.clip(_sigmoid(eta), PROB_CLAMP, 1.0 - PROB_CLAMP)
        w = mu * (1.0 - mu)
        z = eta + (y - mu) / w
        sw = np.sqrt(w)
        Xw = X * sw[:, None]
        A = Xw.T @ Xw + ridge_eye
        b = Xw.T @ (sw * z)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InadmissibleCandidate("non-finite IRLS system")
        try:
            new_beta = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            raise InadmissibleCandidate("singular IRLS system") from None
        step = float(np.max(np.abs(new_beta - beta)))
        beta = new_beta
        path.append(bernoulli_loglik(y, X @ beta))
        if step < tol:
            converged = True
            break
    ll = path[-1]
    if not np.isfinite(ll):
        raise InadmissibleCandidate("non-finite logistic log-likelihood")
    return FitResult(beta, ll, p, n, converged, it, tuple(path))
