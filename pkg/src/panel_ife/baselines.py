"""Comparison estimators: pooled OLS and the iterative principal-components
interactive fixed effects estimator with plug-in asymptotic confidence
intervals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .data import PanelData
from .exceptions import InputError, NotConvergedError, SingularDesignError


def _lstsq_checked(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= 1e-10 * s[0]:
        raise SingularDesignError("design matrix is numerically rank deficient")
    return vt.T @ ((u.T @ target) / s)


def pooled_ols(panel: PanelData) -> np.ndarray:
    """OLS of the stacked outcomes on the stacked covariates, no intercept."""
    n, t, q = panel.x.shape
    return _lstsq_checked(panel.x.reshape(n * t, q), panel.y.reshape(n * t))


@dataclass(frozen=True)
class PcIfeFit:
    """Converged (or stalled) state of the alternating least squares fit."""

    beta_hat: np.ndarray      # (Q,)
    f_hat: np.ndarray         # (T, K)
    lambda_hat: np.ndarray    # (N, K)
    iterations: int
    converged: bool
    sigma2_hat: float
    d_hat: np.ndarray         # (Q, Q)
    cov_beta: np.ndarray      # (Q, Q)
    ssr_path: tuple[float, ...] = field(default=(), repr=False)


def _top_factors(w: np.ndarray, k: int) -> np.ndarray:
    """sqrt(T) times the top-k eigenvectors of W'W, sign-normalized."""
    t = w.shape[1]
    a = w.T @ w
    a = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1][:k]
    f = np.sqrt(t) * vecs[:, order]
    for kk in range(f.shape[1]):
        idx = int(np.argmax(np.abs(f[:, kk])))
        if f[idx, kk] < 0:
            f[:, kk] = -f[:, kk]
    return f


def _annihilate_by_factors(panel: PanelData, f: np.ndarray):
    """Apply M_F = I - FF'/T along the time dimension of y and x."""
    n, t, q = panel.x.shape
    if f.shape[1] == 0:
        return panel.y.copy(), panel.x.copy()
    yf = panel.y @ f / t                       # (N, K)
    y_p = panel.y - yf @ f.T
    xf = np.einsum("ntq,tk->nkq", panel.x, f) / t
    x_p = panel.x - np.einsum("nkq,tk->ntq", xf, f)
    return y_p, x_p


def pc_ife_estimate(panel: PanelData, k: int, tol: float = 1e-6,
                    max_iter: int = 1000) -> PcIfeFit:
    """Alternate between slope-given-factors and factors-given-slope.

    k = 0 disables the factor term and reduces exactly to pooled OLS.
    """
    n, t, q = panel.x.shape
    if k < 0 or k >= min(n, t):
        raise InputError(f"k={k} must satisfy 0 <= k < min(N, T)")
    beta = pooled_ols(panel)
    f = np.zeros((t, 0))
    ssr_path: list[float] = []
    converged = k == 0
    iterations = 0
    if k > 0:
        for iterations in range(1, max_iter + 1):
            w = panel.y - panel.x @ beta
            f = _top_factors(w, k)
            y_p, x_p = _annihilate_by_factors(panel, f)
            beta_new = _lstsq_checked(x_p.reshape(n * t, q), y_p.reshape(n * t))
            ssr_path.append(float(np.sum((y_p - np.einsum("ntq,q->nt", x_p, beta_new)) ** 2)))
            if np.max(np.abs(beta_new - beta)) < tol:
                beta = beta_new
                converged = True
                break
            beta = beta_new

    w = panel.y - panel.x @ beta
    if k > 0:
        f = _top_factors(w, k)
    lam = w @ f / t if k > 0 else np.zeros((n, 0))
    u = w - lam @ f.T

    # Conservative sandwich covariance: the outer moment uses the raw
    # regressors, the inner (information) moment removes the unit-specific
    # component of the factor-annihilated regressors that the loadings can
    # absorb.  The residual variance carries the factor-model DOF correction.
    dof = n * t - k * (n + t) - q + k * k
    if dof <= 0:
        raise InputError(f"k={k} leaves no residual degrees of freedom")
    sigma2 = float(np.sum(u ** 2)) / dof
    y_p, x_p = _annihilate_by_factors(panel, f)
    z = x_p - x_p.mean(axis=1, keepdims=True)
    d_hat = np.einsum("itq,itp->qp", z, z) / (n * t)
    s_outer = np.einsum("itq,itp->qp", panel.x, panel.x) / (n * t)
    d_inv = np.linalg.inv(d_hat)
    cov_beta = sigma2 * (d_inv @ s_outer @ d_inv) / (n * t)
    cov_beta = 0.5 * (cov_beta + cov_beta.T)
    return PcIfeFit(
        beta_hat=beta,
        f_hat=f,
        lambda_hat=lam,
        iterations=iterations,
        converged=converged,
        sigma2_hat=sigma2,
        d_hat=d_hat,
        cov_beta=cov_beta,
        ssr_path=tuple(ssr_path),
    )


def pc_ife_confidence_interval(fit: PcIfeFit, level: float) -> list[tuple[float, float]]:
    """Simultaneous (Scheffe-style) plug-in intervals per coefficient.

    The critical value is the chi-square quantile with Q degrees of freedom,
    so the Q intervals hold jointly at the requested level; per-coordinate
    coverage is conservative by construction.
    """
    if not fit.converged:
        raise NotConvergedError("PC-IFE fit did not converge; intervals unavailable")
    if not 0.0 < level < 1.0:
        raise InputError("level must be in (0, 1)")
    q = fit.beta_hat.shape[0]
    crit = np.sqrt(scipy.stats.chi2.ppf(level, df=q))
    se = np.sqrt(np.clip(np.diag(fit.cov_beta), 0.0, None))
    return [(float(b - crit * s), float(b + crit * s)) for b, s in zip(fit.beta_hat, se)]
