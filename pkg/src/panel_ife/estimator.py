"""Slope estimation by partialling out the sieve span, and projected-PCA
recovery of the factor structure from the regression residuals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import (
    BasisMatrix,
    BasisSpec,
    Projector,
    build_basis,
    build_projector,
    evaluate_basis_row,
)
from .data import PanelData, compute_time_averages
from .exceptions import (
    AmbiguousFactorSpaceWarning,
    InputError,
    InvalidFactorCountError,
    SingularDesignError,
)

# Relative singular-value cutoff for declaring the residualized design singular.
_SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class PifeFit:
    """Slope estimate with the residual matrix and projection bookkeeping."""

    beta_hat: np.ndarray          # (Q,)
    residuals: np.ndarray         # (N, T), y - x @ beta_hat
    gram: np.ndarray              # (Q, Q), sum_t X_t' M X_t
    basis: BasisSpec
    projector_rank: int
    basis_matrix: BasisMatrix
    projector: Projector

    def to_dict(self) -> dict:
        return {
            "beta_hat": self.beta_hat.tolist(),
            "residuals": self.residuals.tolist(),
            "gram": self.gram.tolist(),
            "basis": self.basis.to_dict(),
            "projector_rank": self.projector_rank,
        }


@dataclass(frozen=True)
class FactorFit:
    """Recovered factors, sieve coefficients and loading decomposition."""

    k: int
    f_hat: np.ndarray        # (T, K), F'F/T = I
    b_hat: np.ndarray        # (J*Q, K)
    lambda_hat: np.ndarray   # (N, K)
    g_hat: np.ndarray        # (N, K), covariate-explained part
    gamma_hat: np.ndarray    # (N, K), idiosyncratic part
    eigenvalues: np.ndarray  # descending spectrum of residuals' projected gram

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "f_hat": self.f_hat.tolist(),
            "b_hat": self.b_hat.tolist(),
            "lambda_hat": self.lambda_hat.tolist(),
            "g_hat": self.g_hat.tolist(),
            "gamma_hat": self.gamma_hat.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }


def _annihilate_panel(panel: PanelData, projector: Projector):
    n, t, q = panel.x.shape
    y_dot = projector.annihilate(panel.y)
    x_dot = projector.annihilate(panel.x.reshape(n, t * q)).reshape(n, t, q)
    return y_dot, x_dot


def _pooled_solve(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least squares with an explicit near-singularity check."""
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= _SINGULAR_RTOL * s[0]:
        direction = vt[-1]
        raise SingularDesignError(
            "residualized design is numerically singular; "
            f"near-null direction {np.round(direction, 6).tolist()}",
            null_direction=direction,
        )
    return vt.T @ ((u.T @ target) / s)


def estimate_beta(panel: PanelData, spec: BasisSpec) -> PifeFit:
    """Pooled least squares on the annihilated data across all periods."""
    n, t, q = panel.x.shape
    xbar = compute_time_averages(panel)
    basis = build_basis(xbar, spec)
    projector = build_projector(basis)
    if n <= basis.n_columns:
        warnings.warn(
            f"N={n} <= J*Q={basis.n_columns}: projection may absorb the design",
            UserWarning,
        )
    y_dot, x_dot = _annihilate_panel(panel, projector)
    design = x_dot.reshape(n * t, q)
    beta = _pooled_solve(design, y_dot.reshape(n * t))
    residuals = panel.y - panel.x @ beta
    return PifeFit(
        beta_hat=beta,
        residuals=residuals,
        gram=design.T @ design,
        basis=spec,
        projector_rank=projector.rank,
        basis_matrix=basis,
        projector=projector,
    )


def _fix_signs(f: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive."""
    f = f.copy()
    for k in range(f.shape[1]):
        idx = int(np.argmax(np.abs(f[:, k])))
        if f[idx, k] < 0:
            f[:, k] = -f[:, k]
    return f


def _projected_spectrum(residuals: np.ndarray, projector: Projector):
    """Eigendecomposition of the T x T projected residual gram matrix."""
    t = residuals.shape[1]
    py = projector.apply(residuals)
    a = residuals.T @ py / t
    a = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    # spectrum of the unnormalized matrix residuals' P residuals
    eigenvalues = np.clip(vals[order] * t, 0.0, None)
    return eigenvalues, vecs[:, order], py


def estimate_factors(fit: PifeFit, projector: Projector, k: int) -> FactorFit:
    """Projected PCA on the residual matrix, for a given number of factors."""
    residuals = fit.residuals
    n, t = residuals.shape
    if k < 1 or k >= t:
        raise InvalidFactorCountError(f"k={k} must satisfy 1 <= k < T={t}")
    if k >= projector.rank:
        warnings.warn(
            f"k={k} >= projector rank {projector.rank}: factor space underdetermined",
            UserWarning,
        )
    eigenvalues, vecs, py = _projected_spectrum(residuals, projector)
    if k < len(eigenvalues) and abs(eigenvalues[k - 1] - eigenvalues[k]) <= 1e-10 * max(eigenvalues[0], 1e-300):
        warnings.warn(
            f"eigenvalue tie at the k={k} boundary; factor space ambiguous",
            AmbiguousFactorSpaceWarning,
        )
    f_hat = _fix_signs(np.sqrt(t) * vecs[:, :k])
    lambda_hat = residuals @ f_hat / t
    g_hat = py @ f_hat / t
    gamma_hat = lambda_hat - g_hat
    phi = fit.basis_matrix.phi
    b_hat, *_ = np.linalg.lstsq(phi, residuals @ f_hat / t, rcond=None)
    return FactorFit(
        k=k,
        f_hat=f_hat,
        b_hat=b_hat,
        lambda_hat=lambda_hat,
        g_hat=g_hat,
        gamma_hat=gamma_hat,
        eigenvalues=eigenvalues,
    )


def evaluate_g(factor_fit: FactorFit, basis: BasisMatrix, x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Evaluate the covariate-to-loading functions at a new Q-vector."""
    row, out_of_range = evaluate_basis_row(x, basis)
    return row @ factor_fit.b_hat, out_of_range


def select_num_factors(fit: PifeFit, projector: Projector, j: int, q: int) -> tuple[int, np.ndarray]:
    """Pick the factor count maximizing consecutive eigenvalue ratios."""
    k_max = int(np.ceil(j * q / 2)) - 1
    if k_max < 1:
        raise InputError(f"J*Q/2 must exceed 1 (J={j}, Q={q})")
    eigenvalues, _, _ = _projected_spectrum(fit.residuals, projector)
    k_max = min(k_max, len(eigenvalues) - 1)
    lam = eigenvalues
    top = max(lam[0], 1e-300)
    ratios = np.empty(k_max)
    k_hat = None
    for k in range(1, k_max + 1):
        if lam[k] < 1e-12 * top:
            # degenerate tail: the last strictly positive k wins
            ratios[k - 1:] = np.inf
            warnings.warn("eigenvalue tail numerically zero in the search range", UserWarning)
            k_hat = k
            break
        ratios[k - 1] = lam[k - 1] / lam[k]
    if k_hat is None:
        k_hat = int(np.argmax(ratios)) + 1
    return k_hat, ratios


def loading_decomposition_norms(factor_fit: FactorFit) -> tuple[float, float, float, float]:
    """Frobenius and max-abs norms of the explained and idiosyncratic loadings."""
    g, gam = factor_fit.g_hat, factor_fit.gamma_hat
    return (
        float(np.linalg.norm(g)),
        float(np.max(np.abs(g))) if g.size else 0.0,
        float(np.linalg.norm(gam)),
        float(np.max(np.abs(gam))) if gam.size else 0.0,
    )
