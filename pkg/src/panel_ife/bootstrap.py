"""Cross-sectional bootstrap confidence intervals for the slope estimate.

The panel is residualized against the basis span once; bootstrap replicates
then resample whole units (their entire time series) with replacement from
the residualized data.  The basis is deliberately NOT rebuilt per draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Projector
from .data import PanelData
from .exceptions import InputError, SingularDesignError, TooManySingularDrawsError
from .rng import substream

# A resampled gram matrix above this condition number counts as a failed draw.
_MAX_COND = 1e12
_MAX_RETRIES = 64


@dataclass(frozen=True)
class BootstrapConfig:
    n_replicates: int = 999
    level: float = 0.95
    seed: int = 0
    linear_combinations: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.n_replicates < 1:
            raise InputError("n_replicates must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise InputError("level must be in (0, 1)")


@dataclass(frozen=True)
class BootstrapResult:
    beta_hat: np.ndarray                       # (Q,)
    replicates: np.ndarray                     # (B, Q)
    intervals: tuple[tuple[float, float], ...]
    quantiles: np.ndarray                      # (Q,), half-widths q_j
    combo_intervals: tuple[tuple[float, float], ...] = ()
    combo_quantiles: tuple[float, ...] = ()
    n_redrawn: int = 0
    level: float = 0.95

    def to_dict(self) -> dict:
        return {
            "beta_hat": self.beta_hat.tolist(),
            "replicates": self.replicates.tolist(),
            "intervals": [list(iv) for iv in self.intervals],
            "quantiles": self.quantiles.tolist(),
            "combo_intervals": [list(iv) for iv in self.combo_intervals],
            "combo_quantiles": list(self.combo_quantiles),
            "n_redrawn": self.n_redrawn,
            "level": self.level,
        }


def residualize_panel(panel: PanelData, projector: Projector):
    """Project y and every covariate off the basis span, once, pre-resampling."""
    n, t, q = panel.x.shape
    y_dot = projector.annihilate(panel.y)
    x_dot = projector.annihilate(panel.x.reshape(n, t * q)).reshape(n, t, q)
    return y_dot, x_dot


def empirical_halfwidth(deviations: np.ndarray, level: float) -> float:
    """Upper order statistic at 1-based index ceil(level * B)."""
    b = len(deviations)
    idx = int(np.ceil(level * b)) - 1
    return float(np.sort(deviations)[idx])


def bootstrap_beta(y_dot: np.ndarray, x_dot: np.ndarray,
                   config: BootstrapConfig) -> BootstrapResult:
    """Resample units with replacement and collect pooled-OLS replicates."""
    n, t, q = x_dot.shape
    grams = np.einsum("itq,itp->iqp", x_dot, x_dot)   # per-unit X_i' X_i
    moments = np.einsum("itq,it->iq", x_dot, y_dot)   # per-unit X_i' y_i
    g_full = grams.sum(axis=0)
    if np.linalg.cond(g_full) > _MAX_COND:
        raise SingularDesignError("residualized design is singular")
    beta_hat = np.linalg.solve(g_full, moments.sum(axis=0))

    b_total = config.n_replicates
    replicates = np.empty((b_total, q))
    n_redrawn = 0
    for b in range(b_total):
        for retry in range(_MAX_RETRIES):
            rng = substream(config.seed, b, retry)
            idx = rng.integers(0, n, size=n)
            gb = grams[idx].sum(axis=0)
            if np.linalg.cond(gb) <= _MAX_COND:
                replicates[b] = np.linalg.solve(gb, moments[idx].sum(axis=0))
                break
            n_redrawn += 1
        else:
            raise TooManySingularDrawsError(f"replicate {b}: no nonsingular draw found")
    if n_redrawn > 0.05 * (b_total + n_redrawn):
        raise TooManySingularDrawsError(
            f"{n_redrawn} of {b_total + n_redrawn} bootstrap draws were singular"
        )

    deviations = np.abs(replicates - beta_hat)
    quantiles = np.array([empirical_halfwidth(deviations[:, j], config.level)
                          for j in range(q)])
    intervals = tuple((float(beta_hat[j] - quantiles[j]), float(beta_hat[j] + quantiles[j]))
                      for j in range(q))
    combo_intervals = []
    combo_quantiles = []
    for v in config.linear_combinations:
        v = np.asarray(v, float)
        if v.shape != (q,):
            raise InputError(f"linear combination must be a {q}-vector")
        dev = np.abs((replicates - beta_hat) @ v)
        qv = empirical_halfwidth(dev, config.level)
        center = float(v @ beta_hat)
        combo_quantiles.append(qv)
        combo_intervals.append((center - qv, center + qv))
    return BootstrapResult(
        beta_hat=beta_hat,
        replicates=replicates,
        intervals=intervals,
        quantiles=quantiles,
        combo_intervals=tuple(combo_intervals),
        combo_quantiles=tuple(combo_quantiles),
        n_redrawn=n_redrawn,
        level=config.level,
    )
