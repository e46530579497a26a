"""Sieve basis construction and orthogonal projection operators.

Each covariate's time average is affinely rescaled to [-1, 1] before the
basis functions are evaluated; the projection is invariant to this
reparameterization, but raw polynomials of higher order are numerically
hazardous without it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.interpolate
import scipy.linalg

from .data import CovariateAverages
from .exceptions import DegenerateCovariateError, InputError, RankDeficientBasisWarning


class BasisFamily(str, Enum):
    POLYNOMIAL = "polynomial"
    BSPLINE = "bspline"


class KnotRule(str, Enum):
    QUANTILE = "quantile"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class BasisSpec:
    """Sieve family and dimension J per covariate."""

    family: BasisFamily = BasisFamily.POLYNOMIAL
    j_per_covariate: int = 2
    bspline_degree: int = 3
    knot_rule: KnotRule = KnotRule.QUANTILE

    def __post_init__(self):
        object.__setattr__(self, "family", BasisFamily(self.family))
        object.__setattr__(self, "knot_rule", KnotRule(self.knot_rule))
        if self.j_per_covariate < 1:
            raise InputError("j_per_covariate must be >= 1")
        if self.family is BasisFamily.BSPLINE:
            if self.bspline_degree < 1:
                raise InputError("bspline_degree must be >= 1")
            if self.j_per_covariate < self.bspline_degree + 1:
                raise InputError("BSpline requires j_per_covariate >= bspline_degree + 1")

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "j_per_covariate": self.j_per_covariate,
            "bspline_degree": self.bspline_degree,
            "knot_rule": self.knot_rule.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(**{k: d[k] for k in ("family", "j_per_covariate", "bspline_degree", "knot_rule") if k in d})


def sieve_dimension(n_units: int, preset: str = "sim") -> int:
    """Named J rules: 'sim' = max(ceil(N^(1/3)/1.5), 2); 'empirical' = floor(N^(1/3))."""
    croot = n_units ** (1.0 / 3.0)
    if preset == "sim":
        return max(math.ceil(croot / 1.5 - 1e-9), 2)
    if preset == "empirical":
        return int(math.floor(croot + 1e-9))
    raise InputError(f"unknown J preset {preset!r}")


@dataclass(frozen=True)
class BasisMatrix:
    """Evaluated N x (J*Q) basis matrix with the scaling needed to re-evaluate it."""

    phi: np.ndarray
    column_layout: tuple[tuple[int, int], ...]  # (q, ell) per column
    scaling: np.ndarray                         # (Q, 2) of (lo, hi) per covariate
    spec: BasisSpec
    knots: tuple[np.ndarray, ...] = field(default=())  # per covariate, BSpline only

    @property
    def n_columns(self) -> int:
        return self.phi.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.scaling.shape[0]


def _rescale(col: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return 2.0 * (col - lo) / (hi - lo) - 1.0


def _knot_vector(z: np.ndarray, spec: BasisSpec) -> np.ndarray:
    deg = spec.bspline_degree
    n_interior = spec.j_per_covariate - deg - 1
    if n_interior > 0:
        if spec.knot_rule is KnotRule.QUANTILE:
            probs = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
            interior = np.quantile(z, probs)
            if np.any(np.diff(interior) <= 0):
                interior = np.linspace(-1.0, 1.0, n_interior + 2)[1:-1]
        else:
            interior = np.linspace(-1.0, 1.0, n_interior + 2)[1:-1]
    else:
        interior = np.empty(0)
    return np.concatenate([np.full(deg + 1, -1.0), interior, np.full(deg + 1, 1.0)])


def _eval_block(z: np.ndarray, spec: BasisSpec, knots: np.ndarray | None) -> np.ndarray:
    """Evaluate J basis functions at rescaled points z."""
    j = spec.j_per_covariate
    if spec.family is BasisFamily.POLYNOMIAL:
        return np.column_stack([z ** ell for ell in range(1, j + 1)])
    dm = scipy.interpolate.BSpline.design_matrix(
        z, knots, spec.bspline_degree, extrapolate=True
    )
    return np.asarray(dm.todense())


def build_basis(xbar: CovariateAverages | np.ndarray, spec: BasisSpec) -> BasisMatrix:
    """Evaluate the sieve basis at the covariate time averages."""
    xb = xbar.xbar if isinstance(xbar, CovariateAverages) else np.asarray(xbar, float)
    if xb.ndim != 2:
        raise InputError("xbar must be an N x Q matrix")
    n, q = xb.shape
    j = spec.j_per_covariate
    if n < j:
        warnings.warn(
            f"N={n} < J={j}: basis block cannot have full column rank",
            RankDeficientBasisWarning,
        )
    scaling = np.empty((q, 2))
    blocks = []
    knots_per_cov: list[np.ndarray] = []
    for qi in range(q):
        col = xb[:, qi]
        lo, hi = float(col.min()), float(col.max())
        if hi - lo <= 0.0:
            raise DegenerateCovariateError(qi)
        scaling[qi] = (lo, hi)
        z = _rescale(col, lo, hi)
        knots = _knot_vector(z, spec) if spec.family is BasisFamily.BSPLINE else None
        if knots is not None:
            knots_per_cov.append(knots)
        blocks.append(_eval_block(z, spec, knots))
    phi = np.hstack(blocks)
    layout = tuple((qi, ell) for qi in range(q) for ell in range(1, j + 1))
    return BasisMatrix(
        phi=phi,
        column_layout=layout,
        scaling=scaling,
        spec=spec,
        knots=tuple(knots_per_cov),
    )


def evaluate_basis_row(x: np.ndarray, basis: BasisMatrix) -> tuple[np.ndarray, bool]:
    """Evaluate the basis at a new Q-vector using the stored scaling.

    Returns the (J*Q)-vector and an out-of-range flag; out-of-range points are
    extrapolated, not rejected.
    """
    x = np.atleast_1d(np.asarray(x, float))
    if x.shape != (basis.n_covariates,):
        raise InputError(f"expected a {basis.n_covariates}-vector")
    out_of_range = False
    pieces = []
    for qi in range(basis.n_covariates):
        lo, hi = basis.scaling[qi]
        z = _rescale(np.array([x[qi]]), lo, hi)
        if z[0] < -1.0 or z[0] > 1.0:
            out_of_range = True
        knots = basis.knots[qi] if basis.spec.family is BasisFamily.BSPLINE else None
        pieces.append(_eval_block(z, basis.spec, knots)[0])
    return np.concatenate(pieces), out_of_range


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto span(Phi), realized via thin pivoted QR.

    The explicit N x N matrix is never formed; P v = Q_r (Q_r^T v).
    """

    q_r: np.ndarray  # N x rank orthonormal columns
    rank: int
    method: str = "qr"

    @property
    def n(self) -> int:
        return self.q_r.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """P v, columnwise for matrices."""
        v = np.asarray(v, float)
        if self.rank == 0:
            return np.zeros_like(v)
        return self.q_r @ (self.q_r.T @ v)

    def annihilate(self, v: np.ndarray) -> np.ndarray:
        """(I - P) v, columnwise for matrices."""
        v = np.asarray(v, float)
        if self.rank == 0:
            return v.copy()
        return v - self.q_r @ (self.q_r.T @ v)


def build_projector(phi: BasisMatrix | np.ndarray) -> Projector:
    """Build P onto span(Phi); rank-deficient columns dropped at 1e-10*||Phi||."""
    mat = phi.phi if isinstance(phi, BasisMatrix) else np.asarray(phi, float)
    if mat.ndim != 2:
        raise InputError("phi must be a matrix")
    norm = np.linalg.norm(mat)
    if norm == 0.0:
        return Projector(q_r=np.zeros((mat.shape[0], 0)), rank=0)
    q, r, _ = scipy.linalg.qr(mat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > 1e-10 * norm))
    return Projector(q_r=np.ascontiguousarray(q[:, :rank]), rank=rank)
