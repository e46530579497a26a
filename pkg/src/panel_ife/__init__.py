"""Projection-based interactive fixed effects estimation for panel data."""

from .basis import (
    BasisFamily,
    BasisMatrix,
    BasisSpec,
    KnotRule,
    Projector,
    build_basis,
    build_projector,
    evaluate_basis_row,
    sieve_dimension,
)
from .baselines import PcIfeFit, pc_ife_confidence_interval, pc_ife_estimate, pooled_ols
from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_beta, residualize_panel
from .data import (
    CovariateAverages,
    PanelData,
    compute_time_averages,
    load_panel_csv,
    write_panel_csv,
)
from .estimator import (
    FactorFit,
    PifeFit,
    estimate_beta,
    estimate_factors,
    evaluate_g,
    loading_decomposition_norms,
    select_num_factors,
)
from .simulation import (
    CoverageMethod,
    DgpConfig,
    McResult,
    Scenario,
    SimulatedPanel,
    generate,
    run_coverage_study,
    run_monte_carlo,
)

__version__ = "0.1.0"

__all__ = [
    "BasisFamily", "BasisMatrix", "BasisSpec", "KnotRule", "Projector",
    "build_basis", "build_projector", "evaluate_basis_row", "sieve_dimension",
    "PcIfeFit", "pc_ife_confidence_interval", "pc_ife_estimate", "pooled_ols",
    "BootstrapConfig", "BootstrapResult", "bootstrap_beta", "residualize_panel",
    "CovariateAverages", "PanelData", "compute_time_averages",
    "load_panel_csv", "write_panel_csv",
    "FactorFit", "PifeFit", "estimate_beta", "estimate_factors", "evaluate_g",
    "loading_decomposition_norms", "select_num_factors",
    "CoverageMethod", "DgpConfig", "McResult", "Scenario", "SimulatedPanel",
    "generate", "run_coverage_study", "run_monte_carlo",
]
