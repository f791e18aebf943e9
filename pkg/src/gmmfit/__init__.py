"""gmmfit: proper, agnostic univariate mixture fitting at desk scale.

The pipeline: estimate a piecewise-polynomial density from samples, then
fit a shape-restricted mixture approximant to the estimate under an
interval norm, enumerating component-to-interval allocations so the search
stays well-conditioned at every scale.
"""

from .ak import SignRunDecomposition, ak_brute_force, ak_distance, ak_norm, sign_runs
from .density import (
    DegenerateDataError,
    DensityEstimate,
    estimate_density,
    read_samples_csv,
    rescale_to_unit,
    write_samples_csv,
)
from .estimators import MixtureLearner, PiecewiseDensityEstimator
from .learn import (
    Allocation,
    FitReport,
    InfeasibleError,
    LearnConfig,
    enumerate_allocations,
    find_fit_given_allocation,
    learn,
    learn_family,
    learn_gmm,
    learn_well_behaved,
)
from .mixtures import (
    AdmissibilityConstants,
    MixtureParams,
    RescaledComponent,
    RescaledParams,
    central_interval,
    family_approximant,
    family_pdf,
    is_admissible,
    l1_distance,
    l1_to_piecewise,
    pdf,
    precision_bound,
    sample,
)
from .piecewise import PiecewisePolynomial, Polynomial
from .shapes import (
    ShapePolyConfig,
    mixture_approx,
    pw_gaussian_approx,
    rescaled_component,
    rescaled_mixture_approx,
    taylor_gaussian,
)
from .solver import FitProblem, SolveConfig, SolveResult, feasibility_solve
from .system import DomainBox, PolySystem, encode_system, export_system, parse_export

__all__ = [
    "AdmissibilityConstants",
    "Allocation",
    "DegenerateDataError",
    "DensityEstimate",
    "DomainBox",
    "FitProblem",
    "FitReport",
    "InfeasibleError",
    "LearnConfig",
    "MixtureLearner",
    "MixtureParams",
    "PiecewiseDensityEstimator",
    "PiecewisePolynomial",
    "PolySystem",
    "Polynomial",
    "RescaledComponent",
    "RescaledParams",
    "ShapePolyConfig",
    "SignRunDecomposition",
    "SolveConfig",
    "SolveResult",
    "ak_brute_force",
    "ak_distance",
    "ak_norm",
    "central_interval",
    "encode_system",
    "enumerate_allocations",
    "estimate_density",
    "export_system",
    "family_approximant",
    "family_pdf",
    "feasibility_solve",
    "find_fit_given_allocation",
    "is_admissible",
    "l1_distance",
    "l1_to_piecewise",
    "learn",
    "learn_family",
    "learn_gmm",
    "learn_well_behaved",
    "mixture_approx",
    "parse_export",
    "pdf",
    "precision_bound",
    "pw_gaussian_approx",
    "read_samples_csv",
    "rescale_to_unit",
    "rescaled_component",
    "rescaled_mixture_approx",
    "sample",
    "sign_runs",
    "taylor_gaussian",
    "write_samples_csv",
]

__version__ = "0.1.0"
