"""Breakable-membrane measurement model on the simplex.

A measurement stretches an elastic structure over the simplex of
outcome weights; it breaks at a random point and collapses the state to
a vertex. The package computes collapse probabilities for a family of
breaking-point densities, verifies by exact enumeration that the
uniform average over all cellular structures reproduces the uniform
(Born-rule) measurement, and measures how controlled measurements
respond to state perturbations.
"""

from .density import (
    BallComplement,
    Cellular1DDensity,
    CellularGridDensity,
    CellularMask,
    CentroidNeighborhood,
    ControlRegion,
    Density,
    DiracMixtureDensity,
    IntervalControl,
    NotAnalyticError,
    PredicateControl,
    TruncatedDensity,
    TruncatedUniformDensity,
    UniformDensity,
    cellular_approximation,
    density_from_spec,
    truncate,
)
from .montecarlo import (
    TransitionEstimate,
    estimate,
    estimate_universal,
    substream,
    wilson_interval,
)
from .quantum import QuantumState, born_probabilities, to_simplex_state
from .robustness import (
    DiracLimitReport,
    RobustnessReport,
    dirac_limit_demo,
    perturb_state,
    robustness_sweep,
)
from .simplex import (
    BarycentricState,
    OutsideSimplexError,
    RegionLabel,
    classify_batch,
    from_internal_coords,
    hull_membership,
    region_of,
    simplex_measure,
    to_internal_coords,
)
from .universal import (
    ElasticConfiguration1D,
    RecurrenceReport,
    binomial_identity_a,
    binomial_identity_b,
    identity_report,
    recurrence_step_check,
    theorem_report,
    transition_probability_1d,
    universal_average_1d,
    universal_average_abstract,
)

__version__ = "0.1.0"

__all__ = [
    "BallComplement",
    "BarycentricState",
    "Cellular1DDensity",
    "CellularGridDensity",
    "CellularMask",
    "CentroidNeighborhood",
    "ControlRegion",
    "Density",
    "DiracLimitReport",
    "DiracMixtureDensity",
    "ElasticConfiguration1D",
    "IntervalControl",
    "NotAnalyticError",
    "OutsideSimplexError",
    "PredicateControl",
    "QuantumState",
    "RecurrenceReport",
    "RegionLabel",
    "RobustnessReport",
    "TransitionEstimate",
    "TruncatedDensity",
    "TruncatedUniformDensity",
    "UniformDensity",
    "binomial_identity_a",
    "binomial_identity_b",
    "born_probabilities",
    "cellular_approximation",
    "classify_batch",
    "density_from_spec",
    "dirac_limit_demo",
    "estimate",
    "estimate_universal",
    "from_internal_coords",
    "hull_membership",
    "identity_report",
    "perturb_state",
    "recurrence_step_check",
    "region_of",
    "robustness_sweep",
    "simplex_measure",
    "substream",
    "theorem_report",
    "to_internal_coords",
    "to_simplex_state",
    "transition_probability_1d",
    "truncate",
    "universal_average_1d",
    "universal_average_abstract",
    "wilson_interval",
    "__version__",
]
