"""Counterfactual measurement toolkit.

Two halves:

* an exact discrete engine for probability-valued counterfactuals
  ("supposabilities") over finite scenarios, including the Bell-CHSH
  worked example (:mod:`cfq.discrete`);
* a continuous-monitoring pipeline for a resonantly driven two-level atom
  that computes the counterfactual homodyne expectation ("suspectation")
  curve via quantum trajectories, ostensible-measure Monte Carlo with
  weighted resampling, two-sided weak values, and a Fokker-Planck
  cross-check (:mod:`cfq.qubit`, :mod:`cfq.trajectories`,
  :mod:`cfq.smoothing`, :mod:`cfq.fpe`).

Hot loops live in :mod:`cfq.kernels` with numba and pure-numpy backends
selected by the ``CFQ_NUMBA`` environment variable.
"""

from .errors import (
    CausalViolationError,
    CfqError,
    ConditioningError,
    DegenerateEnsembleError,
    InputError,
    OstensibleSupportError,
    QueryError,
    UnsupportedRegimeError,
    ValidationError,
)
from .discrete import (
    Query,
    Scenario,
    chsh_behavior,
    chsh_scenario,
    scenario_from_json,
    supposability,
    supposability_terms,
)
from .qubit import SimParams
from .trajectories import EnsembleResult, homodyne_ensemble, jump_ensemble, substream
from .smoothing import (
    OstensibleRate,
    SuspectationCurve,
    WeightedEnsemble,
    build_ostensible_ensemble,
    conditioned_jump_rate,
    ostensible_rate,
    resample,
    resampled_records,
    suspectation_curve,
)
from .fpe import (
    FpeParams,
    ThetaPdf,
    characteristic_record_protocol,
    fpe_evolve,
    gaussian_init,
    monte_carlo_theta_distribution,
    positive_mass,
)

__version__ = "0.1.0"

__all__ = [
    "CausalViolationError",
    "CfqError",
    "ConditioningError",
    "DegenerateEnsembleError",
    "EnsembleResult",
    "FpeParams",
    "InputError",
    "OstensibleRate",
    "OstensibleSupportError",
    "Query",
    "QueryError",
    "Scenario",
    "SimParams",
    "SuspectationCurve",
    "ThetaPdf",
    "UnsupportedRegimeError",
    "ValidationError",
    "WeightedEnsemble",
    "build_ostensible_ensemble",
    "characteristic_record_protocol",
    "chsh_behavior",
    "chsh_scenario",
    "conditioned_jump_rate",
    "fpe_evolve",
    "gaussian_init",
    "homodyne_ensemble",
    "jump_ensemble",
    "monte_carlo_theta_distribution",
    "ostensible_rate",
    "positive_mass",
    "resample",
    "resampled_records",
    "scenario_from_json",
    "substream",
    "supposability",
    "supposability_terms",
    "suspectation_curve",
]
