"""Hybrid Raman/EDFA wideband link modeling and throughput optimization."""

from .config import (
    AmplifierSpec,
    ChannelGrid,
    ConvergenceError,
    FibreSpec,
    NliSettings,
    NumericalError,
    PumpSpec,
    RangeError,
    ScenarioConfig,
    SolverSettings,
    ValidationError,
    attenuation_at,
    build_channel_grid,
    load_scenario,
    raman_gain_at,
)
from .raman import (
    PropagationResult,
    SpanSolution,
    kappa,
    propagate_link,
    relax_backward_pumps,
    solve_span,
)
from .nli import (
    NliResult,
    accumulate_nli,
    nli_power,
    nli_spectrum,
    normalized_profile,
    snr_nli,
)
from .budget import (
    LinkEvaluation,
    LinkResult,
    edfa_ase,
    edfa_gain,
    evaluate_link,
    hybrid_ase,
    snr_total,
    throughput,
)
from .pso import (
    OptimizationProblem,
    PsoParams,
    evaluate_candidate,
    optimize,
)

__version__ = "0.1.0"

__all__ = [
    "AmplifierSpec",
    "ChannelGrid",
    "ConvergenceError",
    "FibreSpec",
    "LinkEvaluation",
    "LinkResult",
    "NliResult",
    "NliSettings",
    "NumericalError",
    "OptimizationProblem",
    "PropagationResult",
    "PsoParams",
    "PumpSpec",
    "RangeError",
    "ScenarioConfig",
    "SolverSettings",
    "SpanSolution",
    "ValidationError",
    "accumulate_nli",
    "attenuation_at",
    "build_channel_grid",
    "edfa_ase",
    "edfa_gain",
    "evaluate_candidate",
    "evaluate_link",
    "hybrid_ase",
    "kappa",
    "load_scenario",
    "nli_power",
    "nli_spectrum",
    "normalized_profile",
    "optimize",
    "propagate_link",
    "raman_gain_at",
    "relax_backward_pumps",
    "snr_nli",
    "snr_total",
    "solve_span",
    "throughput",
]
