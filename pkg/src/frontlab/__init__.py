"""frontlab: certify and simulate blocking versus propagation of bistable
reaction-diffusion fronts under a compactly supported drift term."""

from .nonlinearity import (
    Nonlinearity,
    BlockingConstants,
    make_cubic,
    make_from_table,
    eval_F,
    eval_F0,
    validate,
    blocking_constants,
)
from .drift import (
    DriftTerm,
    CriterionReport,
    make_mollified_indicator,
    make_sharp_indicator,
    make_bump_drift,
    make_table_drift,
    zero_drift,
    weight_psi,
    concentration_integral,
    blocking_criterion,
    propagation_bound,
)
from .wave import WaveProfile, solve_wave, decay_constants
from .supersolution import (
    StationarySupersolution,
    SupersolutionReport,
    NonConvergence,
    MinimizerEscaped,
    TailNotDecaying,
    functional_J,
    h1_psi_norm,
    reference_ramp,
    solve_w_R,
    continue_to_minus_infinity,
    verify_supersolution,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_config,
    apply_overrides,
)
from .simulator import (
    Grid1D,
    SimState,
    Stepper,
    RunReport,
    RunResult,
    EnvelopeConstants,
    StabilityViolation,
    BlowUp,
    NoCrossing,
    GridTooNarrow,
    default_grid,
    init_from_wave,
    step,
    front_position,
    left_tail_check,
    classify,
    envelope_lower,
    envelope_upper,
    lyapunov,
    appendix_bounds,
    run_simulation,
)

__all__ = [
    "Nonlinearity", "BlockingConstants", "make_cubic", "make_from_table",
    "eval_F", "eval_F0", "validate", "blocking_constants",
    "DriftTerm", "CriterionReport", "make_mollified_indicator",
    "make_sharp_indicator", "make_bump_drift", "make_table_drift",
    "zero_drift", "weight_psi", "concentration_integral",
    "blocking_criterion", "propagation_bound",
    "WaveProfile", "solve_wave", "decay_constants",
    "StationarySupersolution", "SupersolutionReport", "NonConvergence",
    "MinimizerEscaped", "TailNotDecaying", "functional_J", "h1_psi_norm",
    "reference_ramp", "solve_w_R", "continue_to_minus_infinity",
    "verify_supersolution",
    "ConfigError", "ExperimentConfig", "load_config", "parse_config",
    "apply_overrides",
    "Grid1D", "SimState", "Stepper", "RunReport", "RunResult",
    "EnvelopeConstants", "StabilityViolation", "BlowUp", "NoCrossing",
    "GridTooNarrow", "default_grid", "init_from_wave", "step",
    "front_position", "left_tail_check", "classify", "envelope_lower",
    "envelope_upper", "lyapunov", "appendix_bounds", "run_simulation",
]

__version__ = "0.1.0"
