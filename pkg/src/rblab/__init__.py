"""Laboratory for threshold-scaled random CSPs.

Generate random instances whose domain size grows as a power of the
variable count, solve them exactly, run Monte-Carlo phase-transition
sweeps, and evaluate the first/second-moment formulas and the
overlap-partition bounds that locate the satisfiability threshold.
"""

from .errors import ConfigError, ParameterError, ParseError, RBError
from .harness import (
    Axis,
    MomentCheck,
    PointResult,
    SweepConfig,
    SweepResult,
    estimate_crossing,
    export_csv,
    moment_empirical_check,
    run_sweep,
    transition_window,
    wilson_interval,
)
from .instances import (
    Assignment,
    Constraint,
    Instance,
    decode_tuple,
    encode_tuple,
    export_cnf_direct,
    generate,
    generate_forced,
    parse,
    serialize,
    validate,
)
from .moments import (
    EffectiveParams,
    EvalMode,
    MomentReport,
    PartitionConfig,
    ThetaProbe,
    VarphiMax,
    WindowReport,
    binomial_slope_bounds,
    default_partition_config,
    digamma,
    effective_params,
    harmonic_gamma_bounds,
    log_first_moment,
    log_ratio_upper_bound,
    log_second_moment,
    partition_config,
    phi_c_log_derivative,
    theta_probe,
    varphi_max,
    w_at_eta1,
    window_lower_bound,
)
from .solver import (
    SolveResult,
    SolverConfig,
    Status,
    brute_force_count,
    check,
    count_solutions,
    solve,
)
from .thresholds import (
    DerivedSizes,
    ModelParams,
    RegimeReport,
    RoundingPolicy,
    derive_sizes,
    f_of_s,
    g_of_s,
    p_critical,
    psi,
    r_critical,
    regime_check,
    round_half_up,
    solve_tau_k,
    u_of_s,
    u_prime,
    varphi,
    zeta,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RBError",
    "ParameterError",
    "ConfigError",
    "ParseError",
    # thresholds
    "ModelParams",
    "DerivedSizes",
    "RegimeReport",
    "RoundingPolicy",
    "round_half_up",
    "derive_sizes",
    "r_critical",
    "p_critical",
    "zeta",
    "solve_tau_k",
    "regime_check",
    "f_of_s",
    "g_of_s",
    "varphi",
    "u_of_s",
    "u_prime",
    "psi",
    # instances
    "Assignment",
    "Constraint",
    "Instance",
    "encode_tuple",
    "decode_tuple",
    "generate",
    "generate_forced",
    "serialize",
    "parse",
    "export_cnf_direct",
    "validate",
    # solver
    "Status",
    "SolverConfig",
    "SolveResult",
    "check",
    "solve",
    "count_solutions",
    "brute_force_count",
    # moments
    "EvalMode",
    "EffectiveParams",
    "MomentReport",
    "PartitionConfig",
    "WindowReport",
    "ThetaProbe",
    "VarphiMax",
    "effective_params",
    "log_first_moment",
    "log_second_moment",
    "log_ratio_upper_bound",
    "w_at_eta1",
    "phi_c_log_derivative",
    "digamma",
    "harmonic_gamma_bounds",
    "binomial_slope_bounds",
    "varphi_max",
    "window_lower_bound",
    "theta_probe",
    "partition_config",
    "default_partition_config",
    # harness
    "Axis",
    "SweepConfig",
    "PointResult",
    "SweepResult",
    "MomentCheck",
    "run_sweep",
    "estimate_crossing",
    "transition_window",
    "wilson_interval",
    "moment_empirical_check",
    "export_csv",
]
