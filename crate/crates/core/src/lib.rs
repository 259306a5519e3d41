//! Numerical toolkit for Root's solution of the Skorokhod embedding problem
//! on one-dimensional martingale diffusions: measure and potential
//! arithmetic, a parabolic obstacle-problem solver with barrier extraction,
//! stopped-path simulation, and empirical verification of the continuity
//! theory (including the discontinuous-barrier counterexample).

pub mod barrier;
pub mod config;
pub mod diffusion;
pub mod measure;
pub mod solver;
pub mod verify;

pub use barrier::{paste_barriers, Barrier, BarrierError, INF};
pub use config::{config_hash, ConfigError, ScenarioConfig};
pub use diffusion::{
    density_sup_bound, simulate_ensemble, simulate_stopped, transition_density,
    validate_assumptions, DiffusionError, DiffusionSpec, EmpiricalLaw, Ensemble, SigmaKind,
};
pub use measure::{
    calibrate_tent, convex_order, embedding_interval, mixture_measure, tent_density, tent_mean,
    tent_measure, Measure, MeasureError, PotentialCurve,
};
pub use solver::{
    extract_barrier, residual_report, solve, EmbeddingProblem, ResidualReport, SolveGrid,
    SolverError, ValueSurface,
};
pub use verify::{
    atom_consistency, build_counterexample, check_corridor_bound, check_corridor_monotonicity,
    density_ratio_scan_right, density_ratio_scan_sym, ks_distance, tail_zero_check,
    tail_zero_check_below, theorem_suite, Check, CheckStatus, CorridorSpec, SimParams,
    VerificationReport, VerifyError,
};

/// Tool version reported in output files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
