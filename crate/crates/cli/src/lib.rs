//! Benchmark harness around the solver library: instance generation with
//! controlled spectra, Matrix Market IO, solver dispatch and seeded
//! experiment orchestration with CSV/JSON reports.

pub mod experiment;
pub mod gen;
pub mod mtx;
pub mod solve;

pub use experiment::{
    derive_seed, run_convergence_experiment, run_experiment, run_scaling_experiment,
    ExperimentMode, ExperimentReport, ExperimentSpec, ReportFormat, SolverSpec, TrialRecord,
};
pub use gen::{generate, GeneratedInstance, GeneratorSpec, SpectrumProfile};
pub use mtx::{load_matrix_market, load_vector, save_matrix_market, save_vector, MatrixData};
pub use solve::{run_solver, DescriptionFile, SolveOutcome, SolverId};

/// Environment variable consulted for the seed when `--seed` is absent.
pub const SEED_ENV_VAR: &str = "SQSOLVE_SEED";

/// Seed precedence: explicit flag, then `SQSOLVE_SEED`, then zero.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}
