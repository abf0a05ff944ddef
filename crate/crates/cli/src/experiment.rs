//! Experiment orchestration: seeded multi-trial runs, convergence and
//! scaling measurements, and report emission.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sqsolve_core::{oracle, MatrixSq, OversampledAccess, SolverConfig};
use thiserror::Error;

use crate::gen::{self, GeneratorSpec};
use crate::solve::{effective_schedule, run_solver, SolverId};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Gen(#[from] gen::GenError),
    #[error(transparent)]
    Core(#[from] sqsolve_core::Error),
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Solver selection and configuration overrides for one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSpec {
    pub id: SolverId,
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub sample_count: Option<usize>,
    #[serde(default)]
    pub batch: Option<usize>,
    #[serde(default)]
    pub early_stop: Option<f64>,
}

fn default_delta() -> f64 {
    0.01
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ExperimentMode {
    /// Fixed-schedule runs; reports final errors.
    #[default]
    Convergence,
    /// Sweeps kappa, measuring iterations until the error first drops below
    /// `target_error` (relative), and fits log(iterations) on log(kappa).
    Scaling { kappas: Vec<f64>, target_error: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub generator: GeneratorSpec,
    pub solver: SolverSpec,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub mode: ExperimentMode,
    /// Default report destination; `--out` overrides it.
    #[serde(default)]
    pub output: Option<std::path::PathBuf>,
    #[serde(default)]
    pub format: Option<ReportFormat>,
}

/// One row of a report. Every field is spelled out so CSV and JSON reports
/// carry the same schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub solver: String,
    pub trial: usize,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub sparsity: usize,
    pub kappa: f64,
    pub kappa_f: f64,
    pub epsilon: f64,
    pub d: Option<usize>,
    pub t: usize,
    pub q: Option<usize>,
    /// Relative error ||x - x*|| / ||x*|| against the oracle solution.
    pub final_error: Option<f64>,
    /// Steps executed; in scaling mode, steps until the target was reached.
    pub iterations: usize,
    pub wall_time_ms: f64,
    /// Measured oversampling ratio ||x~||^2 / ||x||^2 (1 for dense outputs).
    pub phi: Option<f64>,
    /// Per-trial solver failure, if any; failures do not abort the batch.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingSummary {
    /// (kappa, mean iterations to target) per grid point.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of log(iterations) against log(kappa).
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub trials: usize,
    pub failures: usize,
    pub mean_error: Option<f64>,
    pub median_error: Option<f64>,
    pub mean_squared_error: Option<f64>,
    pub mean_iterations: f64,
    pub scaling: Option<ScalingSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

/// Per-trial random stream: a splitmix64 hash of (master_seed, trial), so
/// trials are uncorrelated by construction and independent of order.
pub fn derive_seed(master_seed: u64, trial: u64) -> u64 {
    let mut z = master_seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

struct Instance {
    msq: Arc<MatrixSq>,
    b: Vec<f64>,
    x_star: Vec<f64>,
    x_star_norm: f64,
    kappa: f64,
    kappa_f: f64,
}

fn prepare_instance(generator: &GeneratorSpec) -> Result<Instance, ExperimentError> {
    let inst = gen::generate(generator)?;
    let dense = inst.matrix.to_dense();
    let x_star = oracle::min_norm_least_squares(&dense, &inst.b)?;
    let x_star_norm = x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Instance {
        msq: Arc::new(inst.matrix.to_matrix_sq()?),
        b: inst.b,
        x_star,
        x_star_norm,
        kappa: inst.summary.kappa,
        kappa_f: inst.summary.kappa_f,
    })
}

fn base_config(solver: &SolverSpec, inst: &Instance, seed: u64) -> SolverConfig {
    SolverConfig {
        epsilon: solver.epsilon,
        delta: solver.delta,
        kappa: inst.kappa.max(1.0),
        kappa_f: inst.kappa_f.max(inst.kappa.max(1.0)),
        sample_count: solver.sample_count,
        iterations: solver.iterations,
        batch: solver.batch,
        seed,
        track_trace: false,
        early_stop: solver.early_stop,
    }
}

fn relative_error(x: &[f64], inst: &Instance) -> f64 {
    let diff: f64 = x
        .iter()
        .zip(&inst.x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    diff.sqrt() / inst.x_star_norm
}

fn run_trial(
    spec: &ExperimentSpec,
    inst: &Instance,
    trial: usize,
    hitting_target: Option<f64>,
) -> TrialRecord {
    let seed = derive_seed(spec.master_seed, trial as u64);
    let cfg = base_config(&spec.solver, inst, seed);
    let (d, t, q) = match effective_schedule(spec.solver.id, &cfg, &inst.msq) {
        Ok(v) => v,
        Err(e) => {
            return TrialRecord {
                solver: spec.solver.id.to_string(),
                trial,
                seed,
                rows: inst.msq.nrows(),
                cols: inst.msq.ncols(),
                sparsity: inst.msq.row_sparsity(),
                kappa: inst.kappa,
                kappa_f: inst.kappa_f,
                epsilon: spec.solver.epsilon,
                d: None,
                t: 0,
                q: None,
                final_error: None,
                iterations: 0,
                wall_time_ms: 0.0,
                phi: None,
                error: Some(e.to_string()),
            }
        }
    };

    let started = Instant::now();
    let x_star_ref = hitting_target.map(|_| inst.x_star.as_slice());
    let outcome = run_solver(spec.solver.id, &inst.msq, &inst.b, &cfg, x_star_ref);
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut record = TrialRecord {
        solver: spec.solver.id.to_string(),
        trial,
        seed,
        rows: inst.msq.nrows(),
        cols: inst.msq.ncols(),
        sparsity: inst.msq.row_sparsity(),
        kappa: inst.kappa,
        kappa_f: inst.kappa_f,
        epsilon: spec.solver.epsilon,
        d,
        t,
        q,
        final_error: None,
        iterations: 0,
        wall_time_ms,
        phi: None,
        error: None,
    };
    match outcome {
        Err(e) => record.error = Some(e.to_string()),
        Ok(out) => {
            record.final_error = Some(relative_error(&out.x, inst));
            record.iterations = match hitting_target {
                None => out.trace.iterations,
                Some(target) => out
                    .trace
                    .first_error_at_most(target * inst.x_star_norm)
                    .map(|k| k + 1)
                    .unwrap_or(out.trace.iterations),
            };
            record.phi = Some(if out.description.is_empty() {
                1.0
            } else {
                match OversampledAccess::build(&out.description) {
                    Ok(oa) => {
                        let norm = out.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            oa.phi_given_norm(norm)
                        } else {
                            f64::INFINITY
                        }
                    }
                    Err(_) => 1.0,
                }
            });
        }
    }
    record
}

fn run_batch(
    spec: &ExperimentSpec,
    inst: &Instance,
    jobs: usize,
    hitting_target: Option<f64>,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    let trials: Vec<usize> = (0..spec.trials).collect();
    let records = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        pool.install(|| {
            trials
                .par_iter()
                .map(|&t| run_trial(spec, inst, t, hitting_target))
                .collect()
        })
    } else {
        trials
            .iter()
            .map(|&t| run_trial(spec, inst, t, hitting_target))
            .collect()
    };
    Ok(records)
}

fn summarize(records: &[TrialRecord], scaling: Option<ScalingSummary>) -> ExperimentSummary {
    let mut errors: Vec<f64> = records.iter().filter_map(|r| r.final_error).collect();
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let mean_iterations =
        records.iter().map(|r| r.iterations as f64).sum::<f64>() / records.len().max(1) as f64;
    let (mean_error, median_error, mean_squared_error) = if errors.is_empty() {
        (None, None, None)
    } else {
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let median = errors[errors.len() / 2];
        let mean_sq = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
        (Some(mean), Some(median), Some(mean_sq))
    };
    ExperimentSummary {
        trials: records.len(),
        failures,
        mean_error,
        median_error,
        mean_squared_error,
        mean_iterations,
        scaling,
    }
}

/// Fixed-instance, multi-trial run. The instance comes from the generator
/// seed; trial seeds are derived from the master seed.
pub fn run_convergence_experiment(
    spec: &ExperimentSpec,
    jobs: usize,
) -> Result<ExperimentReport, ExperimentError> {
    if spec.trials == 0 {
        return Err(ExperimentError::Invalid("trials must be >= 1".into()));
    }
    let inst = prepare_instance(&spec.generator)?;
    let records = run_batch(spec, &inst, jobs, None)?;
    let summary = summarize(&records, None);
    Ok(ExperimentReport { records, summary })
}

/// Kappa sweep measuring iterations-to-target; the generator profile is
/// re-targeted at each grid value.
pub fn run_scaling_experiment(
    spec: &ExperimentSpec,
    jobs: usize,
) -> Result<ExperimentReport, ExperimentError> {
    let (kappas, target_error) = match &spec.mode {
        ExperimentMode::Scaling {
            kappas,
            target_error,
        } => (kappas.clone(), *target_error),
        ExperimentMode::Convergence => {
            return Err(ExperimentError::Invalid(
                "scaling experiment needs a scaling mode spec".into(),
            ))
        }
    };
    if kappas.len() < 2 {
        return Err(ExperimentError::Invalid(
            "scaling needs at least two kappa values".into(),
        ));
    }
    if spec.trials == 0 {
        return Err(ExperimentError::Invalid("trials must be >= 1".into()));
    }

    let mut all_records = Vec::new();
    let mut points = Vec::new();
    for (gi, &kappa) in kappas.iter().enumerate() {
        let mut generator = spec.generator.clone();
        generator.profile = spec.generator.profile.with_kappa(kappa)?;
        generator.seed = spec.generator.seed.wrapping_add(gi as u64);
        let inst = prepare_instance(&generator)?;
        let sub_spec = ExperimentSpec {
            generator,
            master_seed: derive_seed(spec.master_seed, 0x5ca1e ^ gi as u64),
            ..spec.clone()
        };
        let records = run_batch(&sub_spec, &inst, jobs, Some(target_error))?;
        let mean_iters = records
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| r.iterations as f64)
            .sum::<f64>()
            / records.iter().filter(|r| r.error.is_none()).count().max(1) as f64;
        points.push((inst.kappa, mean_iters));
        all_records.extend(records);
    }

    let slope = fit_log_slope(&points);
    let summary = summarize(&all_records, Some(ScalingSummary { points, slope }));
    Ok(ExperimentReport {
        records: all_records,
        summary,
    })
}

/// Least-squares slope of ln(y) on ln(x).
pub fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub fn run_experiment(
    spec: &ExperimentSpec,
    jobs: usize,
) -> Result<ExperimentReport, ExperimentError> {
    match spec.mode {
        ExperimentMode::Convergence => run_convergence_experiment(spec, jobs),
        ExperimentMode::Scaling { .. } => run_scaling_experiment(spec, jobs),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format '{other}', expected csv|json")),
        }
    }
}

pub fn write_report<W: Write>(
    report: &ExperimentReport,
    format: ReportFormat,
    writer: W,
) -> Result<(), ExperimentError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(writer, report)?;
            Ok(())
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            for record in &report.records {
                w.serialize(record)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn save_report(
    report: &ExperimentReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path)?;
    write_report(report, format, std::io::BufWriter::new(file))
}
