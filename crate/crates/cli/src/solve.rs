//! Solver dispatch shared by the CLI and the experiment harness, plus the
//! on-disk JSON form of a solution description.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sqsolve_core::solvers::{
    self, averaged_coord_descent_solve, averaged_kaczmarz_sampled_solve, averaged_kaczmarz_solve,
    coord_descent_solve, dual_kaczmarz_sampled_solve, dual_kaczmarz_solve, kaczmarz_solve,
};
use sqsolve_core::{DescriptionBasis, IterationTrace, MatrixSq, SolverConfig, SparseDescription};

use crate::mtx;

/// Solver identifiers as accepted by `--solver`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverId {
    /// Primal randomized Kaczmarz with exact inner products.
    Kaczmarz,
    /// Exact dual Kaczmarz (sparse description output).
    Dual,
    /// Dual Kaczmarz with sampled inner products.
    DualSampled,
    /// Averaged Kaczmarz with sampled inner products.
    Averaged,
    /// Averaged Kaczmarz with exact inner products.
    AveragedExact,
    /// Randomized coordinate descent (SPD only).
    Cd,
    /// Averaged coordinate descent with sampled inner products (SPD only).
    CdAveraged,
}

impl SolverId {
    pub const ALL: [SolverId; 7] = [
        SolverId::Kaczmarz,
        SolverId::Dual,
        SolverId::DualSampled,
        SolverId::Averaged,
        SolverId::AveragedExact,
        SolverId::Cd,
        SolverId::CdAveraged,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverId::Kaczmarz => "kaczmarz",
            SolverId::Dual => "dual",
            SolverId::DualSampled => "dual-sampled",
            SolverId::Averaged => "averaged",
            SolverId::AveragedExact => "averaged-exact",
            SolverId::Cd => "cd",
            SolverId::CdAveraged => "cd-averaged",
        }
    }
}

impl std::fmt::Display for SolverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = SolverId::ALL.iter().map(|i| i.as_str()).collect();
                format!("unknown solver '{s}', expected one of {}", names.join("|"))
            })
    }
}

/// Solution of one run, always expressible as a sparse description: dense
/// outputs are wrapped in the coordinate basis.
pub struct SolveOutcome {
    pub description: SparseDescription,
    pub x: Vec<f64>,
    pub trace: IterationTrace,
}

fn dense_to_description(a: &Arc<MatrixSq>, x: &[f64]) -> SparseDescription {
    let mut desc = SparseDescription::empty(a.clone(), DescriptionBasis::Coordinates);
    for (i, &v) in x.iter().enumerate() {
        if v != 0.0 {
            desc.add(i, v);
        }
    }
    desc
}

pub fn run_solver(
    id: SolverId,
    a: &Arc<MatrixSq>,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> sqsolve_core::Result<SolveOutcome> {
    match id {
        SolverId::Kaczmarz => {
            let out = kaczmarz_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                description: dense_to_description(a, &out.x),
                x: out.x,
                trace: out.trace,
            })
        }
        SolverId::AveragedExact => {
            let out = averaged_kaczmarz_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                description: dense_to_description(a, &out.x),
                x: out.x,
                trace: out.trace,
            })
        }
        SolverId::Cd => {
            let out = coord_descent_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                description: dense_to_description(a, &out.x),
                x: out.x,
                trace: out.trace,
            })
        }
        SolverId::Dual => {
            let out = dual_kaczmarz_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                x: out.description.materialize(),
                description: out.description,
                trace: out.trace,
            })
        }
        SolverId::DualSampled => {
            let out = dual_kaczmarz_sampled_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                x: out.description.materialize(),
                description: out.description,
                trace: out.trace,
            })
        }
        SolverId::Averaged => {
            let out = averaged_kaczmarz_sampled_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                x: out.description.materialize(),
                description: out.description,
                trace: out.trace,
            })
        }
        SolverId::CdAveraged => {
            let out = averaged_coord_descent_solve(a, b, cfg, x_star)?;
            Ok(SolveOutcome {
                x: out.description.materialize(),
                description: out.description,
                trace: out.trace,
            })
        }
    }
}

/// Effective schedule parameters a run will use, for reporting.
pub fn effective_schedule(
    id: SolverId,
    cfg: &SolverConfig,
    a: &MatrixSq,
) -> sqsolve_core::Result<(Option<usize>, usize, Option<usize>)> {
    let t = match id {
        SolverId::Kaczmarz | SolverId::Dual => cfg
            .iterations
            .unwrap_or_else(|| solvers::compute_t_kaczmarz(cfg)),
        SolverId::DualSampled => cfg
            .iterations
            .unwrap_or_else(|| solvers::compute_t_basic(cfg)),
        SolverId::Averaged => cfg
            .iterations
            .unwrap_or_else(|| solvers::compute_t_averaged(cfg)),
        SolverId::AveragedExact => cfg
            .iterations
            .unwrap_or_else(|| solvers::compute_t_averaged_exact(cfg)),
        SolverId::Cd => match cfg.iterations {
            Some(t) => t,
            None => solvers::compute_t_coord(cfg, a)?,
        },
        SolverId::CdAveraged => cfg
            .iterations
            .unwrap_or_else(|| solvers::compute_t_coord_averaged(cfg)),
    };
    let d = match id {
        SolverId::DualSampled => Some(
            cfg.sample_count
                .unwrap_or_else(|| solvers::compute_d_basic(cfg, a)),
        ),
        SolverId::Averaged => Some(
            cfg.sample_count
                .unwrap_or_else(|| solvers::compute_d_averaged(cfg, a)),
        ),
        SolverId::CdAveraged => Some(match cfg.sample_count {
            Some(d) => d,
            None => solvers::compute_d_coord_averaged(cfg, a)?,
        }),
        _ => None,
    };
    let q = match id {
        SolverId::Averaged | SolverId::AveragedExact => {
            Some(cfg.batch.unwrap_or_else(|| solvers::default_batch(cfg)))
        }
        SolverId::CdAveraged => Some(match cfg.batch {
            Some(q) => q,
            None => solvers::default_batch_coord(cfg, a)?,
        }),
        _ => None,
    };
    Ok((d, t, q))
}

/// Serialized solution description: support, values and the path of the
/// matrix that defines it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DescriptionFile {
    pub matrix: PathBuf,
    pub basis: DescriptionBasis,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl DescriptionFile {
    pub fn new(desc: &SparseDescription, matrix_path: &Path) -> Self {
        Self {
            matrix: matrix_path.to_path_buf(),
            basis: desc.basis(),
            support: desc.support().to_vec(),
            values: desc.values().to_vec(),
        }
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Loads the referenced matrix (relative paths resolve against
    /// `base_dir`) and rebuilds the in-memory description.
    pub fn into_description(&self, base_dir: &Path) -> anyhow::Result<SparseDescription> {
        let matrix_path = if self.matrix.is_absolute() {
            self.matrix.clone()
        } else {
            base_dir.join(&self.matrix)
        };
        let data = mtx::load_matrix_market(&matrix_path)?;
        let msq = Arc::new(data.to_matrix_sq()?);
        Ok(SparseDescription::from_parts(
            msq,
            self.basis,
            self.support.clone(),
            self.values.clone(),
        )?)
    }
}

/// Writes a trace as step-indexed CSV rows. Quantities that were not
/// recorded stay as empty fields.
pub fn write_trace_csv<W: std::io::Write>(
    trace: &IterationTrace,
    writer: W,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "step",
        "residual_norm",
        "error_norm",
        "support_size",
        "lambda_norm",
        "mu",
        "inner_flops",
    ])?;
    let pick = |v: &[f64], k: usize| v.get(k).map(|x| x.to_string()).unwrap_or_default();
    for k in 0..trace.iterations {
        w.write_record([
            (k + 1).to_string(),
            pick(&trace.residual_norms, k),
            pick(&trace.error_norms, k),
            trace
                .support_sizes
                .get(k)
                .map(|s| s.to_string())
                .unwrap_or_default(),
            pick(&trace.lambda_norms, k),
            pick(&trace.mu_values, k),
            trace
                .inner_flops
                .get(k)
                .map(|f| f.to_string())
                .unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a trace to `path`, as CSV when the extension is `.csv` and JSON
/// otherwise.
pub fn save_trace(trace: &IterationTrace, path: &Path) -> anyhow::Result<()> {
    let file = std::fs::File::create(path)?;
    let writer = std::io::BufWriter::new(file);
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        write_trace_csv(trace, writer)
    } else {
        serde_json::to_writer_pretty(writer, trace)?;
        Ok(())
    }
}
