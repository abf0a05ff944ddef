//! Randomized iterative solvers.
//!
//! Three families share this module: row-projection (Kaczmarz) steps on the
//! primal iterate, dual coefficient updates with exact or sampled inner
//! products, and diagonal-weighted coordinate descent for symmetric positive
//! definite systems. Every solve starts from zero and is a pure function of
//! its inputs and the configured seed.

mod coord;
mod dual;
mod kaczmarz;

pub use coord::{
    averaged_coord_descent_solve, coord_descent_solve, coord_descent_step, validate_spd,
};
pub use dual::{
    averaged_kaczmarz_sampled_solve, dual_kaczmarz_sampled_solve, dual_kaczmarz_solve,
    dual_kaczmarz_step, sampled_inner_product,
};
pub use kaczmarz::{averaged_kaczmarz_solve, kaczmarz_solve, kaczmarz_step};

use rand::Rng;

use crate::config::SolverConfig;
use crate::description::SparseDescription;
use crate::error::{Error, Result};
use crate::sq::MatrixSq;
use crate::trace::IterationTrace;

/// Dense solution plus its trace.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub trace: IterationTrace,
}

/// Sparse description of the solution plus its trace.
#[derive(Clone, Debug)]
pub struct DualSolveResult {
    pub description: SparseDescription,
    pub trace: IterationTrace,
}

fn ln_term(epsilon: f64, numerator: f64) -> f64 {
    (numerator / (epsilon * epsilon)).ln().max(0.0)
}

/// Iteration schedule for the sampled dual solver: ceil(kappa_F^2 ln(2/eps^2)).
pub fn compute_t_basic(cfg: &SolverConfig) -> usize {
    let t = cfg.kappa_f * cfg.kappa_f * ln_term(cfg.epsilon, 2.0);
    (t.ceil() as usize).max(1)
}

/// Sample count for the sampled dual solver:
/// ceil(4 ||A||_F^2 kappa_F^2 ln(2/eps^2) / (eps^2 min_j ||A_{*j}||^2)),
/// the minimum over nonzero columns.
pub fn compute_d_basic(cfg: &SolverConfig, a: &MatrixSq) -> usize {
    let num = 4.0 * a.frobenius_sq() * cfg.kappa_f * cfg.kappa_f * ln_term(cfg.epsilon, 2.0);
    let den = cfg.epsilon * cfg.epsilon * a.min_col_norm_sq();
    ((num / den).ceil() as usize).max(1)
}

/// Iteration schedule for the averaged sampled solver, from the per-step
/// contraction 1 - 1/(2 kappa^2): ceil(2 kappa^2 ln(2/eps^2)).
pub fn compute_t_averaged(cfg: &SolverConfig) -> usize {
    let t = 2.0 * cfg.kappa * cfg.kappa * ln_term(cfg.epsilon, 2.0);
    (t.ceil() as usize).max(1)
}

/// Sample count for the averaged sampled solver:
/// ceil(||A||_F^4 T / (eps^2 ||A||^2 min_j ||A_{*j}||^2)).
pub fn compute_d_averaged(cfg: &SolverConfig, a: &MatrixSq) -> usize {
    let t = cfg.iterations.unwrap_or_else(|| compute_t_averaged(cfg)) as f64;
    let frob_sq = a.frobenius_sq();
    let spectral = cfg.spectral_norm(a.frobenius());
    let num = frob_sq * frob_sq * t;
    let den = cfg.epsilon * cfg.epsilon * spectral * spectral * a.min_col_norm_sq();
    ((num / den).ceil() as usize).max(1)
}

/// Batch size for the averaged Kaczmarz variants:
/// q = max(1, round(||A||_F^2 / ||A||^2)) = max(1, round(kappa_F^2 / kappa^2)).
pub fn default_batch(cfg: &SolverConfig) -> usize {
    let q = (cfg.kappa_f * cfg.kappa_f) / (cfg.kappa * cfg.kappa);
    (q.round() as usize).max(1)
}

/// Iteration schedule for the primal Kaczmarz solver. The 0.99-probability
/// error bound needs ceil(kappa_F^2 ln(100/eps^2)) steps.
pub fn compute_t_kaczmarz(cfg: &SolverConfig) -> usize {
    let t = cfg.kappa_f * cfg.kappa_f * ln_term(cfg.epsilon, 100.0);
    (t.ceil() as usize).max(1)
}

/// Iteration schedule for the exact averaged solver (rate 1 - 1/kappa^2):
/// ceil(kappa^2 ln(100/eps^2)).
pub fn compute_t_averaged_exact(cfg: &SolverConfig) -> usize {
    let t = cfg.kappa * cfg.kappa * ln_term(cfg.epsilon, 100.0);
    (t.ceil() as usize).max(1)
}

/// Tr(A) ||A^-1|| for a square matrix, with ||A^-1|| = kappa_F / ||A||_F.
pub fn trace_times_inv_norm(cfg: &SolverConfig, a: &MatrixSq) -> Result<f64> {
    let trace = a
        .trace()
        .ok_or_else(|| Error::NotSpd("matrix must be square".into()))?;
    Ok(trace * cfg.kappa_f / a.frobenius())
}

/// Iteration schedule for direct coordinate descent:
/// ceil(Tr(A) ||A^-1|| ln(100/eps^2)).
pub fn compute_t_coord(cfg: &SolverConfig, a: &MatrixSq) -> Result<usize> {
    let t = trace_times_inv_norm(cfg, a)? * ln_term(cfg.epsilon, 100.0);
    Ok((t.ceil() as usize).max(1))
}

/// Batch size for averaged coordinate descent: max(1, round(Tr(A)/||A||)).
pub fn default_batch_coord(cfg: &SolverConfig, a: &MatrixSq) -> Result<usize> {
    let trace = a
        .trace()
        .ok_or_else(|| Error::NotSpd("matrix must be square".into()))?;
    let q = trace / cfg.spectral_norm(a.frobenius());
    Ok((q.round() as usize).max(1))
}

/// Iteration schedule for averaged coordinate descent (rate 1 - 1/(2 kappa)):
/// ceil(2 kappa ln(2/eps^2)).
pub fn compute_t_coord_averaged(cfg: &SolverConfig) -> usize {
    let t = 2.0 * cfg.kappa * ln_term(cfg.epsilon, 2.0);
    (t.ceil() as usize).max(1)
}

/// Sample count for averaged coordinate descent, mirroring the Kaczmarz
/// schedule with Tr(A) in place of ||A||_F^2 and the diagonal distribution in
/// place of the column-norm distribution:
/// ceil(Tr(A)^2 T / (eps^2 ||A|| min_j A_jj)).
pub fn compute_d_coord_averaged(cfg: &SolverConfig, a: &MatrixSq) -> Result<usize> {
    let trace = a
        .trace()
        .ok_or_else(|| Error::NotSpd("matrix must be square".into()))?;
    let diag = a.diagonal().expect("square matrix has a diagonal");
    let min_diag = diag
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t = cfg
        .iterations
        .unwrap_or_else(|| compute_t_coord_averaged(cfg)) as f64;
    let num = trace * trace * t;
    let den = cfg.epsilon * cfg.epsilon * cfg.spectral_norm(a.frobenius()) * min_diag;
    Ok(((num / den).ceil() as usize).max(1))
}

/// Unbiased estimate of <A_{r*}/||A_{r*}||, x> from `d` i.i.d. column draws
/// weighted by ||A||_F^2/||A_{*j}||^2. `x_at` supplies entries of x.
pub(crate) fn sampled_row_estimate<R: Rng + ?Sized, F: FnMut(usize) -> f64>(
    a: &MatrixSq,
    r: usize,
    mut x_at: F,
    d: usize,
    rng: &mut R,
) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidConfig("sample count must be >= 1".into()));
    }
    let row = a.row(r);
    let norm = row.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateRow(r));
    }
    let mut acc = 0.0;
    for _ in 0..d {
        let j = a.sample_column(rng)?;
        let arj = row.entry(j);
        if arj != 0.0 {
            acc += (arj / norm) * x_at(j) * a.col_importance(j);
        }
    }
    Ok(acc / d as f64)
}

/// Residual check used by the optional early stop: exact on small systems,
/// otherwise importance-sampled over 128 rows.
pub(crate) fn residual_estimate<R: Rng + ?Sized>(
    a: &MatrixSq,
    x: &[f64],
    b: &[f64],
    rng: &mut R,
) -> Result<f64> {
    const EXACT_LIMIT: usize = 1 << 18;
    if a.nrows() * a.ncols() <= EXACT_LIMIT {
        return a.residual_norm(x, b);
    }
    let samples = 128;
    let mut acc = 0.0;
    for _ in 0..samples {
        let i = a.sample_row(rng)?;
        let row = a.row(i);
        let r = b[i] - row.dot_dense(x);
        acc += r * r * a.frobenius_sq() / row.norm_sq();
    }
    Ok((acc / samples as f64).sqrt())
}

pub(crate) fn check_dims(a: &MatrixSq, b: &[f64]) -> Result<()> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    Ok(())
}

pub(crate) fn early_stop_interval(t: usize) -> usize {
    (t / 20).max(1)
}
