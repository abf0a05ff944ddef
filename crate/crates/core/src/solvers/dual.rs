//! Dual-coefficient solvers: the iterate is the sparse vector y with
//! x = A^T y, so a T-step run yields an at-most-T-sparse description.
//!
//! The sampled variants replace the inner product <A_{r*}, A^T y> by a
//! Monte Carlo estimate over columns drawn with probability
//! ||A_{*j}||^2/||A||_F^2, the access pattern the column-norm sampler of
//! [`MatrixSq`] exists for. At desk scale the solvers also keep a dense
//! mirror of x = A^T y so one estimator sample costs O(1) instead of
//! O(|support|); the sampled estimator and the returned description are
//! unchanged by this.

use std::sync::Arc;

use rand::Rng;

use crate::config::SolverConfig;
use crate::description::{DescriptionBasis, SparseDescription};
use crate::error::{Error, Result};
use crate::sq::MatrixSq;
use crate::trace::Recorder;

use super::{
    check_dims, compute_d_averaged, compute_d_basic, compute_t_averaged, compute_t_basic,
    compute_t_kaczmarz, default_batch, early_stop_interval, residual_estimate,
    sampled_row_estimate, DualSolveResult,
};

/// One exact dual update:
/// y <- y + (b_r - <A_{r*}, A^T y>) / ||A_{r*}||^2 e_r.
/// The inner product is evaluated over the support of y via row-row dots.
/// Returns the coefficient added at position r.
pub fn dual_kaczmarz_step(b: &[f64], y: &mut SparseDescription, r: usize) -> Result<f64> {
    if y.basis() != DescriptionBasis::MatrixRows {
        return Err(Error::InvalidConfig(
            "dual updates need a row-basis description".into(),
        ));
    }
    let a = y.matrix().clone();
    check_dims(&a, b)?;
    if r >= a.nrows() {
        return Err(Error::IndexOutOfBounds {
            index: r,
            dim: a.nrows(),
        });
    }
    let row = a.row(r);
    let norm_sq = row.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::DegenerateRow(r));
    }
    let mut ip = 0.0;
    for (&i, &yi) in y.support().iter().zip(y.values()) {
        if yi != 0.0 {
            ip += yi * row.dot_row(a.row(i));
        }
    }
    let c = (b[r] - ip) / norm_sq;
    y.add(r, c);
    Ok(c)
}

/// Exact dual Kaczmarz. Multiplying the updates by A^T reproduces the primal
/// Kaczmarz iterates step for step under the same row sequence.
pub fn dual_kaczmarz_solve(
    a: &Arc<MatrixSq>,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<DualSolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    let t = cfg.iterations.unwrap_or_else(|| compute_t_kaczmarz(cfg));
    let mut rng = cfg.rng();
    let mut y = SparseDescription::empty(a.clone(), DescriptionBasis::MatrixRows);
    let mut recorder = Recorder::new(cfg.track_trace, x_star, t);
    let stop_every = early_stop_interval(t);
    let needs_x = cfg.track_trace || x_star.is_some() || cfg.early_stop.is_some();

    for k in 0..t {
        let r = a.sample_row(&mut rng)?;
        let flops = 2 * (a.row(r).nnz() as u64) * (y.support_len() as u64).max(1);
        dual_kaczmarz_step(b, &mut y, r)?;
        let x = if needs_x { y.materialize() } else { Vec::new() };
        recorder.record(
            a,
            b,
            &x,
            y.support_len(),
            Some(y.lambda_norm_sq()),
            None,
            flops,
        );
        if let Some(tol) = cfg.early_stop {
            if (k + 1) % stop_every == 0 && residual_estimate(a, &x, b, &mut rng)? <= tol {
                break;
            }
        }
    }
    Ok(DualSolveResult {
        description: y,
        trace: recorder.trace,
    })
}

/// Monte Carlo estimate of <A_{r*}/||A_{r*}||, A^T y> from `d` column draws.
/// Entries of x = A^T y are evaluated on demand at O(|support|) each, so one
/// call costs O(|support| * d) row queries.
pub fn sampled_inner_product<R: Rng + ?Sized>(
    a: &MatrixSq,
    r: usize,
    y: &SparseDescription,
    d: usize,
    rng: &mut R,
) -> Result<f64> {
    if r >= a.nrows() {
        return Err(Error::IndexOutOfBounds {
            index: r,
            dim: a.nrows(),
        });
    }
    sampled_row_estimate(a, r, |j| y.query_entry(j).unwrap_or(0.0), d, rng)
}

/// Shared body of the sampled dual solvers. `q = 1` is the basic variant
/// with full steps; `q > 1` (or `half_steps`) applies the averaged rule with
/// the 1/2 coefficient and per-row sample sets.
#[allow(clippy::too_many_arguments)]
fn sampled_dual_solve(
    a: &Arc<MatrixSq>,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
    t: usize,
    d: usize,
    q: usize,
    half_steps: bool,
) -> Result<DualSolveResult> {
    let mut rng = cfg.rng();
    let mut y = SparseDescription::empty(a.clone(), DescriptionBasis::MatrixRows);
    // Dense mirror of x = A^T y; keeps estimator samples O(1).
    let mut x = vec![0.0; a.ncols()];
    let mut lambda_sq = 0.0;
    let mut recorder = Recorder::new(cfg.track_trace, x_star, t);
    let stop_every = early_stop_interval(t);
    let scale = if half_steps { 0.5 } else { 1.0 };
    let mut batch: Vec<(usize, f64, f64)> = Vec::with_capacity(q);

    for k in 0..t {
        batch.clear();
        let mut mu_sum = 0.0;
        // Coefficients are computed against x_k; updates land afterwards.
        for _ in 0..q {
            let r = a.sample_row(&mut rng)?;
            let row = a.row(r);
            let norm = row.norm();
            if norm == 0.0 {
                return Err(Error::DegenerateRow(r));
            }
            let est = sampled_row_estimate(a, r, |j| x[j], d, &mut rng)?;
            if cfg.track_trace {
                mu_sum += row.dot_dense(&x) / norm - est;
            }
            let c = scale * (b[r] / norm - est) / norm;
            batch.push((r, c, norm));
        }
        for &(r, c, norm) in &batch {
            let old = y.coefficient(r);
            y.add(r, c);
            let new = old + c;
            lambda_sq += norm * norm * (new * new - old * old);
            a.row(r).axpy_into(c, &mut x);
        }
        let mu = cfg.track_trace.then_some(mu_sum / q as f64);
        recorder.record(
            a,
            b,
            &x,
            y.support_len(),
            Some(lambda_sq),
            mu,
            2 * (q * d) as u64,
        );
        if let Some(tol) = cfg.early_stop {
            if (k + 1) % stop_every == 0 && residual_estimate(a, &x, b, &mut rng)? <= tol {
                break;
            }
        }
    }
    Ok(DualSolveResult {
        description: y,
        trace: recorder.trace,
    })
}

/// Dual Kaczmarz with sampled inner products. With the default schedules
/// d = compute_d_basic and T = compute_t_basic the expected squared error
/// after T steps is at most eps^2 ||x*||^2 on consistent systems.
pub fn dual_kaczmarz_sampled_solve(
    a: &Arc<MatrixSq>,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<DualSolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    let t = cfg.iterations.unwrap_or_else(|| compute_t_basic(cfg));
    let d = cfg.sample_count.unwrap_or_else(|| compute_d_basic(cfg, a));
    sampled_dual_solve(a, b, cfg, x_star, t, d, 1, false)
}

/// Averaged Kaczmarz with sampled inner products: q rows per step, each with
/// its own column-sample set, applied with coefficient 1/2. Support grows by
/// at most q per step; the defaults give the 1 - 1/(2 kappa^2) rate.
pub fn averaged_kaczmarz_sampled_solve(
    a: &Arc<MatrixSq>,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<DualSolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    let t = cfg.iterations.unwrap_or_else(|| compute_t_averaged(cfg));
    let d = cfg
        .sample_count
        .unwrap_or_else(|| compute_d_averaged(cfg, a));
    let q = cfg.batch.unwrap_or_else(|| default_batch(cfg));
    sampled_dual_solve(a, b, cfg, x_star, t, d, q, true)
}
