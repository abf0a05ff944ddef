//! Row-projection solvers on the primal iterate.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::sq::MatrixSq;
use crate::trace::Recorder;

use super::{
    check_dims, compute_t_averaged_exact, compute_t_kaczmarz, default_batch, early_stop_interval,
    residual_estimate, SolveResult,
};

/// One Kaczmarz projection: x <- x + (b_r - <A_{r*}, x>) / ||A_{r*}||^2 A_{r*}.
/// Returns the step coefficient. The updated iterate satisfies the chosen
/// constraint exactly up to rounding.
pub fn kaczmarz_step(a: &MatrixSq, b: &[f64], x: &mut [f64], r: usize) -> Result<f64> {
    check_dims(a, b)?;
    if x.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            actual: x.len(),
        });
    }
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
    let c = (b[r] - row.dot_dense(x)) / norm_sq;
    row.axpy_into(c, x);
    Ok(c)
}

/// Randomized Kaczmarz from x_0 = 0, rows drawn with probability
/// ||A_{i*}||^2 / ||A||_F^2. Runs the configured iteration count (default
/// ceil(kappa_F^2 ln(100/eps^2))); each step touches only the sampled row,
/// so the iterate has at most s*T nonzeros on an s-row-sparse matrix.
pub fn kaczmarz_solve(
    a: &MatrixSq,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    let t = cfg.iterations.unwrap_or_else(|| compute_t_kaczmarz(cfg));
    let mut rng = cfg.rng();
    let mut x = vec![0.0; a.ncols()];
    let mut touched = vec![false; a.ncols()];
    let mut nnz = 0usize;
    let mut recorder = Recorder::new(cfg.track_trace, x_star, t);
    let stop_every = early_stop_interval(t);

    for k in 0..t {
        let r = a.sample_row(&mut rng)?;
        let row = a.row(r);
        let flops = 2 * row.nnz() as u64;
        kaczmarz_step(a, b, &mut x, r)?;
        for (j, _) in row.iter() {
            if !touched[j] {
                touched[j] = true;
                nnz += 1;
            }
        }
        recorder.record(a, b, &x, nnz, None, None, flops);
        if let Some(tol) = cfg.early_stop {
            if (k + 1) % stop_every == 0 && residual_estimate(a, &x, b, &mut rng)? <= tol {
                break;
            }
        }
    }
    Ok(SolveResult {
        x,
        trace: recorder.trace,
    })
}

/// Pseudoinverse-free averaged Kaczmarz: each step draws q rows with
/// replacement and applies half of each projection, computed against the
/// current iterate. With q = ||A||_F^2/||A||^2 the expected rate improves
/// from 1 - kappa_F^-2 to 1 - kappa^-2.
pub fn averaged_kaczmarz_solve(
    a: &MatrixSq,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    let t = cfg
        .iterations
        .unwrap_or_else(|| compute_t_averaged_exact(cfg));
    let q = cfg.batch.unwrap_or_else(|| default_batch(cfg));
    let mut rng = cfg.rng();
    let mut x = vec![0.0; a.ncols()];
    let mut touched = vec![false; a.ncols()];
    let mut nnz = 0usize;
    let mut recorder = Recorder::new(cfg.track_trace, x_star, t);
    let stop_every = early_stop_interval(t);
    let mut batch: Vec<(usize, f64)> = Vec::with_capacity(q);

    for k in 0..t {
        batch.clear();
        let mut flops = 0u64;
        for _ in 0..q {
            let r = a.sample_row(&mut rng)?;
            let row = a.row(r);
            let norm_sq = row.norm_sq();
            if norm_sq == 0.0 {
                return Err(Error::DegenerateRow(r));
            }
            flops += 2 * row.nnz() as u64;
            // Half projection, all residuals measured at x_k.
            let c = 0.5 * (b[r] - row.dot_dense(&x)) / norm_sq;
            batch.push((r, c));
        }
        for &(r, c) in &batch {
            let row = a.row(r);
            row.axpy_into(c, &mut x);
            for (j, _) in row.iter() {
                if !touched[j] {
                    touched[j] = true;
                    nnz += 1;
                }
            }
        }
        recorder.record(a, b, &x, nnz, None, None, flops);
        if let Some(tol) = cfg.early_stop {
            if (k + 1) % stop_every == 0 && residual_estimate(a, &x, b, &mut rng)? <= tol {
                break;
            }
        }
    }
    Ok(SolveResult {
        x,
        trace: recorder.trace,
    })
}
