//! Diagonal-weighted coordinate descent for symmetric positive definite
//! systems, with a sampled-inner-product averaged variant.

use std::sync::Arc;

use crate::config::SolverConfig;
use crate::description::{DescriptionBasis, SparseDescription};
use crate::error::{Error, Result};
use crate::sq::{MatrixSq, VectorSq};
use crate::trace::Recorder;

use super::{
    check_dims, compute_d_coord_averaged, compute_t_coord, compute_t_coord_averaged,
    default_batch_coord, early_stop_interval, residual_estimate, DualSolveResult, SolveResult,
};

/// Checks the preconditions the coordinate solvers rely on: square shape,
/// symmetry to 1e-10 relative and a strictly positive diagonal. Definiteness
/// beyond the diagonal is the caller's responsibility (the oracle checks it
/// on small instances).
pub fn validate_spd(a: &MatrixSq) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSpd(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if !a.is_symmetric(1e-10) {
        return Err(Error::NotSpd("matrix is not symmetric".into()));
    }
    let diag = a.diagonal().expect("square matrix has a diagonal");
    for (i, &v) in diag.iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::NonPositiveDiagonal(i));
        }
    }
    Ok(())
}

/// One coordinate update: x_r <- x_r - (<A_{r*}, x> - b_r) / A_rr. The r-th
/// residual coordinate is zero afterwards. Callers are expected to have
/// validated symmetry once via [`validate_spd`].
pub fn coord_descent_step(a: &MatrixSq, b: &[f64], x: &mut [f64], r: usize) -> Result<f64> {
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
    let diag = a
        .diagonal()
        .ok_or_else(|| Error::NotSpd("matrix must be square".into()))?;
    if diag[r] <= 0.0 {
        return Err(Error::NonPositiveDiagonal(r));
    }
    let c = (b[r] - a.row(r).dot_dense(x)) / diag[r];
    x[r] += c;
    Ok(c)
}

fn diag_sampler(a: &MatrixSq) -> Result<VectorSq> {
    let diag = a
        .diagonal()
        .ok_or_else(|| Error::NotSpd("matrix must be square".into()))?;
    let roots: Vec<f64> = diag.iter().map(|&v| v.max(0.0).sqrt()).collect();
    VectorSq::build(&roots)
}

/// Randomized coordinate descent, coordinates drawn with probability
/// A_rr / Tr(A). The iterate stays s*T-sparse on an s-sparse matrix and the
/// expected squared error contracts by 1 - 1/(Tr(A) ||A^-1||) per step.
pub fn coord_descent_solve(
    a: &MatrixSq,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    validate_spd(a)?;
    let t = match cfg.iterations {
        Some(t) => t,
        None => compute_t_coord(cfg, a)?,
    };
    let sampler = diag_sampler(a)?;
    let mut rng = cfg.rng();
    let mut x = vec![0.0; a.ncols()];
    let mut touched = vec![false; a.ncols()];
    let mut nnz = 0usize;
    let mut recorder = Recorder::new(cfg.track_trace, x_star, t);
    let stop_every = early_stop_interval(t);

    for k in 0..t {
        let r = sampler.sample(&mut rng)?;
        let flops = 2 * a.row(r).nnz() as u64;
        coord_descent_step(a, b, &mut x, r)?;
        if !touched[r] {
            touched[r] = true;
            nnz += 1;
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

/// Averaged coordinate descent with sampled inner products. Mirrors the
/// averaged Kaczmarz rule with Tr(A) in place of ||A||_F^2: per step, q
/// coordinates are drawn from the diagonal distribution and each residual
/// <A_{i*}, x> - b_i is estimated from d diagonal-weighted samples, applied
/// with coefficient 1/2. The iterate is sparse in the standard basis, so the
/// returned description stores x itself.
pub fn averaged_coord_descent_solve(
    a: &Arc<MatrixSq>,
    b: &[f64],
    cfg: &SolverConfig,
    x_star: Option<&[f64]>,
) -> Result<DualSolveResult> {
    cfg.validate()?;
    check_dims(a, b)?;
    validate_spd(a)?;
    let t = match cfg.iterations {
        Some(t) => t,
        None => compute_t_coord_averaged(cfg),
    };
    let d = match cfg.sample_count {
        Some(d) => d,
        None => compute_d_coord_averaged(cfg, a)?,
    };
    let q = match cfg.batch {
        Some(q) => q,
        None => default_batch_coord(cfg, a)?,
    };
    let trace_sum = a.trace().expect("validated square");
    let diag = a.diagonal().expect("validated square").to_vec();
    let sampler = diag_sampler(a)?;
    let mut rng = cfg.rng();
    let mut y = SparseDescription::empty(a.clone(), DescriptionBasis::Coordinates);
    let mut x = vec![0.0; a.ncols()];
    let mut lambda_sq = 0.0;
    let mut recorder = Recorder::new(cfg.track_trace, x_star, t);
    let stop_every = early_stop_interval(t);
    let mut batch: Vec<(usize, f64)> = Vec::with_capacity(q);

    for k in 0..t {
        batch.clear();
        let mut mu_sum = 0.0;
        for _ in 0..q {
            let i = sampler.sample(&mut rng)?;
            let row = a.row(i);
            // Estimate <A_{i*}, x> with importance weights Tr(A)/A_jj.
            let mut est = 0.0;
            for _ in 0..d {
                let j = sampler.sample(&mut rng)?;
                let aij = row.entry(j);
                if aij != 0.0 {
                    est += aij * x[j] * trace_sum / diag[j];
                }
            }
            est /= d as f64;
            if cfg.track_trace {
                mu_sum += row.dot_dense(&x) - est;
            }
            let c = 0.5 * (b[i] - est) / diag[i];
            batch.push((i, c));
        }
        for &(i, c) in &batch {
            let old = y.coefficient(i);
            y.add(i, c);
            let new = old + c;
            let w = a.row_norm(i);
            lambda_sq += w * w * (new * new - old * old);
            x[i] += c;
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
