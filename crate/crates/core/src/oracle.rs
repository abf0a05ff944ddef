//! Dense small-scale ground truth: least squares, spectra, exact sampling
//! distributions and the statistical kernels the test suites gate on.
//!
//! This is the one module allowed O(m n^2) work; everything here is meant
//! for instances up to a couple of thousand rows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::description::SparseDescription;
use crate::error::{Error, Result};
use crate::solvers::sampled_row_estimate;
use crate::sq::MatrixSq;
use crate::sum::compensated_sum;

/// Relative threshold under which a singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Spectral quantities of a matrix, computed by full SVD.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
    /// ||A|| (largest singular value).
    pub spectral_norm: f64,
    /// Smallest singular value above the rank threshold.
    pub min_singular: f64,
    /// ||A||_F.
    pub frobenius: f64,
    /// ||A^-1|| in the Moore-Penrose sense.
    pub inv_norm: f64,
    /// kappa = ||A|| ||A^-1||.
    pub kappa: f64,
    /// kappa_F = ||A||_F ||A^-1||.
    pub kappa_f: f64,
    /// Tr(A) for square inputs.
    pub trace: Option<f64>,
}

fn sorted_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let svd = a.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn spectral_summary(a: &DMatrix<f64>) -> SpectralSummary {
    let singular_values = sorted_singular_values(a);
    let spectral_norm = singular_values.first().copied().unwrap_or(0.0);
    let threshold = RANK_TOLERANCE * spectral_norm;
    let min_singular = singular_values
        .iter()
        .copied()
        .rfind(|&s| s > threshold)
        .unwrap_or(0.0);
    let frobenius = compensated_sum(singular_values.iter().map(|s| s * s))
        .max(0.0)
        .sqrt();
    let inv_norm = if min_singular > 0.0 {
        1.0 / min_singular
    } else {
        f64::INFINITY
    };
    let trace = (a.nrows() == a.ncols()).then(|| a.diagonal().iter().sum());
    SpectralSummary {
        spectral_norm,
        min_singular,
        frobenius,
        inv_norm,
        kappa: spectral_norm * inv_norm,
        kappa_f: frobenius * inv_norm,
        trace,
        singular_values,
    }
}

/// Minimum-norm least-squares solution x* = A^+ b. Singular values below
/// 1e-10 ||A|| are treated as zero.
pub fn min_norm_least_squares(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let spectral_norm = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = RANK_TOLERANCE * spectral_norm;
    let rhs = DVector::from_column_slice(b);
    let mut coeffs = u.transpose() * rhs;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        coeffs[i] = if s > threshold { coeffs[i] / s } else { 0.0 };
    }
    let x = v_t.transpose() * coeffs;
    Ok(x.iter().copied().collect())
}

/// D_v(i) = |v_i|^2 / ||v||^2 as an explicit probability vector.
pub fn exact_distribution(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total = compensated_sum(v.iter().map(|x| x * x));
    if total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    Ok(v.iter().map(|x| x * x / total).collect())
}

/// Total variation distance between two distributions on the same support.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(0.5 * compensated_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs())))
}

/// Pearson chi-square p-value of observed counts against expected counts.
pub fn chi_square_pvalue(counts: &[u64], expected: &[f64]) -> Result<f64> {
    if counts.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            actual: counts.len(),
        });
    }
    if counts.len() < 2 {
        return Err(Error::InvalidConfig(
            "chi-square needs at least two cells".into(),
        ));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidConfig(
            "expected counts must be positive".into(),
        ));
    }
    let stat = compensated_sum(
        counts
            .iter()
            .zip(expected)
            .map(|(&c, &e)| (c as f64 - e) * (c as f64 - e) / e),
    );
    if stat <= 0.0 {
        return Ok(1.0);
    }
    let dof = (counts.len() - 1) as f64;
    // Regularized lower incomplete gamma is the chi-square CDF.
    let cdf = statrs::function::gamma::gamma_lr(dof / 2.0, stat / 2.0);
    Ok((1.0 - cdf).clamp(0.0, 1.0))
}

/// Monte Carlo mean and variance of the estimator deviation
/// mu = <A_{r*}/||A_{r*}||, x> - estimate over `reps` fresh sample sets of
/// size d, at fixed r and y.
pub fn mu_statistics<R: Rng + ?Sized>(
    a: &MatrixSq,
    r: usize,
    y: &SparseDescription,
    d: usize,
    reps: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if r >= a.nrows() {
        return Err(Error::IndexOutOfBounds {
            index: r,
            dim: a.nrows(),
        });
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one repetition".into()));
    }
    let x = y.materialize();
    let row = a.row(r);
    let norm = row.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateRow(r));
    }
    let exact = row.dot_dense(&x) / norm;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for n in 1..=reps {
        let est = sampled_row_estimate(a, r, |j| x[j], d, rng)?;
        let mu = exact - est;
        let delta = mu - mean;
        mean += delta / n as f64;
        m2 += delta * (mu - mean);
    }
    let var = if reps > 1 {
        m2 / (reps - 1) as f64
    } else {
        0.0
    };
    Ok((mean, var))
}
