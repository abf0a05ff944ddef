//! Seeded instance generation with controlled spectra and sparsity.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sqsolve_core::{oracle, oracle::SpectralSummary, CsrMatrix};
use thiserror::Error;

use crate::mtx::MatrixData;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    Invalid(String),
    #[error("requested kappa {requested} not achievable with this sparsity (oracle measured {achieved})")]
    SpectrumNotAchieved { requested: f64, achieved: f64 },
    #[error("cannot place a residual of norm {0}: the matrix has full row space")]
    FullRowSpace(f64),
}

/// Singular-value profile on [1/kappa, 1].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SpectrumProfile {
    /// All singular values equal to one.
    Equal,
    /// Evenly spaced between 1 and 1/kappa.
    Linear { kappa: f64 },
    /// Log-spaced between 1 and 1/kappa.
    Geometric { kappa: f64 },
    /// Explicit values, largest first.
    Explicit { values: Vec<f64> },
}

impl SpectrumProfile {
    pub fn requested_kappa(&self) -> Option<f64> {
        match self {
            SpectrumProfile::Equal => Some(1.0),
            SpectrumProfile::Linear { kappa } | SpectrumProfile::Geometric { kappa } => {
                Some(*kappa)
            }
            SpectrumProfile::Explicit { .. } => None,
        }
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self, GenError> {
        match self {
            SpectrumProfile::Linear { .. } => Ok(SpectrumProfile::Linear { kappa }),
            SpectrumProfile::Geometric { .. } => Ok(SpectrumProfile::Geometric { kappa }),
            _ => Err(GenError::Invalid(
                "scaling experiments need a linear or geometric profile".into(),
            )),
        }
    }

    fn values(&self, count: usize) -> Result<Vec<f64>, GenError> {
        if count == 0 {
            return Err(GenError::Invalid("empty spectrum".into()));
        }
        match self {
            SpectrumProfile::Equal => Ok(vec![1.0; count]),
            SpectrumProfile::Linear { kappa } => {
                check_kappa(*kappa)?;
                if count == 1 {
                    return Ok(vec![1.0]);
                }
                Ok((0..count)
                    .map(|i| 1.0 - (1.0 - 1.0 / kappa) * i as f64 / (count - 1) as f64)
                    .collect())
            }
            SpectrumProfile::Geometric { kappa } => {
                check_kappa(*kappa)?;
                if count == 1 {
                    return Ok(vec![1.0]);
                }
                Ok((0..count)
                    .map(|i| (-(kappa.ln()) * i as f64 / (count - 1) as f64).exp())
                    .collect())
            }
            SpectrumProfile::Explicit { values } => {
                if values.len() != count {
                    return Err(GenError::Invalid(format!(
                        "explicit profile has {} values, need {count}",
                        values.len()
                    )));
                }
                if values.iter().any(|&v| !v.is_finite() || v <= 0.0 || v > 1.0) {
                    return Err(GenError::Invalid(
                        "explicit singular values must lie in (0, 1]".into(),
                    ));
                }
                Ok(values.clone())
            }
        }
    }
}

fn check_kappa(kappa: f64) -> Result<(), GenError> {
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(GenError::Invalid("kappa must be finite and >= 1".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub rows: usize,
    pub cols: usize,
    pub profile: SpectrumProfile,
    /// Maximum nonzeros per row; dense when absent.
    #[serde(default)]
    pub sparsity: Option<usize>,
    /// Build a symmetric positive definite matrix (requires rows == cols).
    #[serde(default)]
    pub spd: bool,
    /// b = A x_planted when true; otherwise an orthogonal residual of norm
    /// `residual` is added.
    #[serde(default = "default_true")]
    pub consistent: bool,
    #[serde(default)]
    pub residual: f64,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

/// Generated instance: the matrix, a planted solution, the right-hand side
/// and the oracle's spectral measurements.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub matrix: MatrixData,
    pub x_planted: Vec<f64>,
    pub b: Vec<f64>,
    pub summary: SpectralSummary,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v = gaussian_vec(rng, len);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, rows, cols).qr().q()
}

pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedInstance, GenError> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(GenError::Invalid(
            "matrix dimensions must be positive".into(),
        ));
    }
    if spec.spd && spec.rows != spec.cols {
        return Err(GenError::Invalid("an SPD matrix must be square".into()));
    }
    if spec.residual < 0.0 {
        return Err(GenError::Invalid(
            "residual norm must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let matrix = match spec.sparsity {
        None => MatrixData::Dense(generate_dense(spec, &mut rng)?),
        Some(s) => MatrixData::Sparse(generate_sparse(spec, s, &mut rng)?),
    };

    let dense = matrix.to_dense();
    let summary = oracle::spectral_summary(&dense);
    if let (Some(requested), Some(_)) = (spec.profile.requested_kappa(), spec.sparsity) {
        let achieved = summary.kappa;
        if achieved > 3.0 * requested || achieved < requested / 3.0 {
            return Err(GenError::SpectrumNotAchieved {
                requested,
                achieved,
            });
        }
    }

    let x_planted = unit_vec(&mut rng, spec.cols);
    let mut b: Vec<f64> = (&dense * DVector::from_column_slice(&x_planted))
        .iter()
        .copied()
        .collect();
    if !spec.consistent && spec.residual > 0.0 {
        let c = orthogonal_residual(&dense, spec.residual, &mut rng)?;
        for (bi, ci) in b.iter_mut().zip(&c) {
            *bi += ci;
        }
    }
    Ok(GeneratedInstance {
        matrix,
        x_planted,
        b,
        summary,
    })
}

fn generate_dense(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>, GenError> {
    let r = spec.rows.min(spec.cols);
    let sigmas = spec.profile.values(r)?;
    if spec.spd {
        // A = Q diag(lambda) Q^T, lambda in [1/kappa, 1].
        let q = orthonormal_columns(rng, spec.rows, spec.rows);
        let mut d = DMatrix::zeros(spec.rows, spec.rows);
        for i in 0..spec.rows {
            d[(i, i)] = sigmas[i];
        }
        let a = &q * d * q.transpose();
        // Exact symmetry despite rounding in the product.
        Ok(0.5 * (&a + a.transpose()))
    } else {
        let u = orthonormal_columns(rng, spec.rows, r);
        let v = orthonormal_columns(rng, spec.cols, r);
        let mut d = DMatrix::zeros(r, r);
        for i in 0..r {
            d[(i, i)] = sigmas[i];
        }
        Ok(u * d * v.transpose())
    }
}

/// Sparse path: profile values on anchor positions plus small off-anchor
/// noise, at most `s` nonzeros per row. The spectrum is approximate; the
/// oracle-reported kappa is the authoritative number.
fn generate_sparse(
    spec: &GeneratorSpec,
    s: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CsrMatrix, GenError> {
    if s == 0 {
        return Err(GenError::Invalid("row sparsity must be >= 1".into()));
    }
    if s > spec.cols {
        return Err(GenError::Invalid(format!(
            "row sparsity {s} exceeds column count {}",
            spec.cols
        )));
    }
    let r = spec.rows.min(spec.cols);
    let sigmas = spec.profile.values(r)?;
    let sigma_min = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();

    if spec.spd {
        let off_budget = if s > 1 {
            0.3 * sigma_min / (s - 1) as f64
        } else {
            0.0
        };
        for i in 0..spec.rows {
            triplets.push((i, i, sigmas[i % r]));
        }
        if s > 1 {
            // Symmetric off-diagonal pairs; each endpoint takes one slot of
            // its row budget, s-1 extra slots per row over diagonal.
            let mut slots = vec![s - 1; spec.rows];
            let pairs = spec.rows * (s - 1) / 2;
            for _ in 0..pairs {
                let i = rng.random_range(0..spec.rows);
                let j = rng.random_range(0..spec.rows);
                if i == j || slots[i] == 0 || slots[j] == 0 {
                    continue;
                }
                slots[i] -= 1;
                slots[j] -= 1;
                let v = off_budget * (rng.random::<f64>() - 0.5);
                triplets.push((i, j, v));
                triplets.push((j, i, v));
            }
        }
    } else {
        let off_scale = if s > 1 {
            0.25 * sigma_min / ((s - 1) as f64).sqrt()
        } else {
            0.0
        };
        for i in 0..spec.rows {
            let anchor = i % spec.cols;
            triplets.push((i, anchor, sigmas[i % r]));
            let mut used = vec![anchor];
            for _ in 0..s - 1 {
                let j = rng.random_range(0..spec.cols);
                if used.contains(&j) {
                    continue;
                }
                used.push(j);
                triplets.push((i, j, off_scale * (2.0 * rng.random::<f64>() - 1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(spec.rows, spec.cols, &triplets)
        .map_err(|e| GenError::Invalid(e.to_string()))
}

/// Component of a random vector orthogonal to the column space, scaled to
/// norm z.
fn orthogonal_residual(
    a: &DMatrix<f64>,
    z: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, GenError> {
    let g = gaussian_vec(rng, a.nrows());
    let proj_coeffs = oracle::min_norm_least_squares(a, &g).expect("dimensions match");
    let projected = a * DVector::from_column_slice(&proj_coeffs);
    let mut c: Vec<f64> = g
        .iter()
        .zip(projected.iter())
        .map(|(gi, pi)| gi - pi)
        .collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1e-8 {
        return Err(GenError::FullRowSpace(z));
    }
    for x in &mut c {
        *x *= z / norm;
    }
    Ok(c)
}
