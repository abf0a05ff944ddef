//! Sparse descriptions of solution vectors.
//!
//! The dual solvers never hold the solution x densely. They return a sparse
//! coefficient vector y over a matrix handle; in the row basis x = A^T y,
//! while coordinate-descent solutions are sparse in the standard basis and
//! store x itself.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sq::MatrixSq;
use crate::sum::compensated_sum;

/// How the stored coefficients combine into the solution vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescriptionBasis {
    /// x = A^T y: coefficient i scales row A_{i*}.
    MatrixRows,
    /// x = y: coefficient i is the i-th entry of x itself.
    Coordinates,
}

/// Sparse coefficient vector with a handle to the matrix that defines it.
#[derive(Clone, Debug)]
pub struct SparseDescription {
    matrix: Arc<MatrixSq>,
    basis: DescriptionBasis,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseDescription {
    pub fn empty(matrix: Arc<MatrixSq>, basis: DescriptionBasis) -> Self {
        Self {
            matrix,
            basis,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from explicit support/values; the support must be strictly
    /// increasing and within the coefficient dimension.
    pub fn from_parts(
        matrix: Arc<MatrixSq>,
        basis: DescriptionBasis,
        support: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                actual: values.len(),
            });
        }
        let dim = match basis {
            DescriptionBasis::MatrixRows => matrix.nrows(),
            DescriptionBasis::Coordinates => matrix.ncols(),
        };
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidConfig(
                    "description support must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = support.last() {
            if last >= dim {
                return Err(Error::IndexOutOfBounds { index: last, dim });
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            matrix,
            basis,
            support,
            values,
        })
    }

    pub fn matrix(&self) -> &Arc<MatrixSq> {
        &self.matrix
    }

    pub fn basis(&self) -> DescriptionBasis {
        self.basis
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Dimension of the coefficient vector y.
    pub fn coefficient_dim(&self) -> usize {
        match self.basis {
            DescriptionBasis::MatrixRows => self.matrix.nrows(),
            DescriptionBasis::Coordinates => self.matrix.ncols(),
        }
    }

    /// Dimension of the described solution x.
    pub fn solution_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Coefficient y_i, zero outside the support.
    pub fn coefficient(&self, i: usize) -> f64 {
        match self.support.binary_search(&i) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// Accumulates `delta` into coefficient `i`, growing the support by at
    /// most one. A zero delta on an absent index is a no-op.
    pub fn add(&mut self, i: usize, delta: f64) {
        debug_assert!(i < self.coefficient_dim());
        match self.support.binary_search(&i) {
            Ok(pos) => self.values[pos] += delta,
            Err(pos) => {
                if delta != 0.0 {
                    self.support.insert(pos, i);
                    self.values.insert(pos, delta);
                }
            }
        }
    }

    /// Solution entry x_j; O(|support|) row queries in the row basis.
    pub fn query_entry(&self, j: usize) -> Result<f64> {
        if j >= self.solution_dim() {
            return Err(Error::IndexOutOfBounds {
                index: j,
                dim: self.solution_dim(),
            });
        }
        match self.basis {
            DescriptionBasis::MatrixRows => Ok(compensated_sum(
                self.support
                    .iter()
                    .zip(&self.values)
                    .map(|(&i, &y)| y * self.matrix.row(i).entry(j)),
            )),
            DescriptionBasis::Coordinates => Ok(self.coefficient(j)),
        }
    }

    /// Materializes the full solution vector.
    pub fn materialize(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.solution_dim()];
        match self.basis {
            DescriptionBasis::MatrixRows => {
                for (&i, &y) in self.support.iter().zip(&self.values) {
                    self.matrix.row(i).axpy_into(y, &mut x);
                }
            }
            DescriptionBasis::Coordinates => {
                for (&i, &y) in self.support.iter().zip(&self.values) {
                    x[i] = y;
                }
            }
        }
        x
    }

    /// Norm ||v_i|| of the component vector scaled by coefficient `pos`:
    /// the row norm in the row basis, one in the coordinate basis.
    pub fn component_norm(&self, pos: usize) -> f64 {
        match self.basis {
            DescriptionBasis::MatrixRows => self.matrix.row_norm(self.support[pos]),
            DescriptionBasis::Coordinates => 1.0,
        }
    }

    /// ||y||_Lambda^2 with Lambda = diag(||A_{i*}||^2).
    pub fn lambda_norm_sq(&self) -> f64 {
        compensated_sum(self.support.iter().zip(&self.values).map(|(&i, &y)| {
            let w = self.matrix.row_norm(i);
            w * w * y * y
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn matrix() -> Arc<MatrixSq> {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, -1.0, 3.0, 0.5]);
        Arc::new(MatrixSq::from_dense(&a).unwrap())
    }

    #[test]
    fn unit_coefficient_reads_row() {
        let m = matrix();
        let mut y = SparseDescription::empty(m, DescriptionBasis::MatrixRows);
        y.add(0, 1.0);
        assert_eq!(y.query_entry(0).unwrap(), 1.0);
        assert_eq!(y.query_entry(1).unwrap(), 2.0);
        assert_eq!(y.materialize(), vec![1.0, 2.0]);
    }

    #[test]
    fn empty_description_is_zero() {
        let m = matrix();
        let y = SparseDescription::empty(m, DescriptionBasis::MatrixRows);
        assert_eq!(y.query_entry(1).unwrap(), 0.0);
        assert_eq!(y.materialize(), vec![0.0, 0.0]);
        assert_eq!(y.lambda_norm_sq(), 0.0);
    }

    #[test]
    fn matches_dense_transpose_product() {
        let m = matrix();
        let mut y = SparseDescription::empty(m.clone(), DescriptionBasis::MatrixRows);
        y.add(2, 0.5);
        y.add(0, -2.0);
        y.add(2, 0.25);
        let dense = m.to_dense();
        let yv = nalgebra::DVector::from_vec(vec![-2.0, 0.0, 0.75]);
        let expect = dense.transpose() * yv;
        let got = y.materialize();
        for j in 0..2 {
            assert!((got[j] - expect[j]).abs() < 1e-12);
            assert!((y.query_entry(j).unwrap() - expect[j]).abs() < 1e-12);
        }
        assert_eq!(y.support(), &[0, 2]);
    }

    #[test]
    fn coordinate_basis_is_identity() {
        let m = matrix();
        let mut y = SparseDescription::empty(m, DescriptionBasis::Coordinates);
        y.add(1, 4.0);
        assert_eq!(y.query_entry(1).unwrap(), 4.0);
        assert_eq!(y.query_entry(0).unwrap(), 0.0);
        assert_eq!(y.materialize(), vec![0.0, 4.0]);
        assert_eq!(y.component_norm(0), 1.0);
    }

    #[test]
    fn from_parts_validates() {
        let m = matrix();
        assert!(SparseDescription::from_parts(
            m.clone(),
            DescriptionBasis::MatrixRows,
            vec![1, 1],
            vec![1.0, 2.0]
        )
        .is_err());
        assert!(SparseDescription::from_parts(
            m.clone(),
            DescriptionBasis::MatrixRows,
            vec![3],
            vec![1.0]
        )
        .is_err());
        assert!(SparseDescription::from_parts(
            m,
            DescriptionBasis::MatrixRows,
            vec![0, 2],
            vec![1.0, 2.0]
        )
        .is_ok());
    }

    #[test]
    fn zero_delta_does_not_grow_support() {
        let m = matrix();
        let mut y = SparseDescription::empty(m, DescriptionBasis::MatrixRows);
        y.add(1, 0.0);
        assert!(y.is_empty());
        y.add(1, 2.0);
        y.add(1, -2.0);
        // Cancelled but retained: support only ever grows.
        assert_eq!(y.support_len(), 1);
        assert_eq!(y.coefficient(1), 0.0);
    }
}
