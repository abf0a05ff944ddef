//! Sampling-and-query access structures.
//!
//! A [`VectorSq`] stores a real vector together with a prefix-weight tree
//! over its squared entries, so that an index can be drawn with probability
//! |v_i|^2 / ||v||^2 in O(log n), entries queried in O(1) and the norm in
//! O(1). A [`MatrixSq`] holds one such structure per row plus samplers over
//! the row norms and the column norms.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fenwick::FenwickTree;
use crate::sparse::CsrMatrix;
use crate::sum::{compensated_sum, CompensatedSum};

/// Vector with squared-magnitude sampling, entry query and norm query.
#[derive(Clone, Debug)]
pub struct VectorSq {
    entries: Vec<f64>,
    tree: FenwickTree,
    total_weight: f64,
    norm: f64,
}

impl VectorSq {
    /// Builds the structure in one O(n) pass.
    pub fn build(entries: &[f64]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let weights: Vec<f64> = entries.iter().map(|v| v * v).collect();
        let total_weight = compensated_sum(weights.iter().copied());
        Ok(Self {
            entries: entries.to_vec(),
            tree: FenwickTree::new(&weights),
            total_weight,
            norm: total_weight.sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The stored entry v_i.
    pub fn entry(&self, i: usize) -> Result<f64> {
        self.entries.get(i).copied().ok_or(Error::IndexOutOfBounds {
            index: i,
            dim: self.entries.len(),
        })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Euclidean norm, accumulated with compensated summation at build time.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Sum of squared entries.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Sum of the first `count` squared entries as seen by the tree.
    pub fn prefix_weight(&self, count: usize) -> f64 {
        self.tree.prefix(count)
    }

    /// Draws an index following D_v(i) = |v_i|^2 / ||v||^2.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = self.tree.total();
        if total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let target = rng.random::<f64>() * total;
        let mut idx = self.tree.search(target);
        if idx >= self.len() || self.entries[idx] == 0.0 {
            // Rounding at the upper boundary; fall back to the last index
            // carrying weight.
            idx = self
                .entries
                .iter()
                .rposition(|&v| v != 0.0)
                .ok_or(Error::EmptyDistribution)?;
        }
        Ok(idx)
    }

    /// Replaces entry `i`, updating the tree in O(log n). Norm bookkeeping is
    /// refreshed from the tree total; unused by the solvers but part of the
    /// structure's contract.
    pub fn update(&mut self, i: usize, value: f64) -> Result<()> {
        if i >= self.entries.len() {
            return Err(Error::IndexOutOfBounds {
                index: i,
                dim: self.entries.len(),
            });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(i));
        }
        let old = self.entries[i];
        self.entries[i] = value;
        self.tree.update(i, value * value - old * old);
        self.total_weight = self.tree.total();
        self.norm = self.total_weight.max(0.0).sqrt();
        Ok(())
    }
}

/// Storage layout of a [`MatrixSq`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixLayout {
    Dense,
    Sparse,
}

/// One matrix row: a [`VectorSq`] over the stored values plus, for sparse
/// layout, the column indices those values live at.
#[derive(Clone, Debug)]
pub struct RowSq {
    dim: usize,
    cols: Option<Vec<usize>>,
    values: VectorSq,
}

impl RowSq {
    fn dense(entries: &[f64]) -> Result<Self> {
        Ok(Self {
            dim: entries.len(),
            cols: None,
            values: VectorSq::build(entries)?,
        })
    }

    fn sparse(dim: usize, cols: Vec<usize>, vals: &[f64]) -> Result<Self> {
        // An empty row keeps a single zero placeholder so the VectorSq
        // invariants hold; it carries no weight.
        if cols.is_empty() {
            return Ok(Self {
                dim,
                cols: Some(Vec::new()),
                values: VectorSq::build(&[0.0])?,
            });
        }
        Ok(Self {
            dim,
            cols: Some(cols),
            values: VectorSq::build(vals)?,
        })
    }

    /// Row length n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> f64 {
        if matches!(&self.cols, Some(c) if c.is_empty()) {
            0.0
        } else {
            self.values.norm()
        }
    }

    pub fn norm_sq(&self) -> f64 {
        if matches!(&self.cols, Some(c) if c.is_empty()) {
            0.0
        } else {
            self.values.total_weight()
        }
    }

    /// Number of stored values (n for dense rows).
    pub fn nnz(&self) -> usize {
        match &self.cols {
            Some(cols) => cols.len(),
            None => self.dim,
        }
    }

    /// Entry at column `j`; zero outside the stored support.
    pub fn entry(&self, j: usize) -> f64 {
        debug_assert!(j < self.dim);
        match &self.cols {
            None => self.values.entries()[j],
            Some(cols) => match cols.binary_search(&j) {
                Ok(pos) => self.values.entries()[pos],
                Err(_) => 0.0,
            },
        }
    }

    /// Iterates over (column, value) pairs of the stored support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let vals = self.values.entries();
        (0..self.nnz()).map(move |p| {
            let col = match &self.cols {
                None => p,
                Some(cols) => cols[p],
            };
            (col, vals[p])
        })
    }

    /// Draws a column index with probability |A_{i,j}|^2 / ||A_{i*}||^2.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let pos = self.values.sample(rng)?;
        Ok(match &self.cols {
            None => pos,
            Some(cols) => cols[pos],
        })
    }

    /// Inner product with a dense vector, O(nnz).
    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (j, v) in self.iter() {
            acc += v * x[j];
        }
        acc
    }

    /// Inner product with another row, via sorted-support merge for sparse
    /// rows.
    pub fn dot_row(&self, other: &RowSq) -> f64 {
        match (&self.cols, &other.cols) {
            (None, None) => {
                let a = self.values.entries();
                let b = other.values.entries();
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
            (Some(_), None) => self.dot_dense(other.values.entries()),
            (None, Some(_)) => other.dot_dense(self.values.entries()),
            (Some(ca), Some(cb)) => {
                let va = self.values.entries();
                let vb = other.values.entries();
                let (mut p, mut q) = (0usize, 0usize);
                let mut acc = 0.0;
                while p < ca.len() && q < cb.len() {
                    match ca[p].cmp(&cb[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[p] * vb[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    /// Adds `scale` times this row into a dense accumulator.
    pub fn axpy_into(&self, scale: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        for (j, v) in self.iter() {
            out[j] += scale * v;
        }
    }
}

/// Sampling-and-query access to a matrix: per-row access, row-norm sampling
/// and column-norm sampling.
#[derive(Debug)]
pub struct MatrixSq {
    nrows: usize,
    ncols: usize,
    layout: MatrixLayout,
    rows: Vec<RowSq>,
    row_norms: VectorSq,
    col_norms: VectorSq,
    frobenius: f64,
    row_sparsity: usize,
    min_col_norm_sq: f64,
    /// ||A||_F^2 / ||A_{*j}||^2 per column, zero for empty columns.
    col_importance: Vec<f64>,
    /// Diagonal and its sum, kept for square matrices.
    diagonal: Option<Vec<f64>>,
    trace: Option<f64>,
}

impl MatrixSq {
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        let rows: Vec<RowSq> = (0..a.nrows())
            .map(|i| {
                let row: Vec<f64> = a.row(i).iter().copied().collect();
                RowSq::dense(&row)
            })
            .collect::<Result<_>>()?;
        Self::assemble(a.nrows(), a.ncols(), MatrixLayout::Dense, rows)
    }

    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        let rows: Vec<RowSq> = (0..a.nrows())
            .map(|i| {
                let (cols, vals) = a.row(i);
                RowSq::sparse(a.ncols(), cols.to_vec(), vals)
            })
            .collect::<Result<_>>()?;
        Self::assemble(a.nrows(), a.ncols(), MatrixLayout::Sparse, rows)
    }

    fn assemble(
        nrows: usize,
        ncols: usize,
        layout: MatrixLayout,
        rows: Vec<RowSq>,
    ) -> Result<Self> {
        let norms: Vec<f64> = rows.iter().map(|r| r.norm()).collect();
        let row_norms = VectorSq::build(&norms)?;
        if row_norms.total_weight() <= 0.0 {
            return Err(Error::EmptyDistribution);
        }

        // One pass over the nonzeros for the column norms.
        let mut col_acc = vec![CompensatedSum::new(); ncols];
        let mut row_sparsity = 0usize;
        for row in &rows {
            let mut nnz = 0usize;
            for (j, v) in row.iter() {
                if v != 0.0 {
                    col_acc[j].add(v * v);
                    nnz += 1;
                }
            }
            row_sparsity = row_sparsity.max(nnz);
        }
        let col_sq: Vec<f64> = col_acc.iter().map(|s| s.value().max(0.0)).collect();
        let col_norm_entries: Vec<f64> = col_sq.iter().map(|s| s.sqrt()).collect();
        let col_norms = VectorSq::build(&col_norm_entries)?;

        let frobenius_sq = row_norms.total_weight();
        let frobenius = frobenius_sq.sqrt();
        let min_col_norm_sq = col_sq
            .iter()
            .copied()
            .filter(|&s| s > 0.0)
            .fold(f64::INFINITY, f64::min);
        let col_importance: Vec<f64> = col_sq
            .iter()
            .map(|&s| if s > 0.0 { frobenius_sq / s } else { 0.0 })
            .collect();

        let (diagonal, trace) = if nrows == ncols {
            let diag: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r.entry(i)).collect();
            let tr = compensated_sum(diag.iter().copied());
            (Some(diag), Some(tr))
        } else {
            (None, None)
        };

        Ok(Self {
            nrows,
            ncols,
            layout,
            rows,
            row_norms,
            col_norms,
            frobenius,
            row_sparsity,
            min_col_norm_sq,
            col_importance,
            diagonal,
            trace,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn layout(&self) -> MatrixLayout {
        self.layout
    }

    pub fn row(&self, i: usize) -> &RowSq {
        &self.rows[i]
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.rows[i].norm()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.row_norms.total_weight()
    }

    /// Largest per-row nonzero count.
    pub fn row_sparsity(&self) -> usize {
        self.row_sparsity
    }

    /// Sampler over the row-norm vector (||A_{1*}||, ..., ||A_{m*}||).
    pub fn row_norms(&self) -> &VectorSq {
        &self.row_norms
    }

    /// Sampler over the column-norm vector (||A_{*1}||, ..., ||A_{*n}||).
    pub fn col_norms(&self) -> &VectorSq {
        &self.col_norms
    }

    /// Smallest squared norm among nonzero columns.
    pub fn min_col_norm_sq(&self) -> f64 {
        self.min_col_norm_sq
    }

    /// ||A||_F^2 / ||A_{*j}||^2, the importance weight of column `j`.
    pub fn col_importance(&self, j: usize) -> f64 {
        self.col_importance[j]
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.nrows || j >= self.ncols {
            return Err(Error::EntryOutOfBounds {
                row: i,
                col: j,
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        Ok(self.rows[i].entry(j))
    }

    /// Draws a row index with probability ||A_{i*}||^2 / ||A||_F^2.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.row_norms.sample(rng)
    }

    /// Draws a column index with probability ||A_{*j}||^2 / ||A||_F^2.
    pub fn sample_column<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.col_norms.sample(rng)
    }

    /// Dense matrix-vector product A x.
    pub fn multiply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                actual: x.len(),
            });
        }
        Ok(self.rows.iter().map(|r| r.dot_dense(x)).collect())
    }

    /// ||A x - b||.
    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> Result<f64> {
        if b.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                actual: b.len(),
            });
        }
        let ax = self.multiply(x)?;
        let sq = compensated_sum(ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)));
        Ok(sq.max(0.0).sqrt())
    }

    /// Diagonal entries; present only for square matrices.
    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }

    pub fn trace(&self) -> Option<f64> {
        self.trace
    }

    /// Checks |A_ij - A_ji| <= tol * ||A||_F over the stored support.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let tol = rel_tol * self.frobenius.max(f64::MIN_POSITIVE);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter() {
                if (v - self.rows[j].entry(i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter() {
                out[(i, j)] = v;
            }
        }
        out
    }
}
