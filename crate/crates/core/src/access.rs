//! Full sampling-and-query access to a described solution.
//!
//! A sparse description gives cheap entry queries but no direct sampler.
//! The linear combination x = sum_i y_i v_i is dominated entrywise by
//! tilde_x_j^2 = k sum_i (y_i v_{i,j})^2, which *can* be sampled in two
//! stages: pick a component i with probability proportional to
//! |y_i|^2 ||v_i||^2, then a column from v_i's own squared-magnitude law.
//! Rejection against the ratio x_j^2 / tilde_x_j^2 then yields exact
//! samples from D_x, and the acceptance rate estimates ||x||.

use rand::Rng;

use crate::description::{DescriptionBasis, SparseDescription};
use crate::error::{Error, Result};
use crate::sq::VectorSq;
use crate::sum::compensated_sum;

/// Default failure budget for the rejection attempt cap.
const DEFAULT_DELTA: f64 = 1e-3;

/// Oversampled access to x: the dominating vector's sampler plus the
/// bookkeeping needed for rejection sampling and norm estimation.
#[derive(Clone, Debug)]
pub struct OversampledAccess {
    desc: SparseDescription,
    /// Sampler over |y_i| ||v_i|| per support position.
    combo: VectorSq,
    /// ||tilde_x||^2 = k sum_i ||y_i v_i||^2.
    tilde_norm_sq: f64,
    /// Working upper bound on phi = ||tilde_x||^2 / ||x||^2; starts at the
    /// orthogonal-case value k and is refined by the bootstrap or an oracle
    /// norm.
    phi_hat: f64,
    delta: f64,
}

/// Outcome of the acceptance-rate norm estimator.
#[derive(Clone, Copy, Debug)]
pub struct NormEstimate {
    pub value: f64,
    /// Set when the measured acceptance mass is statistically
    /// indistinguishable from zero (under four expected acceptances per
    /// group): the combination cancels almost completely and the value is
    /// only an upper bound of order eps * ||tilde_x||.
    pub degenerate: bool,
    pub groups: usize,
    pub samples_per_group: usize,
}

impl OversampledAccess {
    pub fn build(desc: &SparseDescription) -> Result<Self> {
        if desc.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let weights: Vec<f64> = (0..desc.support_len())
            .map(|p| desc.values()[p].abs() * desc.component_norm(p))
            .collect();
        let combo = VectorSq::build(&weights)?;
        if combo.total_weight() <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let k = desc.support_len() as f64;
        let tilde_norm_sq = k * combo.total_weight();
        Ok(Self {
            desc: desc.clone(),
            combo,
            tilde_norm_sq,
            phi_hat: k,
            delta: DEFAULT_DELTA,
        })
    }

    pub fn description(&self) -> &SparseDescription {
        &self.desc
    }

    /// Number of combined components.
    pub fn k(&self) -> usize {
        self.desc.support_len()
    }

    /// ||tilde_x||^2.
    pub fn tilde_norm_sq(&self) -> f64 {
        self.tilde_norm_sq
    }

    pub fn phi_hat(&self) -> f64 {
        self.phi_hat
    }

    pub fn set_phi_hat(&mut self, phi: f64) {
        self.phi_hat = phi.max(1.0);
    }

    pub fn set_delta(&mut self, delta: f64) {
        self.delta = delta.clamp(f64::MIN_POSITIVE, 0.5);
    }

    /// The oversampling ratio phi given a trusted value of ||x||.
    pub fn phi_given_norm(&self, norm_of_x: f64) -> f64 {
        self.tilde_norm_sq / (norm_of_x * norm_of_x)
    }

    /// tilde_x_j^2 = k sum_i (y_i v_{i,j})^2.
    pub fn tilde_entry_sq(&self, j: usize) -> Result<f64> {
        if j >= self.desc.solution_dim() {
            return Err(Error::IndexOutOfBounds {
                index: j,
                dim: self.desc.solution_dim(),
            });
        }
        let k = self.desc.support_len() as f64;
        let total = match self.desc.basis() {
            DescriptionBasis::MatrixRows => {
                let a = self.desc.matrix();
                compensated_sum(self.desc.support().iter().zip(self.desc.values()).map(
                    |(&i, &y)| {
                        let t = y * a.row(i).entry(j);
                        t * t
                    },
                ))
            }
            DescriptionBasis::Coordinates => {
                let y = self.desc.coefficient(j);
                y * y
            }
        };
        Ok(k * total)
    }

    /// Draws a column index from the tilde_x squared-magnitude law.
    pub fn sample_tilde<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let pos = self.combo.sample(rng)?;
        match self.desc.basis() {
            DescriptionBasis::MatrixRows => {
                let i = self.desc.support()[pos];
                self.desc.matrix().row(i).sample(rng)
            }
            DescriptionBasis::Coordinates => Ok(self.desc.support()[pos]),
        }
    }

    /// Exact sample from D_x by rejection against tilde_x. Expected attempt
    /// count is phi; gives up after ceil(10 phi_hat ln(1/delta)) attempts,
    /// which signals near-total cancellation or an underestimated phi_hat.
    pub fn rejection_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.rejection_sample_with_attempts(rng).map(|(j, _)| j)
    }

    /// As [`rejection_sample`](Self::rejection_sample), also reporting how
    /// many proposals were drawn.
    pub fn rejection_sample_with_attempts<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(usize, usize)> {
        let cap = (10.0 * self.phi_hat * (1.0 / self.delta).ln()).ceil() as usize;
        let cap = cap.max(1);
        for attempt in 1..=cap {
            let j = self.sample_tilde(rng)?;
            let dominated = self.tilde_entry_sq(j)?;
            if dominated <= 0.0 {
                continue;
            }
            let xj = self.desc.query_entry(j)?;
            let ratio = (xj * xj / dominated).min(1.0);
            if rng.random::<f64>() < ratio {
                return Ok((j, attempt));
            }
        }
        Err(Error::SamplingFailure { attempts: cap })
    }

    /// Median-of-means acceptance-rate estimator of ||x||. Uses
    /// ceil(6 ln(1/delta)) groups of ceil(9 phi_hat / eps^2) tilde-samples;
    /// the group mean of x_j^2/tilde_x_j^2 estimates 1/phi, and scaling by
    /// ||tilde_x||^2 gives ||x||^2 to relative error eps with probability at
    /// least 1 - delta.
    pub fn estimate_norm<R: Rng + ?Sized>(
        &self,
        epsilon: f64,
        delta: f64,
        rng: &mut R,
    ) -> Result<NormEstimate> {
        if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(
                "norm estimation needs epsilon, delta in (0, 1)".into(),
            ));
        }
        let groups = ((6.0 * (1.0 / delta).ln()).ceil() as usize).max(1);
        let samples_per_group = ((9.0 * self.phi_hat / (epsilon * epsilon)).ceil() as usize).max(1);
        let mut means = Vec::with_capacity(groups);
        for _ in 0..groups {
            let mut acc = 0.0;
            for _ in 0..samples_per_group {
                let j = self.sample_tilde(rng)?;
                let dominated = self.tilde_entry_sq(j)?;
                if dominated > 0.0 {
                    let xj = self.desc.query_entry(j)?;
                    acc += (xj * xj / dominated).min(1.0);
                }
            }
            means.push(acc / samples_per_group as f64);
        }
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if groups % 2 == 1 {
            means[groups / 2]
        } else {
            0.5 * (means[groups / 2 - 1] + means[groups / 2])
        };
        let value = (median * self.tilde_norm_sq).max(0.0).sqrt();
        Ok(NormEstimate {
            value,
            degenerate: median * (samples_per_group as f64) < 4.0,
            groups,
            samples_per_group,
        })
    }

    /// Coarse first pass (eps = 0.5) that replaces the starting phi_hat with
    /// a measured value. Returns the refined phi_hat; degenerate estimates
    /// leave an inflated bound in place so the rejection cap still applies.
    pub fn bootstrap_phi_hat<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        let est = self.estimate_norm(0.5, 0.05, rng)?;
        if est.degenerate || est.value <= 0.0 {
            self.phi_hat = (self.phi_hat * 8.0).max(8.0);
        } else {
            // 1.5x headroom over the measured ratio.
            self.phi_hat = (1.5 * self.phi_given_norm(est.value)).max(1.0);
        }
        Ok(self.phi_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sq::MatrixSq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn arc(rows: usize, cols: usize, data: &[f64]) -> Arc<MatrixSq> {
        Arc::new(MatrixSq::from_dense(&DMatrix::from_row_slice(rows, cols, data)).unwrap())
    }

    #[test]
    fn single_component_needs_one_attempt() {
        let a = arc(2, 3, &[1.0, 2.0, -1.0, 0.5, 0.5, 0.5]);
        let mut y = SparseDescription::empty(a, DescriptionBasis::MatrixRows);
        y.add(0, 2.0);
        let oa = OversampledAccess::build(&y).unwrap();
        // k = 1: tilde_x == x entrywise, phi = 1, first attempt accepted.
        let x = y.materialize();
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        assert!((oa.tilde_norm_sq() - norm_sq).abs() < 1e-12);
        assert!((oa.phi_given_norm(norm_sq.sqrt()) - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            oa.rejection_sample(&mut rng).unwrap();
        }
    }

    #[test]
    fn entrywise_domination_and_norm_identity() {
        let a = arc(
            4,
            5,
            &[
                1.0, -2.0, 0.0, 0.5, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, 2.0, 0.0, 1.0, 1.0, -1.0, 0.5,
                0.5, 0.5, 0.5, 0.5,
            ],
        );
        let mut y = SparseDescription::empty(a, DescriptionBasis::MatrixRows);
        y.add(0, 1.0);
        y.add(1, -0.5);
        y.add(3, 2.0);
        let oa = OversampledAccess::build(&y).unwrap();
        let x = y.materialize();
        let mut dense_tilde_sq = 0.0;
        for j in 0..5 {
            let t = oa.tilde_entry_sq(j).unwrap();
            assert!(t + 1e-12 >= x[j] * x[j], "domination fails at {j}");
            dense_tilde_sq += t;
        }
        let rel = (dense_tilde_sq - oa.tilde_norm_sq()).abs() / oa.tilde_norm_sq();
        assert!(rel < 1e-10);
    }

    #[test]
    fn orthogonal_unit_rows_phi_equals_k() {
        let a = arc(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let mut y = SparseDescription::empty(a, DescriptionBasis::MatrixRows);
        for i in 0..3 {
            y.add(i, 1.0);
        }
        let oa = OversampledAccess::build(&y).unwrap();
        let x = y.materialize();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((oa.phi_given_norm(norm) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_single_entry() {
        let a = arc(2, 2, &[0.0, 3.0, 0.0, 1.0]);
        let mut y = SparseDescription::empty(a, DescriptionBasis::MatrixRows);
        y.add(0, 1.0);
        let oa = OversampledAccess::build(&y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            assert_eq!(oa.rejection_sample(&mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn empty_description_rejected() {
        let a = arc(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let y = SparseDescription::empty(a, DescriptionBasis::MatrixRows);
        assert!(matches!(
            OversampledAccess::build(&y),
            Err(Error::EmptyDistribution)
        ));
    }

    #[test]
    fn cancellation_trips_the_cap_and_flag() {
        // Two identical rows with opposite coefficients: x = 0 exactly.
        let a = arc(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        let mut y = SparseDescription::empty(a, DescriptionBasis::MatrixRows);
        y.add(0, 1.0);
        y.add(1, -1.0);
        let oa = OversampledAccess::build(&y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            oa.rejection_sample(&mut rng),
            Err(Error::SamplingFailure { .. })
        ));
        let est = oa.estimate_norm(0.25, 0.01, &mut rng).unwrap();
        assert!(est.degenerate);
        assert!(est.value <= 0.25 * oa.tilde_norm_sq().sqrt());
    }

    #[test]
    fn coordinate_basis_two_stage() {
        let a = arc(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let mut y = SparseDescription::empty(a, DescriptionBasis::Coordinates);
        y.add(0, 3.0);
        y.add(2, 4.0);
        let oa = OversampledAccess::build(&y).unwrap();
        // phi = k for a coordinate-basis description.
        assert!((oa.phi_given_norm(5.0) - 2.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut seen = [0usize; 3];
        for _ in 0..2000 {
            seen[oa.rejection_sample(&mut rng).unwrap()] += 1;
        }
        assert_eq!(seen[1], 0);
        let frac = seen[0] as f64 / 2000.0;
        assert!((frac - 0.36).abs() < 0.04, "frac={frac}");
    }
}
