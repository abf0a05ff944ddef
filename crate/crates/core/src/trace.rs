//! Per-iteration diagnostics emitted by the solvers.

use serde::Serialize;

use crate::sq::MatrixSq;
use crate::sum::compensated_sum;

/// Step-indexed records of a solve. Vectors are either empty (the quantity
/// was not recorded) or have length equal to `iterations`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IterationTrace {
    /// Steps actually executed (may stop short of the schedule on early stop).
    pub iterations: usize,
    /// ||A x_k - b|| after each step; recorded only with trace tracking on.
    pub residual_norms: Vec<f64>,
    /// ||x_k - x*|| after each step; recorded when a reference solution is
    /// supplied.
    pub error_norms: Vec<f64>,
    /// Support size of the coefficient vector (nonzero count of x for the
    /// primal solvers).
    pub support_sizes: Vec<usize>,
    /// ||y_k||_Lambda with Lambda = diag(||A_{i*}||^2); dual solvers only.
    pub lambda_norms: Vec<f64>,
    /// Sampled-estimator deviation mu_k per step; sampled solvers only
    /// (batch mean for the averaged variants), recorded with tracking on.
    pub mu_values: Vec<f64>,
    /// Multiply-add count of the inner-product work in each step.
    pub inner_flops: Vec<u64>,
}

impl IterationTrace {
    /// First step index whose error norm is at or below `threshold`.
    pub fn first_error_at_most(&self, threshold: f64) -> Option<usize> {
        self.error_norms.iter().position(|&e| e <= threshold)
    }
}

/// Internal helper the solvers feed once per step.
pub(crate) struct Recorder<'a> {
    pub trace: IterationTrace,
    track: bool,
    x_star: Option<&'a [f64]>,
}

impl<'a> Recorder<'a> {
    pub fn new(track: bool, x_star: Option<&'a [f64]>, capacity: usize) -> Self {
        let mut trace = IterationTrace::default();
        trace.support_sizes.reserve(capacity);
        trace.inner_flops.reserve(capacity);
        Self {
            trace,
            track,
            x_star,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        a: &MatrixSq,
        b: &[f64],
        x: &[f64],
        support: usize,
        lambda_sq: Option<f64>,
        mu: Option<f64>,
        flops: u64,
    ) {
        self.trace.iterations += 1;
        self.trace.support_sizes.push(support);
        self.trace.inner_flops.push(flops);
        if let Some(l) = lambda_sq {
            self.trace.lambda_norms.push(l.max(0.0).sqrt());
        }
        if self.track {
            if let Some(m) = mu {
                self.trace.mu_values.push(m);
            }
            if let Ok(res) = a.residual_norm(x, b) {
                self.trace.residual_norms.push(res);
            }
        }
        if let Some(reference) = self.x_star {
            let err_sq = compensated_sum(
                x.iter()
                    .zip(reference)
                    .map(|(xi, ri)| (xi - ri) * (xi - ri)),
            );
            self.trace.error_norms.push(err_sq.max(0.0).sqrt());
        }
    }
}
