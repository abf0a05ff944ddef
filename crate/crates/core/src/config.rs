//! Solver configuration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters shared by every solver. The condition numbers are inputs: the
/// solvers never estimate spectra themselves (the benchmark harness obtains
/// them from the dense oracle).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target relative error, in (0, 1].
    pub epsilon: f64,
    /// Failure probability budget for randomized access routines.
    pub delta: f64,
    /// kappa = ||A|| ||A^-1||.
    pub kappa: f64,
    /// kappa_F = ||A||_F ||A^-1||.
    pub kappa_f: f64,
    /// Inner-product sample count d; derived from the schedule when absent.
    pub sample_count: Option<usize>,
    /// Iteration count T; derived from the schedule when absent.
    pub iterations: Option<usize>,
    /// Batch size q for the averaged variants; derived when absent.
    pub batch: Option<usize>,
    /// Seed that fully determines the run.
    pub seed: u64,
    /// Record residual norms and estimator deviations per step.
    pub track_trace: bool,
    /// Optional residual tolerance checked every ceil(T/20) steps; the
    /// default is the fixed-T schedule with no early exit.
    pub early_stop: Option<f64>,
}

impl SolverConfig {
    pub fn new(epsilon: f64, kappa: f64, kappa_f: f64, seed: u64) -> Self {
        Self {
            epsilon,
            delta: 0.01,
            kappa,
            kappa_f,
            sample_count: None,
            iterations: None,
            batch: None,
            seed,
            track_trace: false,
            early_stop: None,
        }
    }

    pub fn with_iterations(mut self, t: usize) -> Self {
        self.iterations = Some(t);
        self
    }

    pub fn with_sample_count(mut self, d: usize) -> Self {
        self.sample_count = Some(d);
        self
    }

    pub fn with_batch(mut self, q: usize) -> Self {
        self.batch = Some(q);
        self
    }

    pub fn with_tracking(mut self) -> Self {
        self.track_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig("epsilon must lie in (0, 1]".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig("delta must lie in (0, 1)".into()));
        }
        if !(self.kappa.is_finite() && self.kappa >= 1.0) {
            return Err(Error::InvalidConfig("kappa must be finite and >= 1".into()));
        }
        if !(self.kappa_f.is_finite() && self.kappa_f >= self.kappa) {
            return Err(Error::InvalidConfig(
                "kappa_f must be finite and >= kappa".into(),
            ));
        }
        for (name, v) in [
            ("sample_count", self.sample_count),
            ("iterations", self.iterations),
            ("batch", self.batch),
        ] {
            if v == Some(0) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Spectral norm implied by the stored condition numbers and a Frobenius
    /// norm: ||A|| = ||A||_F * kappa / kappa_F.
    pub fn spectral_norm(&self, frobenius: f64) -> f64 {
        frobenius * self.kappa / self.kappa_f
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}
