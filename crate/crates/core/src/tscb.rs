//! Uncorrelated baseline: independent normal prior `N(eta, tau^2)` per point,
//! conjugate per-point posteriors, Thompson-sampling selection with per-point
//! independent draws and otherwise the same intervals and stopping rules as
//! the GP engine.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::engine::{run_with, Oracle, ProblemSpec, RunError, RunOptions, RunRecord};
use crate::error::{Error, Result};
use crate::gp::{JointSample, PosteriorModel};
use crate::policy::{PolicyKind, PolicySpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TscbPrior {
    pub prior_mean: f64,
    pub prior_variance: f64,
}

impl Default for TscbPrior {
    fn default() -> Self {
        Self {
            prior_mean: 0.0,
            prior_variance: 1.0,
        }
    }
}

impl TscbPrior {
    pub fn new(prior_mean: f64, prior_variance: f64) -> Result<Self> {
        if !(prior_variance > 0.0) || !prior_variance.is_finite() || !prior_mean.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need finite mean and positive variance, got N({prior_mean}, {prior_variance})"
            )));
        }
        Ok(Self {
            prior_mean,
            prior_variance,
        })
    }
}

/// Per-point counts and running means.
#[derive(Debug, Clone)]
pub struct TscbState {
    prior: TscbPrior,
    noise_variance: f64,
    counts: Vec<u64>,
    means: Vec<f64>,
}

impl TscbState {
    pub fn new(domain_size: usize, prior: TscbPrior, noise_variance: f64) -> Result<Self> {
        TscbPrior::new(prior.prior_mean, prior.prior_variance)?;
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be > 0, got {noise_variance}"
            )));
        }
        Ok(Self {
            prior,
            noise_variance,
            counts: vec![0; domain_size],
            means: vec![0.0; domain_size],
        })
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn running_mean(&self, idx: usize) -> f64 {
        self.means[idx]
    }

    pub fn posterior(&self, idx: usize) -> (f64, f64) {
        tscb_posterior(
            self.counts[idx],
            self.means[idx],
            &self.prior,
            self.noise_variance,
        )
    }
}

/// Conjugate normal posterior for a point observed `n` times with sample
/// mean `ybar`.
pub fn tscb_posterior(n: u64, ybar: f64, prior: &TscbPrior, noise_variance: f64) -> (f64, f64) {
    let tau2 = prior.prior_variance;
    let n = n as f64;
    let denom = n * tau2 + noise_variance;
    (
        (n * tau2 * ybar + noise_variance * prior.prior_mean) / denom,
        tau2 * noise_variance / denom,
    )
}

impl PosteriorModel for TscbState {
    fn domain_size(&self) -> usize {
        self.counts.len()
    }

    fn mean(&self, idx: usize) -> f64 {
        self.posterior(idx).0
    }

    fn variance(&self, idx: usize) -> Result<f64> {
        if idx >= self.counts.len() {
            return Err(Error::InvalidArgument(format!(
                "point index {idx} out of range"
            )));
        }
        Ok(self.posterior(idx).1)
    }

    /// Independent per-point draws.
    fn sample<R: Rng + ?Sized>(&self, subset: &[usize], rng: &mut R) -> Result<JointSample> {
        let values = subset
            .iter()
            .map(|&i| {
                let (m, v) = self.posterior(i);
                let z: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * z
            })
            .collect();
        Ok(JointSample {
            values,
            jitter: 0.0,
        })
    }

    fn observe(&mut self, idx: usize, y: f64) -> Result<f64> {
        if idx >= self.counts.len() {
            return Err(Error::InvalidArgument(format!(
                "point index {idx} out of range"
            )));
        }
        self.counts[idx] += 1;
        self.means[idx] += (y - self.means[idx]) / self.counts[idx] as f64;
        Ok(0.0)
    }
}

/// Run the baseline on `problem`; its kernel is ignored.
pub fn run_tscb<O: Oracle + ?Sized>(
    problem: &ProblemSpec,
    prior: TscbPrior,
    oracle: &O,
    seed: u64,
    max_steps: Option<usize>,
) -> std::result::Result<RunRecord, RunError> {
    let model = TscbState::new(problem.grid.len(), prior, problem.noise_variance())
        .map_err(RunError::Setup)?;
    let policy = PolicySpec::new(PolicyKind::Ftsv, true).map_err(RunError::Setup)?;
    let opts = RunOptions {
        seed,
        max_steps,
        rate_stopping: true,
    };
    run_with(problem, policy, model, oracle, &opts, &mut ())
}
