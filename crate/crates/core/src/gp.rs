//! Exact GP posterior over a finite point set.
//!
//! [`GpPosterior`] keeps the lower Cholesky factor `L` of `K_t + noise * I`
//! for the `t` queried points and, for every grid point `x`, the projection
//! `v(x) = L^{-1} k_t(x)`. Appending an observation adds one row to `L` and one
//! component to every `v(x)`, so a step costs `O(|D| t)` and nothing is ever
//! refactorized. From these:
//!
//! - `mean(x) = v(x) . L^{-1} y`
//! - `cov(x, x') = k(x, x') - v(x) . v(x')`

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::kernel::KernelSpec;
use crate::linalg::{self, JITTER_SCHEDULE};

/// Negative variances down to this value are rounding noise and clamp to 0.
pub const VARIANCE_TOLERANCE: f64 = 1e-12;

/// One joint draw together with the diagonal jitter that was needed.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub values: Vec<f64>,
    pub jitter: f64,
}

/// What the engine needs from a posterior over the grid. Implemented by the
/// correlated [`GpPosterior`] and by the independent per-point
/// [`TscbState`](crate::tscb::TscbState).
pub trait PosteriorModel {
    fn domain_size(&self) -> usize;

    fn mean(&self, idx: usize) -> f64;

    fn variance(&self, idx: usize) -> Result<f64>;

    /// Draw the model's values on `subset`.
    fn sample<R: Rng + ?Sized>(&self, subset: &[usize], rng: &mut R) -> Result<JointSample>;

    /// Condition on `y` observed at `idx`. Returns the diagonal jitter that
    /// had to be added (0 when none).
    fn observe(&mut self, idx: usize, y: f64) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct GpPosterior {
    grid: Arc<PointGrid>,
    kernel: KernelSpec,
    noise_variance: f64,
    queried: Vec<(usize, f64)>,
    /// Packed rows of `L`; row `i` starts at `i (i + 1) / 2`.
    factor: Vec<f64>,
    /// `L^{-1} y`
    whitened: Vec<f64>,
    proj: Vec<Vec<f64>>,
    prior_var: Vec<f64>,
    explained: Vec<f64>,
    means: Vec<f64>,
}

impl GpPosterior {
    pub fn new(grid: Arc<PointGrid>, kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be > 0, got {noise_variance}"
            )));
        }
        let n = grid.len();
        let prior_var = grid.points().map(|p| kernel.eval_unchecked(p, p)).collect();
        Ok(Self {
            grid,
            kernel,
            noise_variance,
            queried: Vec::new(),
            factor: Vec::new(),
            whitened: Vec::new(),
            proj: vec![Vec::new(); n],
            prior_var,
            explained: vec![0.0; n],
            means: vec![0.0; n],
        })
    }

    pub fn grid(&self) -> &PointGrid {
        &self.grid
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn queried(&self) -> &[(usize, f64)] {
        &self.queried
    }

    pub fn num_observations(&self) -> usize {
        self.queried.len()
    }

    /// Row `i` of the Cholesky factor of `K_t + noise * I`.
    pub fn factor_row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.factor[start..start + i + 1]
    }

    /// `(K_t + noise * I)^{-1} y_t`, by back substitution.
    pub fn weights(&self) -> Vec<f64> {
        let t = self.queried.len();
        let mut w = self.whitened.clone();
        for i in (0..t).rev() {
            let mut s = w[i];
            for (k, wk) in w.iter().enumerate().skip(i + 1) {
                s -= self.factor_row(k)[i] * wk;
            }
            w[i] = s / self.factor_row(i)[i];
        }
        w
    }

    /// Append one observation. Returns the jitter added to the new pivot.
    pub fn condition(&mut self, idx: usize, y: f64) -> Result<f64> {
        self.grid.check_index(idx)?;
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "observation {y} is not finite"
            )));
        }
        let t = self.queried.len();
        let row = self.proj[idx].clone();
        let base = self.prior_var[idx] + self.noise_variance - self.explained[idx];
        let mut jitter = 0.0;
        let mut pivot2 = base;
        if !(pivot2 > 0.0) || !pivot2.is_finite() {
            let found = JITTER_SCHEDULE.iter().copied().find(|j| base + j > 0.0);
            match found {
                Some(j) => {
                    jitter = j;
                    pivot2 = base + j;
                }
                None => {
                    return Err(Error::Factorization {
                        pivot: t,
                        value: base,
                        jitter: JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1],
                    })
                }
            }
        }
        let pivot = pivot2.sqrt();
        let w_new = (y - linalg::dot(&row, &self.whitened)) / pivot;

        let xq = self.grid.point(idx);
        for x in 0..self.grid.len() {
            let k = self.kernel.eval_unchecked(xq, self.grid.point(x));
            let c = if x == idx {
                (pivot2 - jitter - self.noise_variance) / pivot
            } else {
                (k - linalg::dot(&row, &self.proj[x])) / pivot
            };
            self.proj[x].push(c);
            self.explained[x] += c * c;
            self.means[x] += c * w_new;
        }

        self.factor.extend_from_slice(&row);
        self.factor.push(pivot);
        self.whitened.push(w_new);
        self.queried.push((idx, y));
        Ok(jitter)
    }

    pub fn mean(&self, idx: usize) -> f64 {
        self.means[idx]
    }

    pub fn variance(&self, idx: usize) -> Result<f64> {
        self.grid.check_index(idx)?;
        clamp_variance(idx, self.prior_var[idx] - self.explained[idx])
    }

    pub fn covariance(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return self.variance(i);
        }
        self.grid.check_index(i)?;
        self.grid.check_index(j)?;
        Ok(self.raw_covariance(i, j))
    }

    fn raw_covariance(&self, i: usize, j: usize) -> f64 {
        self.kernel
            .eval_unchecked(self.grid.point(i), self.grid.point(j))
            - linalg::dot(&self.proj[i], &self.proj[j])
    }

    /// One draw from the posterior restricted to `subset`.
    pub fn sample_joint<R: Rng + ?Sized>(
        &self,
        subset: &[usize],
        rng: &mut R,
    ) -> Result<JointSample> {
        if subset.is_empty() {
            return Err(Error::InvalidArgument("sample subset is empty".into()));
        }
        for &i in subset {
            self.grid.check_index(i)?;
        }
        let m = subset.len();
        let mut cov = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..a {
                let c = self.raw_covariance(subset[a], subset[b]);
                cov[a * m + b] = c;
                cov[b * m + a] = c;
            }
            cov[a * m + a] = self.variance(subset[a])?;
        }
        let (l, jitter) = linalg::cholesky_jittered(&cov, m)?;
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let noise = linalg::lower_mul(&l, m, &z);
        let values = subset
            .iter()
            .zip(noise)
            .map(|(&i, e)| self.means[i] + e)
            .collect();
        Ok(JointSample { values, jitter })
    }
}

fn clamp_variance(idx: usize, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance {
            index: idx,
            value: v,
        })
    }
}

impl PosteriorModel for GpPosterior {
    fn domain_size(&self) -> usize {
        self.grid.len()
    }

    fn mean(&self, idx: usize) -> f64 {
        GpPosterior::mean(self, idx)
    }

    fn variance(&self, idx: usize) -> Result<f64> {
        GpPosterior::variance(self, idx)
    }

    fn sample<R: Rng + ?Sized>(&self, subset: &[usize], rng: &mut R) -> Result<JointSample> {
        self.sample_joint(subset, rng)
    }

    fn observe(&mut self, idx: usize, y: f64) -> Result<f64> {
        self.condition(idx, y)
    }
}

/// Log evidence `-1/2 y^T A^{-1} y - 1/2 log det A - t/2 log 2 pi` with
/// `A = K + noise * I` over the observed points.
pub fn log_marginal_likelihood(
    kernel: &KernelSpec,
    noise_variance: f64,
    grid: &PointGrid,
    observations: &[(usize, f64)],
) -> Result<f64> {
    kernel.validate()?;
    if observations.is_empty() {
        return Err(Error::InvalidArgument("no observations".into()));
    }
    for &(i, _) in observations {
        grid.check_index(i)?;
    }
    let t = observations.len();
    let mut a = vec![0.0; t * t];
    for (r, &(i, _)) in observations.iter().enumerate() {
        for (c, &(j, _)) in observations.iter().enumerate().take(r + 1) {
            let k = kernel.eval_unchecked(grid.point(i), grid.point(j));
            a[r * t + c] = k;
            a[c * t + r] = k;
        }
        a[r * t + r] += noise_variance;
    }
    let l = match linalg::cholesky(&a, t, 0.0) {
        Ok(l) => l,
        Err(_) => linalg::cholesky_jittered(&a, t)?.0,
    };
    let y: Vec<f64> = observations.iter().map(|&(_, y)| y).collect();
    let alpha = linalg::forward_solve(&l, t, &y);
    let log_det: f64 = (0..t).map(|i| l[i * t + i].ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * linalg::dot(&alpha, &alpha)
        - 0.5 * log_det
        - 0.5 * t as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Minimum number of observations accepted by [`tune_kernel`].
pub const MIN_TUNING_OBSERVATIONS: usize = 10;

/// Exhaustive maximum-likelihood search over `candidates`. Ties go to the
/// smallest length scale, then the smallest signal variance.
pub fn tune_kernel(
    grid: &PointGrid,
    observations: &[(usize, f64)],
    noise_variance: f64,
    candidates: &[KernelSpec],
) -> Result<KernelSpec> {
    if observations.len() < MIN_TUNING_OBSERVATIONS {
        return Err(Error::InvalidArgument(format!(
            "kernel tuning needs at least {MIN_TUNING_OBSERVATIONS} observations, got {}",
            observations.len()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate grid".into()));
    }
    let mut best: Option<(f64, KernelSpec)> = None;
    for cand in candidates {
        let Ok(score) = log_marginal_likelihood(cand, noise_variance, grid, observations) else {
            continue;
        };
        if !score.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((s, b)) => {
                score > *s
                    || (score == *s
                        && (cand.length_scale, cand.signal_variance)
                            < (b.length_scale, b.signal_variance))
            }
        };
        if better {
            best = Some((score, *cand));
        }
    }
    best.map(|(_, k)| k).ok_or(Error::NoViableCandidate)
}

/// `n` values from `lo` to `hi` inclusive, evenly spaced in log space.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Default squared-exponential search: 20 x 20 log-spaced candidates with
/// signal variance in `[0.1, 10]` and length scale in
/// `[0.05 * domain_width, domain_width]`.
pub fn default_candidates(domain_width: f64) -> Vec<KernelSpec> {
    candidate_grid((0.1, 10.0), (0.05 * domain_width, domain_width), 20)
}

pub fn candidate_grid(signal: (f64, f64), length: (f64, f64), per_axis: usize) -> Vec<KernelSpec> {
    let ls = log_spaced(length.0, length.1, per_axis);
    log_spaced(signal.0, signal.1, per_axis)
        .into_iter()
        .flat_map(|s| {
            ls.iter()
                .map(move |&l| KernelSpec::squared_exponential(s, l))
        })
        .collect()
}
