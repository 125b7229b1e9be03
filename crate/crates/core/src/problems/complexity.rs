//! Query-budget diagnostics.
//!
//! `T(gap) = min { t : t / (beta_t gamma_t) > C1 / gap^2 }` with
//! `C1 = 8 / ln(1 + 1 / noise_variance)`. The maximum information gain
//! `gamma_t` is replaced by the greedy surrogate from [`greedy_gamma`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::grid::PointGrid;
use crate::kernel::KernelSpec;

/// Largest horizon accepted by [`greedy_gamma`].
pub const GAMMA_CAP: usize = 2000;

/// Smallest `t <= t_max` with `t / (beta(t) gamma(t)) > C1 / gap^2`, or
/// `None` when no such `t` exists up to `t_max`.
pub fn sample_complexity_t(
    gap: f64,
    beta: impl Fn(usize) -> f64,
    gamma: impl Fn(usize) -> f64,
    noise_variance: f64,
    t_max: usize,
) -> Option<usize> {
    assert!(
        gap > 0.0 && noise_variance > 0.0,
        "gap and noise variance must be positive"
    );
    let c1 = 8.0 / (1.0 + 1.0 / noise_variance).ln();
    let target = c1 / (gap * gap);
    (1..=t_max).find(|&t| t as f64 / (beta(t) * gamma(t)) > target)
}

/// Cumulative information gain `1/2 sum ln(1 + sigma_{i-1}^2(x_i) / noise)`
/// of the sequence that always queries the point of largest posterior
/// variance. Entry `t - 1` holds `gamma_t`.
pub fn greedy_gamma(
    grid: &Arc<PointGrid>,
    kernel: KernelSpec,
    noise_variance: f64,
    t_max: usize,
) -> Result<Vec<f64>> {
    if t_max > GAMMA_CAP {
        return Err(Error::InvalidArgument(format!(
            "greedy gamma horizon {t_max} exceeds cap {GAMMA_CAP}"
        )));
    }
    let mut gp = GpPosterior::new(grid.clone(), kernel, noise_variance)?;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..grid.len() {
            let v = gp.variance(i)?;
            if v > best.1 {
                best = (i, v);
            }
        }
        total += 0.5 * (1.0 + best.1 / noise_variance).ln();
        out.push(total);
        // posterior variance does not depend on the observed value
        gp.condition(best.0, 0.0)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_schedules_by_hand() {
        // C1 = 8 / ln 2 = 11.54
        let t = |gap| sample_complexity_t(gap, |_| 1.0, |_| 1.0, 1.0, 100);
        assert_eq!(t(4.0), Some(1));
        assert_eq!(t(1.0), Some(12));
        assert_eq!(sample_complexity_t(1.0, |_| 1.0, |_| 1.0, 1.0, 11), None);
    }

    #[test]
    fn first_gain_by_hand() {
        let g = Arc::new(PointGrid::new(vec![vec![0.0], vec![1.0]]).unwrap());
        let gam = greedy_gamma(&g, KernelSpec::squared_exponential(1.0, 0.3), 0.01, 3).unwrap();
        assert_abs_diff_eq!(gam[0], 0.5 * 101f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(gam[0], 2.3076, epsilon = 1e-4);
        assert!(gam.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn horizon_cap() {
        let g = Arc::new(make_grid(0.0, 1.0, 1));
        assert!(greedy_gamma(
            &g,
            KernelSpec::squared_exponential(1.0, 0.3),
            0.01,
            GAMMA_CAP + 1
        )
        .is_err());
    }
}
