//! Problem instances: grids, target functions, dataset ingestion, instance
//! metrics and sample-complexity diagnostics.

mod complexity;
mod functions;
mod image;
mod metrics;

pub use complexity::{greedy_gamma, sample_complexity_t, GAMMA_CAP};
pub use functions::{gauss_fn, gp_prior_draw, sinusoidal_fn, Provenance, TargetFunction};
pub use image::{load_grid_image, write_grid_csv, GridImage, IngestError, SubsampleOracle};
pub use metrics::{instance_metrics, median_level, required_high_count, InstanceMetrics, Truth};

use crate::grid::PointGrid;

/// `(n + 1)^2` points `{(a + i b / n, a + j b / n)}` over `[a, a + b]^2`.
///
/// # Panics
/// If `n == 0` or `b <= 0`.
pub fn make_grid(a: f64, b: f64, n: usize) -> PointGrid {
    assert!(n >= 1 && b > 0.0, "make_grid needs n >= 1 and b > 0");
    let step = |i: usize| a + i as f64 * b / n as f64;
    let points = (0..=n)
        .flat_map(|i| (0..=n).map(move |j| vec![step(i), step(j)]))
        .collect();
    PointGrid::new(points).expect("grid points are distinct")
}
