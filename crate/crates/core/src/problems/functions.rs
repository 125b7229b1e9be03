use std::sync::Arc;

use crate::error::Result;
use crate::gp::GpPosterior;
use crate::grid::PointGrid;
use crate::kernel::KernelSpec;
use crate::rng;

/// `5 exp(-3 (x^2 + y^2))`
pub fn gauss_fn(x: f64, y: f64) -> f64 {
    5.0 * (-3.0 * (x * x + y * y)).exp()
}

/// `sin(10 x) + cos(4 y) - cos(3 x y)`
pub fn sinusoidal_fn(x: f64, y: f64) -> f64 {
    (10.0 * x).sin() + (4.0 * y).cos() - (3.0 * x * y).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Gauss,
    Sinusoidal,
    GpPriorDraw { seed: u64 },
    TabulatedGrid,
}

/// A target function tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    pub provenance: Provenance,
    pub values: Vec<f64>,
}

impl TargetFunction {
    pub fn gauss(grid: &PointGrid) -> Self {
        Self::from_fn(grid, Provenance::Gauss, gauss_fn)
    }

    pub fn sinusoidal(grid: &PointGrid) -> Self {
        Self::from_fn(grid, Provenance::Sinusoidal, sinusoidal_fn)
    }

    pub fn tabulated(values: Vec<f64>) -> Self {
        Self {
            provenance: Provenance::TabulatedGrid,
            values,
        }
    }

    fn from_fn(grid: &PointGrid, provenance: Provenance, f: fn(f64, f64) -> f64) -> Self {
        assert_eq!(grid.dim(), 2, "analytic benchmarks are two-dimensional");
        let values = grid.points().map(|p| f(p[0], p[1])).collect();
        Self { provenance, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One function drawn from the zero-mean GP prior, tabulated on `grid`.
pub fn gp_prior_draw(
    grid: &Arc<PointGrid>,
    kernel: KernelSpec,
    seed: u64,
) -> Result<TargetFunction> {
    // the noise variance plays no role without observations
    let prior = GpPosterior::new(grid.clone(), kernel, 1.0)?;
    let all: Vec<usize> = (0..grid.len()).collect();
    let mut rng = rng::stream(seed, rng::Stream::OracleSubsampling);
    let draw = prior.sample_joint(&all, &mut rng)?;
    Ok(TargetFunction {
        provenance: Provenance::GpPriorDraw { seed },
        values: draw.values,
    })
}
