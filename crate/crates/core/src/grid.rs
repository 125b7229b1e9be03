use std::collections::HashSet;

use crate::error::{Error, Result};

/// Finite query set: an ordered list of unique points in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGrid {
    dim: usize,
    coords: Vec<f64>,
}

impl PointGrid {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::InvalidArgument("point grid must not be empty".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "points need at least one coordinate".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!("point {i} is not finite")));
            }
            // -0.0 and 0.0 are the same point
            let key: Vec<u64> = p.iter().map(|c| (c + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidArgument(format!("point {i} is a duplicate")));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, idx: usize) -> &[f64] {
        &self.coords[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn check_index(&self, idx: usize) -> Result<()> {
        if idx < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "point index {idx} out of range for grid of {} points",
                self.len()
            )))
        }
    }
}
