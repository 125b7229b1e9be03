//! Grid-image datasets.
//!
//! A dataset is a plain CSV of `rows x cols` reals, no header. The image is
//! cut into `block x block` tiles; each tile becomes one grid point located
//! at the tile centre, with pixel coordinates divided by `max(rows, cols)` so
//! the grid lies in `[0, 1]^2` with its aspect ratio preserved. Querying a
//! point returns the value of a uniformly drawn pixel from its tile.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::engine::Oracle;
use crate::grid::PointGrid;
use crate::rng::Stream;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}, column {col}: cannot parse '{text}' as a number")]
    Malformed {
        row: usize,
        col: usize,
        text: String,
    },
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{rows} x {cols} image is not divisible into {block} x {block} blocks")]
    Shape {
        rows: usize,
        cols: usize,
        block: usize,
    },
    #[error("dataset is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, already shifted.
    pub values: Vec<f64>,
    pub block: usize,
    pub shift: f64,
}

impl GridImage {
    pub fn new(
        rows: usize,
        cols: usize,
        raw: Vec<f64>,
        block: usize,
        shift: f64,
    ) -> Result<Self, IngestError> {
        if rows == 0 || cols == 0 || raw.is_empty() {
            return Err(IngestError::Empty);
        }
        if block == 0
            || !rows.is_multiple_of(block)
            || !cols.is_multiple_of(block)
            || raw.len() != rows * cols
        {
            return Err(IngestError::Shape { rows, cols, block });
        }
        let values = raw.into_iter().map(|v| v + shift).collect();
        Ok(Self {
            rows,
            cols,
            values,
            block,
            shift,
        })
    }

    pub fn block_rows(&self) -> usize {
        self.rows / self.block
    }

    pub fn block_cols(&self) -> usize {
        self.cols / self.block
    }

    pub fn num_blocks(&self) -> usize {
        self.block_rows() * self.block_cols()
    }

    /// Pixel values of block `k` (block-row-major order).
    pub fn block_values(&self, k: usize) -> Vec<f64> {
        let (br, bc) = (k / self.block_cols(), k % self.block_cols());
        let mut out = Vec::with_capacity(self.block * self.block);
        for r in br * self.block..(br + 1) * self.block {
            let start = r * self.cols + bc * self.block;
            out.extend_from_slice(&self.values[start..start + self.block]);
        }
        out
    }

    /// The mean of each block, i.e. the function value the subsample oracle
    /// is unbiased for.
    pub fn block_means(&self) -> Vec<f64> {
        (0..self.num_blocks())
            .map(|k| {
                let v = self.block_values(k);
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    }

    pub fn grid(&self) -> PointGrid {
        let scale = self.rows.max(self.cols) as f64;
        let half = self.block as f64 / 2.0;
        let points = (0..self.block_rows())
            .flat_map(|br| {
                (0..self.block_cols()).map(move |bc| {
                    vec![
                        (bc * self.block) as f64 + half,
                        (br * self.block) as f64 + half,
                    ]
                })
            })
            .map(|p| p.into_iter().map(|c| c / scale).collect())
            .collect();
        PointGrid::new(points).expect("block centres are distinct")
    }

    pub fn subsample_oracle(&self) -> SubsampleOracle {
        SubsampleOracle {
            blocks: (0..self.num_blocks())
                .map(|k| self.block_values(k))
                .collect(),
        }
    }
}

/// Answers a query with a uniformly drawn pixel of the point's block.
#[derive(Debug, Clone)]
pub struct SubsampleOracle {
    blocks: Vec<Vec<f64>>,
}

impl Oracle for SubsampleOracle {
    fn query(&self, idx: usize, rng: &mut dyn RngCore) -> f64 {
        let b = &self.blocks[idx];
        b[rng.random_range(0..b.len())]
    }

    fn stream(&self) -> Stream {
        Stream::OracleSubsampling
    }
}

pub(crate) fn parse_csv(text: &str) -> Result<(usize, usize, Vec<f64>), IngestError> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut found = 0;
        for (c, field) in line.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| IngestError::Malformed {
                row: r + 1,
                col: c + 1,
                text: field.to_string(),
            })?;
            values.push(v);
            found += 1;
        }
        match cols {
            None => cols = Some(found),
            Some(expected) if expected != found => {
                return Err(IngestError::Ragged {
                    row: r + 1,
                    expected,
                    found,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    match cols {
        Some(c) => Ok((rows, c, values)),
        None => Err(IngestError::Empty),
    }
}

pub fn load_grid_image(
    path: &Path,
    block: usize,
    shift: f64,
) -> Result<(PointGrid, GridImage), IngestError> {
    let text = std::fs::read_to_string(path)?;
    let (rows, cols, raw) = parse_csv(&text)?;
    let image = GridImage::new(rows, cols, raw, block, shift)?;
    Ok((image.grid(), image))
}

/// Write `values` (row-major) as a headerless CSV that [`load_grid_image`]
/// reads back exactly.
pub fn write_grid_csv(
    path: &Path,
    rows: usize,
    cols: usize,
    values: &[f64],
) -> std::io::Result<()> {
    assert_eq!(
        values.len(),
        rows * cols,
        "value count must equal rows * cols"
    );
    let mut out = String::with_capacity(values.len() * 8);
    for row in values.chunks(cols) {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            // Display for f64 round-trips exactly
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    std::fs::write(path, out)
}
