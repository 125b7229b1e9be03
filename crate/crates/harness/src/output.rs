//! CSV and metadata writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::HarnessError;

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const METADATA_FILE: &str = "metadata.txt";

/// `curves_<policy>_<w>.csv`
pub fn curve_file_name(policy: &str, w: f64) -> String {
    format!("curves_{policy}_{w}.csv")
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Write `rows` with a header derived from the row type.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

/// Write `key = value` lines.
pub fn write_metadata(path: &Path, entries: &[(&str, String)]) -> Result<(), HarnessError> {
    let mut out = String::new();
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").expect("writing to a String");
    }
    std::fs::write(path, out).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
