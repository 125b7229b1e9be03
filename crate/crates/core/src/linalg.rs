//! Small dense helpers. Matrices are row-major `n x n` slices.

use crate::error::{Error, Result};

/// Additive diagonal jitter tried in order when a factorization fails.
pub(crate) const JITTER_SCHEDULE: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plain Cholesky of `a + jitter * I`. On failure returns the failing pivot
/// and the value found there.
pub(crate) fn cholesky(
    a: &[f64],
    n: usize,
    jitter: f64,
) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                let d = a[i * n + i] + jitter - s;
                if !(d > 0.0) || !d.is_finite() {
                    return Err((i, d));
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Cholesky with the escalating jitter schedule. Returns the factor and the
/// jitter that made it succeed.
pub(crate) fn cholesky_jittered(a: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let mut last = (0, f64::NAN);
    for &jitter in &JITTER_SCHEDULE {
        match cholesky(a, n, jitter) {
            Ok(l) => return Ok((l, jitter)),
            Err(e) => last = e,
        }
    }
    Err(Error::Factorization {
        pivot: last.0,
        value: last.1,
        jitter: JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1],
    })
}

/// Solve `L x = b` for lower-triangular row-major `L`.
pub(crate) fn forward_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        x[i] = (b[i] - dot(&l[i * n..i * n + i], &x[..i])) / l[i * n + i];
    }
    x
}

/// `L x` for lower-triangular row-major `L`.
pub(crate) fn lower_mul(l: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| dot(&l[i * n..i * n + i + 1], &x[..=i]))
        .collect()
}
