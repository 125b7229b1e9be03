//! Per-run result rows and their per-(policy, w) summaries.

use serde::Serialize;

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub policy: String,
    pub w: f64,
    pub seed: u64,
    /// `positive`, `negative` or `error`.
    pub answer: String,
    pub truth: String,
    /// Failed runs are never correct; indeterminate instances always are.
    pub correct: bool,
    pub queries: usize,
    /// The stop reason, or the error kind for failed runs.
    pub stop_reason: String,
}

/// One line of `aggregate.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub policy: String,
    pub w: f64,
    pub n_runs: usize,
    pub mean_queries: f64,
    /// `1.96 s / sqrt(n)` with the sample standard deviation `s`; zero when
    /// `n = 1`.
    pub ci95_halfwidth: f64,
    /// `false` when `n = 1` and the halfwidth is only a placeholder.
    pub ci_defined: bool,
    pub correct_fraction: f64,
}

/// Mean and 95% normal-approximation halfwidth. The halfwidth is `None`
/// for a single sample.
///
/// # Panics
/// On an empty slice.
pub fn mean_ci(xs: &[f64]) -> (f64, Option<f64>) {
    assert!(!xs.is_empty(), "cannot summarise an empty sample");
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(Z95 * var.sqrt() / n.sqrt()))
}

/// Summarise rows that all share one policy and one w.
///
/// # Panics
/// On an empty slice.
pub fn aggregate(rows: &[ResultRow]) -> AggregateRow {
    let first = rows.first().expect("aggregate needs at least one row");
    let queries: Vec<f64> = rows.iter().map(|r| r.queries as f64).collect();
    let (mean_queries, half) = mean_ci(&queries);
    AggregateRow {
        policy: first.policy.clone(),
        w: first.w,
        n_runs: rows.len(),
        mean_queries,
        ci95_halfwidth: half.unwrap_or(0.0),
        ci_defined: half.is_some(),
        correct_fraction: rows.iter().filter(|r| r.correct).count() as f64 / rows.len() as f64,
    }
}

/// Group consecutive rows with equal (policy, w) and summarise each group.
/// Rows are expected in their canonical (policy, w, seed) order.
pub fn aggregate_all(rows: &[ResultRow]) -> Vec<AggregateRow> {
    rows.chunk_by(|a, b| a.policy == b.policy && a.w == b.w)
        .map(aggregate)
        .collect()
}
