use std::fmt;

/// Ground truth of an instance at margin `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    /// `|H_{h+eps}| / |D| >= w`
    Positive,
    /// `|L_{h-eps}| / |D| > 1 - w`
    Negative,
    /// Neither; any answer is acceptable.
    Indeterminate,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::Positive => "positive",
            Truth::Negative => "negative",
            Truth::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceMetrics {
    /// `|H_h| / |D|`
    pub high_rate: f64,
    /// `|f(x^(ceil(w |D|))) - h|`
    pub delta_w: f64,
    pub truth: Truth,
}

/// Smallest `k` with `k / n >= w`, i.e. `ceil(w n)` computed the same way
/// the stopping rule compares rates.
pub fn required_high_count(w: f64, n: usize) -> usize {
    let nf = n as f64;
    let mut k = ((w * nf).ceil().max(0.0) as usize).min(n);
    while k > 0 && (k - 1) as f64 / nf >= w {
        k -= 1;
    }
    while k < n && (k as f64 / nf) < w {
        k += 1;
    }
    k
}

/// # Panics
/// On an empty value list.
pub fn instance_metrics(values: &[f64], h: f64, w: f64, epsilon: f64) -> InstanceMetrics {
    assert!(
        !values.is_empty(),
        "instance metrics need at least one value"
    );
    let n = values.len();
    let nf = n as f64;
    let high_rate = values.iter().filter(|&&v| v >= h).count() as f64 / nf;

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let rank = required_high_count(w, n).clamp(1, n);
    let delta_w = (sorted[rank - 1] - h).abs();

    let above = values.iter().filter(|&&v| v >= h + epsilon).count();
    let below = values.iter().filter(|&&v| v < h - epsilon).count();
    let truth = if above as f64 / nf >= w {
        Truth::Positive
    } else if below as f64 / nf > 1.0 - w {
        Truth::Negative
    } else {
        Truth::Indeterminate
    };
    InstanceMetrics {
        high_rate,
        delta_w,
        truth,
    }
}

/// The threshold `h` at which half the values count as high: the smallest
/// value `v` with `|{x >= v}| / n >= 1/2`.
///
/// # Panics
/// On an empty value list.
pub fn median_level(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median level of no values");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[required_high_count(0.5, values.len()) - 1]
}
