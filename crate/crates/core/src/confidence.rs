//! Confidence parameter schedule and nested per-point intervals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `beta_t = 2 ln(|D| pi^2 t^2 / (6 delta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    pub domain_size: usize,
    pub delta: f64,
}

impl BetaSchedule {
    pub fn new(domain_size: usize, delta: f64) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::InvalidArgument(
                "domain size must be positive".into(),
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { domain_size, delta })
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        if t < 1 {
            return Err(Error::InvalidArgument(
                "beta_t is defined for t >= 1".into(),
            ));
        }
        let t = t as f64;
        Ok(2.0 * (self.domain_size as f64 * PI * PI * t * t / (6.0 * self.delta)).ln())
    }
}

/// How `beta_t` is produced during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    /// The growing schedule that carries the coverage guarantee.
    Schedule,
    /// Constant `sqrt(beta_t)`, as used for experiment reproduction.
    Fixed { sqrt_beta: f64 },
}

impl BetaMode {
    pub fn beta(&self, schedule: &BetaSchedule, t: usize) -> Result<f64> {
        match *self {
            BetaMode::Schedule => schedule.beta(t),
            BetaMode::Fixed { sqrt_beta } => {
                if !(sqrt_beta > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "fixed sqrt(beta) must be positive, got {sqrt_beta}"
                    )));
                }
                Ok(sqrt_beta * sqrt_beta)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    High,
    Low,
    Uncertain,
}

/// Running intersection `C_t(x)` for one point and its current label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalState {
    pub lower: f64,
    pub upper: f64,
    pub label: Label,
}

impl Default for IntervalState {
    fn default() -> Self {
        Self::unbounded()
    }
}

impl IntervalState {
    /// `C_0 = (-inf, +inf)`, uncertain.
    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            label: Label::Uncertain,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Intersect with `[mu - sqrt(beta) sigma, mu + sqrt(beta) sigma]`.
///
/// The label is left untouched; call [`classify`] afterwards. An empty
/// intersection is reported as [`Error::EmptyIntersection`] with index 0;
/// callers that know the point fill it in.
pub fn intersect_update(
    iv: IntervalState,
    mu: f64,
    sigma: f64,
    beta: f64,
) -> Result<IntervalState> {
    if !(sigma >= 0.0) || !(beta > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad interval update: mu={mu}, sigma={sigma}, beta={beta}"
        )));
    }
    if iv.label != Label::Uncertain {
        return Err(Error::InvalidArgument(
            "only uncertain points are updated".into(),
        ));
    }
    let half = beta.sqrt() * sigma;
    let lower = iv.lower.max(mu - half);
    let upper = iv.upper.min(mu + half);
    if lower > upper {
        return Err(Error::EmptyIntersection {
            index: 0,
            lower,
            upper,
        });
    }
    Ok(IntervalState {
        lower,
        upper,
        label: iv.label,
    })
}

/// High when `lower >= h - eps`, else Low when `upper < h + eps`, else Uncertain.
pub fn classify(iv: &IntervalState, h: f64, epsilon: f64) -> Label {
    if iv.lower >= h - epsilon {
        Label::High
    } else if iv.upper < h + epsilon {
        Label::Low
    } else {
        Label::Uncertain
    }
}
