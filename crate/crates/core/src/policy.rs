//! Arm selection policies.
//!
//! Every policy scores each uncertain point and queries the argmax. The
//! rate-estimation variants first guess which uncertain points are high
//! (`H~`), then restrict the argmax to the side that decides the answer: the
//! guessed-high points when `(|H^| + |H~|) / |D| >= w`, the rest otherwise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::confidence::IntervalState;
use crate::error::{Error, Result};
use crate::gp::PosteriorModel;

/// Straddle heuristic multiplier on the posterior standard deviation.
pub const STRADDLE_WIDTH: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    /// Farthest confidence bound: `max(upper - h, h - lower)`.
    Fcb,
    /// Level set estimation: `min(upper - h, h - lower)`.
    Lse,
    /// Farthest Thompson sampling value: `|g(x) - h|`, `g` a joint draw.
    Ftsv,
    /// Straddle: `1.96 sigma - |mu - h|`.
    Str,
    /// Posterior variance.
    Var,
    Ucb,
    Lcb,
    /// Thompson sampling: `g(x)`.
    Ts,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::Fcb,
        PolicyKind::Lse,
        PolicyKind::Ftsv,
        PolicyKind::Str,
        PolicyKind::Var,
        PolicyKind::Ucb,
        PolicyKind::Lcb,
        PolicyKind::Ts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Fcb => "fcb",
            PolicyKind::Lse => "lse",
            PolicyKind::Ftsv => "ftsv",
            PolicyKind::Str => "str",
            PolicyKind::Var => "var",
            PolicyKind::Ucb => "ucb",
            PolicyKind::Lcb => "lcb",
            PolicyKind::Ts => "ts",
        }
    }

    pub fn needs_sample(self) -> bool {
        matches!(self, PolicyKind::Ftsv | PolicyKind::Ts)
    }

    pub fn supports_rate_estimation(self) -> bool {
        matches!(
            self,
            PolicyKind::Fcb
                | PolicyKind::Lse
                | PolicyKind::Ftsv
                | PolicyKind::Str
                | PolicyKind::Var
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicySpec {
    base: PolicyKind,
    rate_estimation: bool,
}

impl PolicySpec {
    pub fn new(base: PolicyKind, rate_estimation: bool) -> Result<Self> {
        if rate_estimation && !base.supports_rate_estimation() {
            return Err(Error::InvalidArgument(format!(
                "policy {} has no rate-estimation variant",
                base.name()
            )));
        }
        Ok(Self {
            base,
            rate_estimation,
        })
    }

    pub fn plain(base: PolicyKind) -> Self {
        Self {
            base,
            rate_estimation: false,
        }
    }

    pub fn base(&self) -> PolicyKind {
        self.base
    }

    pub fn rate_estimation(&self) -> bool {
        self.rate_estimation
    }

    /// All 13 valid policies: 8 plain plus 5 rate-estimation variants.
    pub fn all() -> Vec<PolicySpec> {
        let mut v: Vec<_> = PolicyKind::ALL.iter().map(|&k| Self::plain(k)).collect();
        v.extend(
            PolicyKind::ALL
                .iter()
                .filter(|k| k.supports_rate_estimation())
                .map(|&k| Self {
                    base: k,
                    rate_estimation: true,
                }),
        );
        v
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.base.name())?;
        if self.rate_estimation {
            f.write_str("-re")?;
        }
        Ok(())
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, re) = match lower.strip_suffix("-re") {
            Some(n) => (n, true),
            None => (lower.as_str(), false),
        };
        let base = PolicyKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy '{s}'")))?;
        Self::new(base, re)
    }
}

/// Everything a policy may look at when choosing the next query.
#[derive(Debug)]
pub struct SelectionContext<'a, M> {
    /// `U_t`, the still-uncertain points.
    pub uncertain: &'a [usize],
    /// Per-point intervals, indexed by point.
    pub intervals: &'a [IntervalState],
    pub model: &'a M,
    pub h: f64,
    pub w: f64,
    /// `|H^|`
    pub certified_high: usize,
    pub domain_size: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// `a_t(x_t)`
    pub score: f64,
    /// Jitter used by the posterior draw, 0 for deterministic policies.
    pub jitter: f64,
}

/// `a_t(idx)`. `ts_draw` is the sampled function value at `idx` and must be
/// given exactly for the sampling policies.
pub fn score<M: PosteriorModel>(
    spec: &PolicySpec,
    ctx: &SelectionContext<'_, M>,
    idx: usize,
    ts_draw: Option<f64>,
) -> Result<f64> {
    let iv = ctx
        .intervals
        .get(idx)
        .ok_or_else(|| Error::InvalidArgument(format!("no interval for point {idx}")))?;
    let h = ctx.h;
    let draw = || {
        ts_draw.ok_or_else(|| {
            Error::InvalidArgument(format!("policy {} needs a sampled value", spec.base.name()))
        })
    };
    Ok(match spec.base {
        PolicyKind::Fcb => (iv.upper - h).max(h - iv.lower),
        PolicyKind::Lse => (iv.upper - h).min(h - iv.lower),
        PolicyKind::Ftsv => (draw()? - h).abs(),
        PolicyKind::Ts => draw()?,
        PolicyKind::Ucb => ctx.model.mean(idx) + ctx.beta.sqrt() * ctx.model.variance(idx)?.sqrt(),
        PolicyKind::Lcb => ctx.model.mean(idx) - ctx.beta.sqrt() * ctx.model.variance(idx)?.sqrt(),
        PolicyKind::Var => ctx.model.variance(idx)?,
        PolicyKind::Str => {
            STRADDLE_WIDTH * ctx.model.variance(idx)?.sqrt() - (ctx.model.mean(idx) - h).abs()
        }
    })
}

/// Whether an uncertain point counts as estimated-high for rate estimation.
fn estimated_high<M: PosteriorModel>(
    spec: &PolicySpec,
    ctx: &SelectionContext<'_, M>,
    idx: usize,
    ts_draw: Option<f64>,
) -> bool {
    let h = ctx.h;
    match spec.base {
        PolicyKind::Fcb | PolicyKind::Lse => {
            let iv = &ctx.intervals[idx];
            iv.upper - h >= h - iv.lower
        }
        PolicyKind::Ftsv => ts_draw.is_some_and(|g| g >= h),
        PolicyKind::Str | PolicyKind::Var => ctx.model.mean(idx) >= h,
        // rejected by PolicySpec::new
        PolicyKind::Ucb | PolicyKind::Lcb | PolicyKind::Ts => false,
    }
}

/// Pick the next query point from `ctx.uncertain`. Ties go to the lowest index.
pub fn select<M: PosteriorModel, R: Rng + ?Sized>(
    spec: &PolicySpec,
    ctx: &SelectionContext<'_, M>,
    rng: &mut R,
) -> Result<Selection> {
    if ctx.uncertain.is_empty() {
        return Err(Error::InvalidArgument(
            "no uncertain points to select from".into(),
        ));
    }
    let (draws, jitter) = if spec.base.needs_sample() {
        let s = ctx.model.sample(ctx.uncertain, rng)?;
        (Some(s.values), s.jitter)
    } else {
        (None, 0.0)
    };
    let draw_at = |k: usize| draws.as_ref().map(|d| d[k]);

    let scores = ctx
        .uncertain
        .iter()
        .enumerate()
        .map(|(k, &idx)| score(spec, ctx, idx, draw_at(k)))
        .collect::<Result<Vec<f64>>>()?;

    let mut eligible = vec![true; ctx.uncertain.len()];
    if spec.rate_estimation {
        let guessed: Vec<bool> = ctx
            .uncertain
            .iter()
            .enumerate()
            .map(|(k, &idx)| estimated_high(spec, ctx, idx, draw_at(k)))
            .collect();
        let n_guessed = guessed.iter().filter(|&&g| g).count();
        let positive_side =
            (ctx.certified_high + n_guessed) as f64 / ctx.domain_size as f64 >= ctx.w;
        let designated: Vec<bool> = guessed.iter().map(|&g| g == positive_side).collect();
        if designated.iter().any(|&d| d) {
            eligible = designated;
        }
    }

    let mut best: Option<(usize, f64)> = None;
    for (k, &idx) in ctx.uncertain.iter().enumerate() {
        if !eligible[k] {
            continue;
        }
        let s = scores[k];
        let better = match best {
            None => true,
            Some((bi, bs)) => s > bs || (s == bs && idx < bi),
        };
        if better {
            best = Some((idx, s));
        }
    }
    let (index, score) = best.expect("at least one eligible point");
    Ok(Selection {
        index,
        score,
        jitter,
    })
}
