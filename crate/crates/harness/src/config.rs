//! Experiment configuration.
//!
//! A config is a TOML document. Unknown keys are rejected and every error
//! carries the line and column it refers to.
//!
//! ```toml
//! seed = 0             # replication r uses seed + r
//! replications = 10
//! parallelism = 4
//! policies = ["fcb", "fcb-re", "tscb"]
//! w = [0.2, 0.4, 0.6, 0.8]
//! # max_steps = 10000  # default 50 |D|
//!
//! [problem]
//! h = 0.5              # omit to use the median of the target values
//! epsilon = 1e-8
//! delta = 0.05
//! noise_sigma = 0.1
//! beta = "fixed"       # or "schedule"
//! sqrt_beta = 3.0      # used by "fixed"
//! on_empty = "abort"   # or "resolve"
//! rate_stopping = true # false runs to full level-set classification
//!
//! [target]
//! kind = "gauss"       # "sinusoidal", "gp-prior", "image", "table"
//! a = -1.0             # grid {(a + i b/n, a + j b/n)}, synthetic kinds only
//! b = 2.0
//! n = 30
//! # path = "data.csv" # image and table kinds, relative to the config file
//! # block = 10        # image kind
//! # shift = 0.0       # image kind
//!
//! [kernel]
//! kind = "squared-exponential" # or "linear"
//! signal_variance = 1.6641
//! length_scale = 0.53
//!
//! [tscb]
//! prior_mean = 0.0
//! prior_variance = 1.0
//!
//! [tune]
//! samples = 100
//! per_axis = 20
//! ```

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gpcb_core::{BetaMode, EmptyIntersectionMode, KernelSpec, PolicySpec, TscbPrior};
use serde::Deserialize;
use toml::Spanned;

/// A configuration problem located in the source text (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

/// A policy string: any [`PolicySpec`] or the uncorrelated baseline `tscb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyChoice {
    Gp(PolicySpec),
    Tscb,
}

impl fmt::Display for PolicyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyChoice::Gp(spec) => spec.fmt(f),
            PolicyChoice::Tscb => f.write_str("tscb"),
        }
    }
}

impl FromStr for PolicyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("tscb") {
            return Ok(PolicyChoice::Tscb);
        }
        s.parse::<PolicySpec>()
            .map(PolicyChoice::Gp)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Gauss(GridParams),
    Sinusoidal(GridParams),
    GpPrior(GridParams),
    Image {
        path: PathBuf,
        block: usize,
        shift: f64,
    },
    Table {
        path: PathBuf,
    },
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::Gauss(_) => "gauss",
            Target::Sinusoidal(_) => "sinusoidal",
            Target::GpPrior(_) => "gp-prior",
            Target::Image { .. } => "image",
            Target::Table { .. } => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSettings {
    /// `None` means the median of the target values.
    pub h: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub noise_sigma: f64,
    pub beta_mode: BetaMode,
    pub on_empty: EmptyIntersectionMode,
    pub rate_stopping: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneSettings {
    pub samples: usize,
    pub per_axis: usize,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub seed: u64,
    pub replications: usize,
    pub parallelism: usize,
    pub policies: Vec<PolicyChoice>,
    pub ws: Vec<f64>,
    pub max_steps: Option<usize>,
    pub problem: ProblemSettings,
    pub target: Target,
    pub kernel: KernelSpec,
    pub tscb: TscbPrior,
    pub tune: TuneSettings,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    replications: Option<Spanned<usize>>,
    parallelism: Option<Spanned<usize>>,
    policies: Option<Vec<Spanned<String>>>,
    w: Option<Vec<Spanned<f64>>>,
    max_steps: Option<Spanned<usize>>,
    #[serde(default)]
    problem: RawProblem,
    target: Spanned<RawTarget>,
    #[serde(default)]
    kernel: RawKernel,
    #[serde(default)]
    tscb: RawTscb,
    #[serde(default)]
    tune: RawTune,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    h: Option<Spanned<f64>>,
    epsilon: Option<Spanned<f64>>,
    delta: Option<Spanned<f64>>,
    noise_sigma: Option<Spanned<f64>>,
    beta: Option<BetaKind>,
    sqrt_beta: Option<Spanned<f64>>,
    on_empty: Option<OnEmpty>,
    rate_stopping: Option<bool>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BetaKind {
    Fixed,
    Schedule,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum OnEmpty {
    Abort,
    Resolve,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TargetKind {
    Gauss,
    Sinusoidal,
    GpPrior,
    Image,
    Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    kind: TargetKind,
    a: Option<f64>,
    b: Option<Spanned<f64>>,
    n: Option<Spanned<usize>>,
    path: Option<String>,
    block: Option<Spanned<usize>>,
    shift: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawKernelKind {
    #[default]
    SquaredExponential,
    Linear,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(default)]
    kind: RawKernelKind,
    signal_variance: Option<Spanned<f64>>,
    length_scale: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTscb {
    prior_mean: Option<f64>,
    prior_variance: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTune {
    samples: Option<Spanned<usize>>,
    per_axis: Option<Spanned<usize>>,
}

/// Maps byte offsets to 1-based line and column.
struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn at(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        let offset = span.start.min(self.text.len());
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ConfigError {
            line,
            column,
            message: message.into(),
        }
    }

    fn check<T: Copy + fmt::Display>(
        &self,
        value: &Option<Spanned<T>>,
        default: T,
        ok: impl Fn(T) -> bool,
        what: &str,
    ) -> Result<T, ConfigError> {
        match value {
            None => Ok(default),
            Some(s) if ok(*s.get_ref()) => Ok(*s.get_ref()),
            Some(s) => Err(self.at(s.span(), format!("{what}, got {}", s.get_ref()))),
        }
    }
}

const DEFAULT_POLICIES: &[&str] = &["fcb"];
const DEFAULT_WS: &[f64] = &[0.5];

impl Experiment {
    /// Parse and validate; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let loc = Locator { text };
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let span = e.span().unwrap_or(0..0);
            loc.at(span, e.message().trim().to_string())
        })?;

        let positive = |v: f64| v > 0.0 && v.is_finite();
        let replications = loc.check(
            &raw.replications,
            1,
            |r| r >= 1,
            "replications must be >= 1",
        )?;
        let parallelism = loc.check(&raw.parallelism, 1, |p| p >= 1, "parallelism must be >= 1")?;
        let max_steps = match &raw.max_steps {
            Some(s) if *s.get_ref() == 0 => return Err(loc.at(s.span(), "max_steps must be >= 1")),
            other => other.as_ref().map(|s| *s.get_ref()),
        };

        let policies = match &raw.policies {
            None => DEFAULT_POLICIES
                .iter()
                .map(|p| p.parse().expect("valid default"))
                .collect(),
            Some(list) => {
                if list.is_empty() {
                    return Err(loc.at(0..0, "policies must not be empty"));
                }
                list.iter()
                    .map(|s| s.get_ref().parse().map_err(|e: String| loc.at(s.span(), e)))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let ws = match &raw.w {
            None => DEFAULT_WS.to_vec(),
            Some(list) => {
                if list.is_empty() {
                    return Err(loc.at(0..0, "w must not be empty"));
                }
                list.iter()
                    .map(|s| {
                        loc.check(
                            &Some(s.clone()),
                            0.0,
                            |w| w > 0.0 && w < 1.0,
                            "w must lie in (0, 1)",
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };

        let p = &raw.problem;
        let h = match &p.h {
            Some(s) if !s.get_ref().is_finite() => return Err(loc.at(s.span(), "h must be finite")),
            other => other.as_ref().map(|s| *s.get_ref()),
        };
        let epsilon = loc.check(&p.epsilon, 1e-8, positive, "epsilon must be > 0")?;
        let delta = loc.check(
            &p.delta,
            0.05,
            |d| d > 0.0 && d < 1.0,
            "delta must lie in (0, 1)",
        )?;
        let noise_sigma = loc.check(&p.noise_sigma, 0.1, positive, "noise_sigma must be > 0")?;
        let sqrt_beta = loc.check(&p.sqrt_beta, 3.0, positive, "sqrt_beta must be > 0")?;
        let beta_mode = match p.beta.unwrap_or(BetaKind::Fixed) {
            BetaKind::Fixed => BetaMode::Fixed { sqrt_beta },
            BetaKind::Schedule => BetaMode::Schedule,
        };
        let on_empty = match p.on_empty.unwrap_or(OnEmpty::Abort) {
            OnEmpty::Abort => EmptyIntersectionMode::Abort,
            OnEmpty::Resolve => EmptyIntersectionMode::Resolve,
        };
        let problem = ProblemSettings {
            h,
            epsilon,
            delta,
            noise_sigma,
            beta_mode,
            on_empty,
            rate_stopping: p.rate_stopping.unwrap_or(true),
        };

        let target = parse_target(&loc, &raw.target, base_dir)?;

        let k = &raw.kernel;
        let signal_variance = loc.check(
            &k.signal_variance,
            1.0,
            positive,
            "signal_variance must be > 0",
        )?;
        let kernel = match k.kind {
            RawKernelKind::SquaredExponential => {
                let length_scale =
                    loc.check(&k.length_scale, 0.2, positive, "length_scale must be > 0")?;
                KernelSpec::squared_exponential(signal_variance, length_scale)
            }
            RawKernelKind::Linear => KernelSpec {
                signal_variance,
                ..KernelSpec::linear()
            },
        };

        let prior_variance = loc.check(
            &raw.tscb.prior_variance,
            1.0,
            positive,
            "prior_variance must be > 0",
        )?;
        let tscb = TscbPrior::new(raw.tscb.prior_mean.unwrap_or(0.0), prior_variance)
            .map_err(|e| loc.at(0..0, e.to_string()))?;

        let tune = TuneSettings {
            samples: loc.check(
                &raw.tune.samples,
                100,
                |s| s >= gpcb_core::gp::MIN_TUNING_OBSERVATIONS,
                "tune samples must be >= 10",
            )?,
            per_axis: loc.check(&raw.tune.per_axis, 20, |n| n >= 1, "per_axis must be >= 1")?,
        };

        Ok(Experiment {
            seed: raw.seed,
            replications,
            parallelism,
            policies,
            ws,
            max_steps,
            problem,
            target,
            kernel,
            tscb,
            tune,
        })
    }

    pub fn load(path: &Path) -> Result<Self, crate::HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| crate::HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Experiment::parse(&text, base).map_err(|source| crate::HarnessError::Config {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn parse_target(
    loc: &Locator<'_>,
    raw: &Spanned<RawTarget>,
    base_dir: &Path,
) -> Result<Target, ConfigError> {
    let span = raw.span();
    let t = raw.get_ref();
    let needs_grid = matches!(
        t.kind,
        TargetKind::Gauss | TargetKind::Sinusoidal | TargetKind::GpPrior
    );
    let unexpected = |what: &str| {
        loc.at(
            span.clone(),
            format!("`{what}` does not apply to this target kind"),
        )
    };
    if needs_grid {
        if t.path.is_some() {
            return Err(unexpected("path"));
        }
        if t.block.is_some() || t.shift.is_some() {
            return Err(unexpected("block/shift"));
        }
    } else if t.a.is_some() || t.b.is_some() || t.n.is_some() {
        return Err(unexpected("a/b/n"));
    }

    let grid = |default_a: f64| -> Result<GridParams, ConfigError> {
        Ok(GridParams {
            a: t.a.unwrap_or(default_a),
            b: loc.check(
                &t.b,
                2.0,
                |b: f64| b > 0.0 && b.is_finite(),
                "b must be > 0",
            )?,
            n: loc.check(&t.n, 30, |n| n >= 1, "n must be >= 1")?,
        })
    };
    let path = || -> Result<PathBuf, ConfigError> {
        let p = t
            .path
            .as_ref()
            .ok_or_else(|| loc.at(span.clone(), "this target kind needs `path`"))?;
        Ok(base_dir.join(p))
    };
    Ok(match t.kind {
        TargetKind::Gauss => Target::Gauss(grid(-1.0)?),
        TargetKind::Sinusoidal => Target::Sinusoidal(grid(0.0)?),
        TargetKind::GpPrior => Target::GpPrior(grid(-1.0)?),
        TargetKind::Image => {
            if t.shift.is_some_and(|s| !s.is_finite()) {
                return Err(loc.at(span.clone(), "shift must be finite"));
            }
            Target::Image {
                path: path()?,
                block: loc.check(&t.block, 10, |b| b >= 1, "block must be >= 1")?,
                shift: t.shift.unwrap_or(0.0),
            }
        }
        TargetKind::Table => {
            if t.block.is_some() || t.shift.is_some() {
                return Err(unexpected("block/shift"));
            }
            Target::Table { path: path()? }
        }
    })
}

/// Parse a comma separated `--w` list.
pub fn parse_w_list(s: &str) -> Result<Vec<f64>, String> {
    let ws = s
        .split(',')
        .map(|p| {
            let w: f64 = p
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not a number", p.trim()))?;
            if w > 0.0 && w < 1.0 {
                Ok(w)
            } else {
                Err(format!("w must lie in (0, 1), got {w}"))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ws.is_empty() {
        return Err("empty w list".into());
    }
    Ok(ws)
}

/// Parse a comma separated `--policy` list.
pub fn parse_policy_list(s: &str) -> Result<Vec<PolicyChoice>, String> {
    s.split(',').map(str::parse).collect()
}
