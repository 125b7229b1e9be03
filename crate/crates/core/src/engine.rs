//! The classification-bandit stopping loop.
//!
//! Each iteration `t` shrinks the interval of every still-uncertain point
//! using `beta_t` and the posterior after `t - 1` observations, moves points
//! whose interval clears `h - eps` (high) or stays below `h + eps` (low) out
//! of the uncertain set, and stops with
//!
//! - `Positive` once `|H^| / |D| >= w`,
//! - `Negative` once `|L^| / |D| > 1 - w`.
//!
//! Otherwise the policy picks an uncertain point, the oracle answers with a
//! noisy value and the posterior is conditioned on it.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::confidence::{classify, intersect_update, BetaMode, BetaSchedule, IntervalState, Label};
use crate::error::Error;
use crate::gp::{GpPosterior, PosteriorModel};
use crate::grid::PointGrid;
use crate::kernel::KernelSpec;
use crate::policy::{select, PolicySpec, Selection, SelectionContext};
use crate::rng::{RunStreams, Stream};

/// Step budget per grid point when no explicit budget is given.
pub const DEFAULT_STEPS_PER_POINT: usize = 50;

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Arc<PointGrid>,
    /// Value threshold `h`.
    pub h: f64,
    /// Rate threshold `w`.
    pub w: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Standard deviation of the observation noise.
    pub noise_sigma: f64,
    pub kernel: KernelSpec,
    pub beta_mode: BetaMode,
    pub on_empty: EmptyIntersectionMode,
}

/// What a run does when a point's confidence interval intersection is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EmptyIntersectionMode {
    /// Stop with [`RunError::EmptyIntersection`].
    #[default]
    Abort,
    /// Classify the point from its crossed bounds, collapse the interval to
    /// the deciding bound, record an [`IntervalConflict`] and continue.
    Resolve,
}

impl ProblemSpec {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.w > 0.0 && self.w < 1.0) {
            return bad(format!("w must lie in (0, 1), got {}", self.w));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.noise_sigma > 0.0) {
            return bad(format!("noise sigma must be > 0, got {}", self.noise_sigma));
        }
        if !self.h.is_finite() {
            return bad(format!("h must be finite, got {}", self.h));
        }
        if let BetaMode::Fixed { sqrt_beta } = self.beta_mode {
            if !(sqrt_beta > 0.0) {
                return bad(format!("fixed sqrt(beta) must be > 0, got {sqrt_beta}"));
            }
        }
        self.kernel.validate()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_sigma * self.noise_sigma
    }

    pub fn schedule(&self) -> crate::Result<BetaSchedule> {
        BetaSchedule::new(self.grid.len(), self.delta)
    }

    pub fn prior(&self) -> crate::Result<GpPosterior> {
        GpPosterior::new(self.grid.clone(), self.kernel, self.noise_variance())
    }
}

/// Noisy evaluator of the unknown function.
pub trait Oracle: Sync {
    fn query(&self, idx: usize, rng: &mut dyn RngCore) -> f64;

    /// Which of the run's random streams feeds this oracle.
    fn stream(&self) -> Stream {
        Stream::ObservationNoise
    }
}

/// Tabulated `f` plus Gaussian noise `N(0, sigma^2)`.
#[derive(Debug, Clone)]
pub struct NoisyTable {
    pub values: Vec<f64>,
    pub noise_sigma: f64,
}

impl NoisyTable {
    pub fn new(values: Vec<f64>, noise_sigma: f64) -> Self {
        Self {
            values,
            noise_sigma,
        }
    }
}

impl Oracle for NoisyTable {
    fn query(&self, idx: usize, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.values[idx] + self.noise_sigma * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Positive,
    Negative,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Positive => "positive",
            Answer::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    HighRate,
    LowRate,
    /// A stopping rule fired exactly as the uncertain set became empty.
    Exhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::HighRate => "high_rate",
            StopReason::LowRate => "low_rate",
            StopReason::Exhausted => "exhausted",
        })
    }
}

/// One query: partition sizes are those after the classification pass of
/// step `t`, before the query was made.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub index: usize,
    pub y: f64,
    pub high: usize,
    pub low: usize,
    pub uncertain: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JitterSource {
    Conditioning,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterEvent {
    pub t: usize,
    pub source: JitterSource,
    pub jitter: f64,
}

/// An empty intersection handled under [`EmptyIntersectionMode::Resolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalConflict {
    pub t: usize,
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Everything recorded before a run finished or failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub jitter_events: Vec<JitterEvent>,
    pub conflicts: Vec<IntervalConflict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub answer: Answer,
    pub stop_reason: StopReason,
    pub steps: Vec<StepRecord>,
    pub total_queries: usize,
    pub seed: u64,
    pub jitter_events: Vec<JitterEvent>,
    pub conflicts: Vec<IntervalConflict>,
    /// Partition at the moment the run stopped.
    pub final_high: usize,
    pub final_low: usize,
    pub final_uncertain: usize,
}

#[derive(Debug, Clone, Error)]
pub enum RunError {
    #[error("invalid run setup: {0}")]
    Setup(Error),
    #[error("step budget of {max_steps} queries exceeded")]
    BudgetExceeded { max_steps: usize, trace: Box<Trace> },
    #[error("{source} (step {t})")]
    EmptyIntersection {
        t: usize,
        source: Error,
        trace: Box<Trace>,
    },
    #[error("numerical failure at step {t}: {source}")]
    Numerical {
        t: usize,
        source: Error,
        trace: Box<Trace>,
    },
}

impl RunError {
    pub fn trace(&self) -> Option<&Trace> {
        match self {
            RunError::Setup(_) => None,
            RunError::BudgetExceeded { trace, .. }
            | RunError::EmptyIntersection { trace, .. }
            | RunError::Numerical { trace, .. } => Some(trace),
        }
    }

    /// Short machine-friendly tag.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Setup(_) => "setup",
            RunError::BudgetExceeded { .. } => "budget_exceeded",
            RunError::EmptyIntersection { .. } => "empty_intersection",
            RunError::Numerical { .. } => "numerical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Defaults to `50 |D|`.
    pub max_steps: Option<usize>,
    /// With `false` the rate rules are ignored and the run continues until
    /// every point is classified (level set estimation).
    pub rate_stopping: bool,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            max_steps: None,
            rate_stopping: true,
        }
    }
}

/// State visible to a [`RunObserver`] after the classification pass of step
/// `t` and the selection that followed it.
#[derive(Debug)]
pub struct StepView<'a> {
    pub t: usize,
    pub beta: f64,
    pub intervals: &'a [IntervalState],
    /// Points updated at this step (`U_{t-1}`).
    pub updated: &'a [usize],
    /// `U_t`
    pub uncertain: &'a [usize],
    /// `sigma_{t-1}(x)` for the points in `updated`, indexed by point.
    pub sigma_prev: &'a [f64],
    pub high: usize,
    pub low: usize,
    /// `None` on the final pass, when a stopping rule fired.
    pub selection: Option<Selection>,
}

pub trait RunObserver {
    fn on_step(&mut self, view: &StepView<'_>);
}

impl RunObserver for () {
    fn on_step(&mut self, _: &StepView<'_>) {}
}

impl<F: FnMut(&StepView<'_>)> RunObserver for F {
    fn on_step(&mut self, view: &StepView<'_>) {
        self(view)
    }
}

/// Run with the GP posterior implied by `problem`.
pub fn run<O: Oracle + ?Sized>(
    problem: &ProblemSpec,
    policy: PolicySpec,
    oracle: &O,
    seed: u64,
    max_steps: Option<usize>,
) -> Result<RunRecord, RunError> {
    let model = problem.prior().map_err(RunError::Setup)?;
    let opts = RunOptions {
        seed,
        max_steps,
        rate_stopping: true,
    };
    run_with(problem, policy, model, oracle, &opts, &mut ())
}

/// The general loop, for any posterior model and with an observer hook.
pub fn run_with<M, O, Obs>(
    problem: &ProblemSpec,
    policy: PolicySpec,
    mut model: M,
    oracle: &O,
    opts: &RunOptions,
    observer: &mut Obs,
) -> Result<RunRecord, RunError>
where
    M: PosteriorModel,
    O: Oracle + ?Sized,
    Obs: RunObserver + ?Sized,
{
    problem.validate().map_err(RunError::Setup)?;
    let policy =
        PolicySpec::new(policy.base(), policy.rate_estimation()).map_err(RunError::Setup)?;
    let n = problem.grid.len();
    if model.domain_size() != n {
        return Err(RunError::Setup(Error::InvalidArgument(format!(
            "model covers {} points, grid has {n}",
            model.domain_size()
        ))));
    }
    let schedule = problem.schedule().map_err(RunError::Setup)?;
    let max_steps = opts.max_steps.unwrap_or(DEFAULT_STEPS_PER_POINT * n);
    let mut streams = RunStreams::new(opts.seed);

    let mut trace = Trace {
        seed: opts.seed,
        steps: Vec::new(),
        jitter_events: Vec::new(),
        conflicts: Vec::new(),
    };
    let mut intervals = vec![IntervalState::unbounded(); n];
    let mut sigma_prev = vec![f64::NAN; n];
    let mut uncertain: Vec<usize> = (0..n).collect();
    let (mut high, mut low) = (0usize, 0usize);
    let nf = n as f64;

    let mut t = 1usize;
    loop {
        let numerical = |source: Error, trace: &Trace| RunError::Numerical {
            t,
            source,
            trace: Box::new(trace.clone()),
        };
        let beta = problem
            .beta_mode
            .beta(&schedule, t)
            .map_err(|e| numerical(e, &trace))?;

        let updated = std::mem::take(&mut uncertain);
        for &x in &updated {
            let mu = model.mean(x);
            let sd = model.variance(x).map_err(|e| numerical(e, &trace))?.sqrt();
            sigma_prev[x] = sd;
            let iv = match intersect_update(intervals[x], mu, sd, beta) {
                Ok(iv) => iv,
                Err(Error::EmptyIntersection { lower, upper, .. }) => match problem.on_empty {
                    EmptyIntersectionMode::Abort => {
                        return Err(RunError::EmptyIntersection {
                            t,
                            source: Error::EmptyIntersection {
                                index: x,
                                lower,
                                upper,
                            },
                            trace: Box::new(trace),
                        })
                    }
                    EmptyIntersectionMode::Resolve => {
                        trace.conflicts.push(IntervalConflict {
                            t,
                            index: x,
                            lower,
                            upper,
                        });
                        let b = if lower >= problem.h - problem.epsilon {
                            lower
                        } else {
                            upper
                        };
                        IntervalState {
                            lower: b,
                            upper: b,
                            label: Label::Uncertain,
                        }
                    }
                },
                Err(other) => return Err(numerical(other, &trace)),
            };
            let label = classify(&iv, problem.h, problem.epsilon);
            intervals[x] = IntervalState { label, ..iv };
            match label {
                Label::High => high += 1,
                Label::Low => low += 1,
                Label::Uncertain => uncertain.push(x),
            }
        }

        let rate_answer = if high as f64 / nf >= problem.w {
            Some((Answer::Positive, StopReason::HighRate))
        } else if low as f64 / nf > 1.0 - problem.w {
            Some((Answer::Negative, StopReason::LowRate))
        } else {
            None
        };
        let stop = match rate_answer {
            Some((answer, reason)) if opts.rate_stopping => Some((
                answer,
                if uncertain.is_empty() {
                    StopReason::Exhausted
                } else {
                    reason
                },
            )),
            _ if uncertain.is_empty() => Some((
                rate_answer.map_or(Answer::Negative, |(a, _)| a),
                StopReason::Exhausted,
            )),
            _ => None,
        };

        if let Some((answer, stop_reason)) = stop {
            observer.on_step(&StepView {
                t,
                beta,
                intervals: &intervals,
                updated: &updated,
                uncertain: &uncertain,
                sigma_prev: &sigma_prev,
                high,
                low,
                selection: None,
            });
            return Ok(RunRecord {
                answer,
                stop_reason,
                total_queries: trace.steps.len(),
                steps: trace.steps,
                seed: opts.seed,
                jitter_events: trace.jitter_events,
                conflicts: trace.conflicts,
                final_high: high,
                final_low: low,
                final_uncertain: uncertain.len(),
            });
        }

        if trace.steps.len() >= max_steps {
            return Err(RunError::BudgetExceeded {
                max_steps,
                trace: Box::new(trace),
            });
        }

        let ctx = SelectionContext {
            uncertain: &uncertain,
            intervals: &intervals,
            model: &model,
            h: problem.h,
            w: problem.w,
            certified_high: high,
            domain_size: n,
            beta,
        };
        let selection =
            select(&policy, &ctx, &mut streams.policy).map_err(|e| numerical(e, &trace))?;
        if selection.jitter > crate::linalg::JITTER_SCHEDULE[0] {
            trace.jitter_events.push(JitterEvent {
                t,
                source: JitterSource::Sampling,
                jitter: selection.jitter,
            });
        }
        observer.on_step(&StepView {
            t,
            beta,
            intervals: &intervals,
            updated: &updated,
            uncertain: &uncertain,
            sigma_prev: &sigma_prev,
            high,
            low,
            selection: Some(selection),
        });

        let x = selection.index;
        let y = oracle.query(x, streams.get_mut(oracle.stream()));
        let jitter = model.observe(x, y).map_err(|e| numerical(e, &trace))?;
        if jitter > 0.0 {
            trace.jitter_events.push(JitterEvent {
                t,
                source: JitterSource::Conditioning,
                jitter,
            });
        }
        trace.steps.push(StepRecord {
            t,
            index: x,
            y,
            high,
            low,
            uncertain: uncertain.len(),
        });
        t += 1;
    }
}

/// Independent runs over `seeds`, executed on up to `parallelism` threads.
/// Results come back in seed order; a failed run does not affect the others.
pub fn run_batch<O, F>(
    problem: &ProblemSpec,
    policy: PolicySpec,
    oracle_factory: F,
    seeds: &[u64],
    parallelism: usize,
) -> Vec<Result<RunRecord, RunError>>
where
    O: Oracle,
    F: Fn(u64) -> O + Sync,
{
    let one = |&seed: &u64| {
        let oracle = oracle_factory(seed);
        run(problem, policy, &oracle, seed, None)
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| seeds.par_iter().map(one).collect()),
        Err(_) => seeds.iter().map(one).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyKind;
    use crate::problems::make_grid;

    fn problem(h: f64, w: f64) -> ProblemSpec {
        ProblemSpec {
            grid: Arc::new(make_grid(-1.0, 2.0, 6)),
            h,
            w,
            epsilon: 0.01,
            delta: 0.05,
            noise_sigma: 0.1,
            kernel: KernelSpec::squared_exponential(1.0, 0.5),
            beta_mode: BetaMode::Fixed { sqrt_beta: 3.0 },
            on_empty: EmptyIntersectionMode::Abort,
        }
    }

    fn constant(value: f64, n: usize) -> NoisyTable {
        NoisyTable::new(vec![value; n], 0.1)
    }

    #[test]
    fn constant_above_is_positive() {
        let p = problem(0.0, 0.5);
        let rec = run(
            &p,
            PolicySpec::plain(PolicyKind::Fcb),
            &constant(1.0, 49),
            1,
            None,
        )
        .unwrap();
        assert_eq!(rec.answer, Answer::Positive);
        assert!(rec.total_queries > 0);
    }

    #[test]
    fn constant_below_is_negative() {
        let p = problem(0.0, 0.5);
        let rec = run(
            &p,
            PolicySpec::plain(PolicyKind::Fcb),
            &constant(-1.0, 49),
            1,
            None,
        )
        .unwrap();
        assert_eq!(rec.answer, Answer::Negative);
    }

    #[test]
    fn partition_invariants_hold() {
        let p = problem(0.0, 0.3);
        let f: Vec<f64> = p.grid.points().map(|x| x[0] + 0.5 * x[1]).collect();
        for policy in PolicySpec::all() {
            let rec = run(&p, policy, &NoisyTable::new(f.clone(), 0.1), 5, None).unwrap();
            let mut prev = (0, 0);
            for s in &rec.steps {
                assert_eq!(s.high + s.low + s.uncertain, 49);
                assert!(s.high >= prev.0 && s.low >= prev.1);
                prev = (s.high, s.low);
            }
            assert_eq!(rec.final_high + rec.final_low + rec.final_uncertain, 49);
            assert_eq!(rec.total_queries, rec.steps.len());
        }
    }

    #[test]
    fn budget_error_carries_trace() {
        let p = problem(0.0, 0.5);
        let err = run(
            &p,
            PolicySpec::plain(PolicyKind::Fcb),
            &constant(1.0, 49),
            1,
            Some(2),
        )
        .unwrap_err();
        match &err {
            RunError::BudgetExceeded { max_steps, trace } => {
                assert_eq!(*max_steps, 2);
                assert_eq!(trace.steps.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(err.kind(), "budget_exceeded");
    }

    #[test]
    fn invalid_problem_rejected() {
        let mut p = problem(0.0, 0.5);
        p.w = 1.0;
        assert!(matches!(
            run(
                &p,
                PolicySpec::plain(PolicyKind::Fcb),
                &constant(1.0, 49),
                1,
                None
            ),
            Err(RunError::Setup(_))
        ));
        let mut p = problem(0.0, 0.5);
        p.epsilon = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn batch_matches_single_runs_in_order() {
        let p = problem(0.0, 0.4);
        let f: Vec<f64> = p.grid.points().map(|x| x[0] * x[1] + 0.2).collect();
        let policy = PolicySpec::new(PolicyKind::Ftsv, true).unwrap();
        let seeds = [4, 9, 1];
        let batch = run_batch(&p, policy, |_| NoisyTable::new(f.clone(), 0.1), &seeds, 3);
        for (r, &s) in batch.iter().zip(&seeds) {
            let single = run(&p, policy, &NoisyTable::new(f.clone(), 0.1), s, None).unwrap();
            assert_eq!(r.as_ref().unwrap(), &single);
        }
        let again = run_batch(&p, policy, |_| NoisyTable::new(f.clone(), 0.1), &seeds, 1);
        assert_eq!(
            batch
                .iter()
                .map(|r| r.as_ref().unwrap().clone())
                .collect::<Vec<_>>(),
            again.into_iter().map(|r| r.unwrap()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn level_set_mode_classifies_everything() {
        let p = problem(0.0, 0.5);
        let f: Vec<f64> = p.grid.points().map(|x| x[0] + 0.3).collect();
        let opts = RunOptions {
            rate_stopping: false,
            ..RunOptions::new(2)
        };
        let rec = run_with(
            &p,
            PolicySpec::plain(PolicyKind::Fcb),
            p.prior().unwrap(),
            &NoisyTable::new(f, 0.1),
            &opts,
            &mut (),
        )
        .unwrap();
        assert_eq!(rec.final_uncertain, 0);
        assert_eq!(rec.stop_reason, StopReason::Exhausted);
    }
}
