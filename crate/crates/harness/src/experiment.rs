//! Realising targets and executing runs.

use std::path::Path;
use std::sync::Arc;

use gpcb_core::gp::{candidate_grid, tune_kernel};
use gpcb_core::problems::{
    gp_prior_draw, greedy_gamma, instance_metrics, load_grid_image, make_grid, median_level,
    sample_complexity_t, InstanceMetrics, SubsampleOracle, TargetFunction, Truth, GAMMA_CAP,
};
use gpcb_core::rng::{self, Stream};
use gpcb_core::{
    run_tscb, run_with, Answer, BetaSchedule, KernelSpec, NoisyTable, Oracle, PointGrid,
    ProblemSpec, RunError, RunOptions, RunRecord,
};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::aggregate::ResultRow;
use crate::config::{Experiment, PolicyChoice, Target};
use crate::HarnessError;

#[derive(Debug, Clone)]
enum InstanceOracle {
    Table(NoisyTable),
    Image(Arc<SubsampleOracle>),
}

impl Oracle for InstanceOracle {
    fn query(&self, idx: usize, rng: &mut dyn RngCore) -> f64 {
        match self {
            InstanceOracle::Table(t) => t.query(idx, rng),
            InstanceOracle::Image(o) => o.query(idx, rng),
        }
    }

    fn stream(&self) -> Stream {
        match self {
            InstanceOracle::Table(t) => t.stream(),
            InstanceOracle::Image(o) => o.stream(),
        }
    }
}

/// A concrete problem: grid, true values and a noisy oracle.
#[derive(Debug, Clone)]
pub struct Instance {
    pub grid: Arc<PointGrid>,
    /// True values; block means for image targets.
    pub values: Vec<f64>,
    oracle: InstanceOracle,
}

impl Instance {
    pub fn oracle(&self) -> &(impl Oracle + '_) {
        &self.oracle
    }
}

fn synthetic_grid(target: &Target) -> Option<PointGrid> {
    match target {
        Target::Gauss(g) | Target::Sinusoidal(g) | Target::GpPrior(g) => {
            Some(make_grid(g.a, g.b, g.n))
        }
        _ => None,
    }
}

/// Realise the target. `seed` selects the draw for GP-prior targets and is
/// ignored otherwise.
pub fn realize(exp: &Experiment, seed: u64) -> Result<Instance, HarnessError> {
    let noise = exp.problem.noise_sigma;
    let table = |grid: PointGrid, values: Vec<f64>| Instance {
        grid: Arc::new(grid),
        oracle: InstanceOracle::Table(NoisyTable::new(values.clone(), noise)),
        values,
    };
    Ok(match &exp.target {
        Target::Gauss(_) => {
            let grid = synthetic_grid(&exp.target).expect("synthetic");
            let values = TargetFunction::gauss(&grid).values;
            table(grid, values)
        }
        Target::Sinusoidal(_) => {
            let grid = synthetic_grid(&exp.target).expect("synthetic");
            let values = TargetFunction::sinusoidal(&grid).values;
            table(grid, values)
        }
        Target::GpPrior(_) => {
            let grid = Arc::new(synthetic_grid(&exp.target).expect("synthetic"));
            let values = gp_prior_draw(&grid, exp.kernel, seed)?.values;
            Instance {
                oracle: InstanceOracle::Table(NoisyTable::new(values.clone(), noise)),
                grid,
                values,
            }
        }
        Target::Image { path, block, shift } => {
            let (grid, image) =
                load_grid_image(path, *block, *shift).map_err(|source| HarnessError::Ingest {
                    path: path.clone(),
                    source,
                })?;
            Instance {
                grid: Arc::new(grid),
                values: image.block_means(),
                oracle: InstanceOracle::Image(Arc::new(image.subsample_oracle())),
            }
        }
        Target::Table { path } => {
            let (grid, values) = read_function_table(path)?;
            table(grid, values)
        }
    })
}

/// Read a table written by [`write_function_table`]: a header
/// `x0,...,x{d-1},value` followed by one row per point.
pub fn read_function_table(path: &Path) -> Result<(PointGrid, Vec<f64>), HarnessError> {
    let bad = |message: String| HarnessError::Table {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() < 2 || headers.get(headers.len() - 1) != Some("value") {
        return Err(bad("header must be x0,...,value".into()));
    }
    let dim = headers.len() - 1;
    let (mut points, mut values) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let nums = record
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.trim().parse::<f64>().map_err(|_| {
                    bad(format!(
                        "line {}, column {}: `{f}` is not a number",
                        i + 2,
                        c + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        values.push(nums[dim]);
        points.push(nums[..dim].to_vec());
    }
    let grid = PointGrid::new(points).map_err(|e| bad(e.to_string()))?;
    Ok((grid, values))
}

/// Write `values` on `grid` as a table readable by [`read_function_table`].
pub fn write_function_table(
    path: &Path,
    grid: &PointGrid,
    values: &[f64],
) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = (0..grid.dim()).map(|d| format!("x{d}")).collect();
    header.push("value".into());
    w.write_record(&header).map_err(csv_err)?;
    for (p, v) in grid.points().zip(values) {
        let mut rec: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One cell of the sweep: a policy, a rate threshold and a replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub policy: PolicyChoice,
    pub w: f64,
    pub replication: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub job: Job,
    pub seed: u64,
    pub h: f64,
    pub domain_size: usize,
    pub truth: Truth,
    pub outcome: Result<RunRecord, RunError>,
}

impl RunResult {
    pub fn queries(&self) -> usize {
        match &self.outcome {
            Ok(rec) => rec.total_queries,
            Err(e) => e.trace().map_or(0, |t| t.steps.len()),
        }
    }

    pub fn row(&self) -> ResultRow {
        let (answer, stop_reason, correct) = match &self.outcome {
            Ok(rec) => (
                rec.answer.to_string(),
                rec.stop_reason.to_string(),
                matches!(
                    (rec.answer, self.truth),
                    (_, Truth::Indeterminate)
                        | (Answer::Positive, Truth::Positive)
                        | (Answer::Negative, Truth::Negative)
                ),
            ),
            Err(e) => ("error".to_string(), e.kind().to_string(), false),
        };
        ResultRow {
            policy: self.job.policy.to_string(),
            w: self.job.w,
            seed: self.seed,
            answer,
            truth: self.truth.to_string(),
            correct,
            queries: self.queries(),
            stop_reason,
        }
    }
}

fn problem_for(exp: &Experiment, inst: &Instance, w: f64) -> (ProblemSpec, f64) {
    let h = exp.problem.h.unwrap_or_else(|| median_level(&inst.values));
    let spec = ProblemSpec {
        grid: inst.grid.clone(),
        h,
        w,
        epsilon: exp.problem.epsilon,
        delta: exp.problem.delta,
        noise_sigma: exp.problem.noise_sigma,
        kernel: exp.kernel,
        beta_mode: exp.problem.beta_mode,
        on_empty: exp.problem.on_empty,
    };
    (spec, h)
}

fn run_job(exp: &Experiment, inst: &Instance, job: Job) -> RunResult {
    let seed = exp.seed.wrapping_add(job.replication as u64);
    let (problem, h) = problem_for(exp, inst, job.w);
    let truth = instance_metrics(&inst.values, h, job.w, exp.problem.epsilon).truth;
    let opts = RunOptions {
        seed,
        max_steps: exp.max_steps,
        rate_stopping: exp.problem.rate_stopping,
    };
    let outcome = match job.policy {
        PolicyChoice::Gp(spec) => problem
            .prior()
            .map_err(RunError::Setup)
            .and_then(|model| run_with(&problem, spec, model, &inst.oracle, &opts, &mut ())),
        PolicyChoice::Tscb if exp.problem.rate_stopping => {
            run_tscb(&problem, exp.tscb, &inst.oracle, seed, exp.max_steps)
        }
        PolicyChoice::Tscb => Err(RunError::Setup(gpcb_core::Error::InvalidArgument(
            "tscb always uses rate stopping".into(),
        ))),
    };
    RunResult {
        job,
        seed,
        h,
        domain_size: inst.grid.len(),
        truth,
        outcome,
    }
}

/// Canonical order of results: policy name, then w, then seed.
fn canonical_key(r: &RunResult) -> (String, f64, u64) {
    (r.job.policy.to_string(), r.job.w, r.seed)
}

/// Run every policy × w × replication of `exp` on up to `exp.parallelism`
/// threads. Results come back in canonical (policy, w, seed) order.
pub fn execute(exp: &Experiment) -> Result<Vec<RunResult>, HarnessError> {
    let instances: Vec<Instance> = match exp.target {
        Target::GpPrior(_) => (0..exp.replications)
            .map(|r| realize(exp, exp.seed.wrapping_add(r as u64)))
            .collect::<Result<_, _>>()?,
        _ => vec![realize(exp, exp.seed)?],
    };
    let jobs: Vec<Job> = exp
        .policies
        .iter()
        .flat_map(|&policy| {
            exp.ws.iter().flat_map(move |&w| {
                (0..exp.replications).map(move |replication| Job {
                    policy,
                    w,
                    replication,
                })
            })
        })
        .collect();
    let one = |job: &Job| {
        let inst = &instances[job.replication.min(instances.len() - 1)];
        run_job(exp, inst, *job)
    };
    let mut results: Vec<RunResult> = match rayon::ThreadPoolBuilder::new()
        .num_threads(exp.parallelism)
        .build()
    {
        Ok(pool) => pool.install(|| jobs.par_iter().map(one).collect()),
        Err(_) => jobs.iter().map(one).collect(),
    };
    results.sort_by(|a, b| {
        let (ka, kb) = (canonical_key(a), canonical_key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
    });
    Ok(results)
}

/// One line of a growth-curve file.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurveRow {
    /// Number of observations made.
    pub t: usize,
    #[serde(rename = "mean_H_rate")]
    pub mean_h_rate: f64,
    #[serde(rename = "mean_L_rate")]
    pub mean_l_rate: f64,
    /// Mean of `min(t, total queries)`.
    pub mean_queries: f64,
}

/// `(|H^|, |L^|)` after classifying with `t` observations, for every `t` up
/// to the run's end.
fn partition_series(result: &RunResult) -> Vec<(usize, usize)> {
    let (steps, last) = match &result.outcome {
        Ok(rec) => (&rec.steps, Some((rec.final_high, rec.final_low))),
        Err(e) => (e.trace().map_or(&EMPTY, |t| &t.steps), None),
    };
    let mut series: Vec<(usize, usize)> = steps.iter().map(|s| (s.high, s.low)).collect();
    if let Some(end) = last.or_else(|| series.last().copied()) {
        series.push(end);
    }
    series
}

static EMPTY: Vec<gpcb_core::engine::StepRecord> = Vec::new();

/// Per-observation `(high, low)` counts, total queries and domain size.
type Series = (Vec<(usize, usize)>, usize, usize);

/// A target function with its grid origin `a` and width `b`.
type Analytic = (fn(f64, f64) -> f64, f64, f64);

/// Average growth curves of `|H^|/|D|` and `|L^|/|D|` over `results`, which
/// should share one policy and one w. Finished runs hold their final state.
pub fn growth_curve(results: &[&RunResult]) -> Vec<CurveRow> {
    let series: Vec<Series> = results
        .iter()
        .map(|r| (partition_series(r), r.queries(), r.domain_size))
        .collect();
    let horizon = series.iter().map(|s| s.0.len()).max().unwrap_or(0);
    let n = series.len().max(1) as f64;
    (0..horizon)
        .map(|t| {
            let (mut h, mut l, mut q) = (0.0, 0.0, 0.0);
            for (s, total, size) in &series {
                let (hi, lo) = s.get(t).or(s.last()).copied().unwrap_or((0, 0));
                h += hi as f64 / *size as f64;
                l += lo as f64 / *size as f64;
                q += t.min(*total) as f64;
            }
            CurveRow {
                t,
                mean_h_rate: h / n,
                mean_l_rate: l / n,
                mean_queries: q / n,
            }
        })
        .collect()
}

/// Diagnostics of the instance for one w.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub w: f64,
    pub h: f64,
    pub metrics: InstanceMetrics,
    /// `None` when the bound exceeds the horizon.
    pub t_two_eps: Option<usize>,
    pub t_gap: Option<usize>,
}

/// Instance metrics and `T(2 eps)`, `T(delta_w + eps)` under the `beta_t`
/// schedule and the greedy information-gain surrogate.
pub fn metrics(exp: &Experiment, horizon: usize) -> Result<Vec<MetricsRow>, HarnessError> {
    if horizon == 0 || horizon > GAMMA_CAP {
        return Err(HarnessError::Usage(format!(
            "horizon must lie in 1..={GAMMA_CAP}, got {horizon}"
        )));
    }
    let inst = realize(exp, exp.seed)?;
    let noise_var = exp.problem.noise_sigma.powi(2);
    let gamma = greedy_gamma(&inst.grid, exp.kernel, noise_var, horizon)?;
    let sched = BetaSchedule::new(inst.grid.len(), exp.problem.delta)?;
    let t_of = |gap: f64| {
        sample_complexity_t(
            gap,
            |t| sched.beta(t).expect("t >= 1"),
            |t| gamma[t - 1],
            noise_var,
            horizon,
        )
    };
    let eps = exp.problem.epsilon;
    Ok(exp
        .ws
        .iter()
        .map(|&w| {
            let (_, h) = problem_for(exp, &inst, w);
            let m = instance_metrics(&inst.values, h, w, eps);
            MetricsRow {
                w,
                h,
                metrics: m,
                t_two_eps: t_of(2.0 * eps),
                t_gap: t_of(m.delta_w + eps),
            }
        })
        .collect())
}

/// Maximum-likelihood kernel tuning on `exp.tune.samples` noisy samples.
/// Synthetic functions are sampled at uniform points of their square;
/// other targets at distinct uniform grid points.
pub fn tune(exp: &Experiment) -> Result<KernelSpec, HarnessError> {
    let samples = exp.tune.samples;
    let mut rng = rng::stream(exp.seed, Stream::OracleSubsampling);
    let noise = exp.problem.noise_sigma;
    let analytic: Option<Analytic> = match &exp.target {
        Target::Gauss(g) => Some((gpcb_core::problems::gauss_fn, g.a, g.b)),
        Target::Sinusoidal(g) => Some((gpcb_core::problems::sinusoidal_fn, g.a, g.b)),
        _ => None,
    };
    let (grid, ys, width) = match analytic {
        Some((f, a, b)) => {
            let pts: Vec<Vec<f64>> = (0..samples)
                .map(|_| vec![rng.random_range(a..a + b), rng.random_range(a..a + b)])
                .collect();
            let ys = pts
                .iter()
                .map(|p| f(p[0], p[1]) + noise * rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>();
            (PointGrid::new(pts)?, ys, b)
        }
        None => {
            let inst = realize(exp, exp.seed)?;
            let n = inst.grid.len();
            if n < samples {
                return Err(HarnessError::Usage(format!(
                    "tuning wants {samples} distinct points, the target has {n}"
                )));
            }
            let picks = rand::seq::index::sample(&mut rng, n, samples).into_vec();
            let mut query_rng = rng::stream(exp.seed, inst.oracle.stream());
            let ys = picks
                .iter()
                .map(|&i| inst.oracle.query(i, &mut query_rng))
                .collect();
            let pts = picks.iter().map(|&i| inst.grid.point(i).to_vec()).collect();
            (PointGrid::new(pts)?, ys, extent(&inst.grid))
        }
    };
    let obs: Vec<(usize, f64)> = ys.into_iter().enumerate().collect();
    let candidates = candidate_grid((0.1, 10.0), (0.05 * width, width), exp.tune.per_axis);
    Ok(tune_kernel(&grid, &obs, noise * noise, &candidates)?)
}

/// Largest coordinate range over all dimensions.
fn extent(grid: &PointGrid) -> f64 {
    (0..grid.dim())
        .map(|d| {
            let (lo, hi) = grid
                .points()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[d]), hi.max(p[d]))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}
