//! One function per CLI subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::aggregate::{aggregate_all, AggregateRow, ResultRow};
use crate::config::{parse_policy_list, parse_w_list, Experiment, Target};
use crate::experiment::{self, growth_curve, RunResult};
use crate::output::{self, AGGREGATE_FILE, METADATA_FILE, RESULTS_FILE};
use crate::HarnessError;

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    /// Comma separated policy strings.
    pub policies: Option<String>,
    /// Comma separated rate thresholds.
    pub w: Option<String>,
}

impl Overrides {
    pub fn apply(&self, exp: &mut Experiment) -> Result<(), HarnessError> {
        if let Some(seed) = self.seed {
            exp.seed = seed;
        }
        if let Some(p) = self.parallelism {
            if p == 0 {
                return Err(HarnessError::Usage("--parallelism must be >= 1".into()));
            }
            exp.parallelism = p;
        }
        if let Some(list) = &self.policies {
            exp.policies = parse_policy_list(list)
                .map_err(|e| HarnessError::Usage(format!("--policy: {e}")))?;
        }
        if let Some(list) = &self.w {
            exp.ws = parse_w_list(list).map_err(|e| HarnessError::Usage(format!("--w: {e}")))?;
        }
        Ok(())
    }
}

/// What a run-producing command did.
#[derive(Debug, Clone)]
pub struct Summary {
    pub runs: usize,
    pub failed: usize,
    pub aggregates: Vec<AggregateRow>,
    pub files: Vec<PathBuf>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn execute_and_write(
    exp: &Experiment,
    out: &Path,
    command: &str,
    config_path: &Path,
    with_curves: bool,
) -> Result<Summary, HarnessError> {
    output::ensure_dir(out)?;
    let started = unix_now();
    let clock = Instant::now();
    let results = experiment::execute(exp)?;
    let rows: Vec<ResultRow> = results.iter().map(RunResult::row).collect();
    let aggregates = aggregate_all(&rows);
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();

    let mut files = vec![
        output::write_csv(&out.join(RESULTS_FILE), &rows)?,
        output::write_csv(&out.join(AGGREGATE_FILE), &aggregates)?,
    ];
    if with_curves {
        for group in results.chunk_by(|a, b| a.job.policy == b.job.policy && a.job.w == b.job.w) {
            let refs: Vec<&RunResult> = group.iter().collect();
            let name = output::curve_file_name(&group[0].job.policy.to_string(), group[0].job.w);
            files.push(output::write_csv(&out.join(name), &growth_curve(&refs))?);
        }
    }

    let meta = out.join(METADATA_FILE);
    output::write_metadata(
        &meta,
        &[
            (
                "tool",
                format!("gpcb-harness {}", env!("CARGO_PKG_VERSION")),
            ),
            ("command", command.to_string()),
            ("config", config_path.display().to_string()),
            ("target", exp.target.name().to_string()),
            ("seed", exp.seed.to_string()),
            ("replications", exp.replications.to_string()),
            ("parallelism", exp.parallelism.to_string()),
            ("policies", join(&exp.policies)),
            ("w", join(&exp.ws)),
            ("runs", results.len().to_string()),
            ("failed_runs", failed.to_string()),
            ("started_unix", started.to_string()),
            (
                "elapsed_seconds",
                format!("{:.3}", clock.elapsed().as_secs_f64()),
            ),
        ],
    )?;
    files.push(meta);
    Ok(Summary {
        runs: results.len(),
        failed,
        aggregates,
        files,
    })
}

/// A single configuration: exactly one policy and one w.
pub fn run(exp: &Experiment, out: &Path, config_path: &Path) -> Result<Summary, HarnessError> {
    if exp.policies.len() != 1 || exp.ws.len() != 1 {
        return Err(HarnessError::Usage(format!(
            "run takes one policy and one w, got {} and {}; use sweep or --policy/--w",
            exp.policies.len(),
            exp.ws.len()
        )));
    }
    execute_and_write(exp, out, "run", config_path, false)
}

/// Every policy × w × replication.
pub fn sweep(exp: &Experiment, out: &Path, config_path: &Path) -> Result<Summary, HarnessError> {
    execute_and_write(exp, out, "sweep", config_path, false)
}

/// Like [`sweep`], plus one growth-curve file per (policy, w).
pub fn curves(exp: &Experiment, out: &Path, config_path: &Path) -> Result<Summary, HarnessError> {
    execute_and_write(exp, out, "curves", config_path, true)
}

/// Tabulate the target on its grid into `out/function.csv`. GP-prior
/// targets are drawn with the experiment seed.
pub fn gen_function(exp: &Experiment, out: &Path) -> Result<PathBuf, HarnessError> {
    if matches!(exp.target, Target::Image { .. }) {
        return Err(HarnessError::Usage(
            "gen-function needs a gauss, sinusoidal, gp-prior or table target".into(),
        ));
    }
    output::ensure_dir(out)?;
    let inst = experiment::realize(exp, exp.seed)?;
    let path = out.join("function.csv");
    experiment::write_function_table(&path, &inst.grid, &inst.values)?;
    Ok(path)
}

/// Instance diagnostics as a small CSV table.
pub fn metrics(exp: &Experiment, horizon: usize) -> Result<String, HarnessError> {
    let rows = experiment::metrics(exp, horizon)?;
    let bound = |t: Option<usize>| t.map_or(format!(">{horizon}"), |t| t.to_string());
    let mut s = String::from("w,h,high_rate,delta_w,truth,T_2eps,T_gap\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.w,
            r.h,
            r.metrics.high_rate,
            r.metrics.delta_w,
            r.metrics.truth,
            bound(r.t_two_eps),
            bound(r.t_gap)
        )
        .expect("writing to a String");
    }
    Ok(s)
}

/// Tuned kernel as a `[kernel]` block ready to paste into a config.
pub fn tune(exp: &Experiment) -> Result<String, HarnessError> {
    let k = experiment::tune(exp)?;
    Ok(format!(
        "[kernel]\nkind = \"squared-exponential\"\nsignal_variance = {}\nlength_scale = {}\n# sigma_kernel = {}\n",
        k.signal_variance,
        k.length_scale,
        k.signal_variance.sqrt()
    ))
}
