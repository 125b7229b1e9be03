//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p gpcb-core --test acceptance -- 1 2`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gpcb_core::confidence::Label;
use gpcb_core::engine::StepView;
use gpcb_core::problems::{
    gp_prior_draw, greedy_gamma, instance_metrics, load_grid_image, make_grid, median_level,
    sample_complexity_t, write_grid_csv, GridImage, TargetFunction, Truth,
};
use gpcb_core::{
    run, run_batch, run_tscb, run_with, Answer, BetaMode, EmptyIntersectionMode, GpPosterior,
    KernelSpec, NoisyTable, PointGrid, PolicyKind, PolicySpec, ProblemSpec, RunError, RunOptions,
    TscbPrior,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let checks: [(usize, &str, Duration, Check); 8] = [
        (1, "gauss benchmark, fcb, w=0.2", mins(1), gauss_benchmark),
        (
            2,
            "sinusoidal benchmark, fcb, w=0.8",
            mins(2),
            sinusoidal_benchmark,
        ),
        (
            3,
            "rate estimation benefit on gp-prior draws",
            mins(15),
            rate_estimation_benefit,
        ),
        (
            4,
            "correctness guarantee, binomial test",
            mins(30),
            correctness_guarantee,
        ),
        (
            5,
            "halting bounds T(2eps) and T(delta_w+eps)",
            mins(10),
            halting_bounds,
        ),
        (
            6,
            "incremental vs batch posterior, information gain",
            Duration::MAX,
            oracle_equivalence,
        ),
        (
            7,
            "instrumented run invariants",
            Duration::MAX,
            run_invariants,
        ),
        (
            8,
            "ts-cb vs ftsv-re on 960-point image grid",
            Duration::MAX,
            tscb_comparison,
        ),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();

    let mut failed = 0;
    for (id, name, limit, check) in checks {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = if limit == Duration::MAX {
            String::new()
        } else if in_time {
            format!(", limit {}s", limit.as_secs())
        } else {
            format!(", OVER LIMIT {}s", limit.as_secs())
        };
        println!(
            "[{}] {id}. {name}: {} ({:.1}s{budget})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn mins(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn correct(answer: Answer, truth: Truth) -> bool {
    matches!(
        (answer, truth),
        (_, Truth::Indeterminate)
            | (Answer::Positive, Truth::Positive)
            | (Answer::Negative, Truth::Negative)
    )
}

fn plain(kind: PolicyKind) -> PolicySpec {
    PolicySpec::plain(kind)
}

fn re(kind: PolicyKind) -> PolicySpec {
    PolicySpec::new(kind, true).expect("policy supports rate estimation")
}

fn benchmark_problem(grid: Arc<PointGrid>, h: f64, w: f64, kernel: KernelSpec) -> ProblemSpec {
    ProblemSpec {
        grid,
        h,
        w,
        epsilon: 1e-8,
        delta: 0.05,
        noise_sigma: 0.1,
        kernel,
        beta_mode: BetaMode::Fixed { sqrt_beta: 3.0 },
        on_empty: EmptyIntersectionMode::Resolve,
    }
}

/// Ten seeded runs of one benchmark table cell.
fn benchmark_cell(
    problem: &ProblemSpec,
    values: &[f64],
    expected: Answer,
    band: (f64, f64),
) -> Outcome {
    let seeds: Vec<u64> = (0..10).collect();
    let table = values.to_vec();
    let recs = run_batch(
        problem,
        plain(PolicyKind::Fcb),
        |_| NoisyTable::new(table.clone(), problem.noise_sigma),
        &seeds,
        threads(),
    );
    let mut queries = Vec::new();
    let mut wrong = 0;
    let mut errors = 0;
    let mut conflicts = 0;
    for r in &recs {
        match r {
            Ok(rec) => {
                queries.push(rec.total_queries as f64);
                conflicts += rec.conflicts.len();
                if rec.answer != expected {
                    wrong += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    let m = if queries.is_empty() {
        f64::NAN
    } else {
        mean(&queries)
    };
    Outcome {
        pass: errors == 0 && wrong == 0 && m >= band.0 && m <= band.1,
        detail: format!(
            "mean queries {m:.1} (band [{:.2}, {:.2}]), wrong {wrong}/10, errors {errors}, \
             resolved interval conflicts {conflicts}",
            band.0, band.1
        ),
    }
}

fn gauss_benchmark() -> Outcome {
    let grid = Arc::new(make_grid(-1.0, 2.0, 30));
    let f = TargetFunction::gauss(&grid);
    let kernel = KernelSpec::squared_exponential(1.29 * 1.29, 0.53);
    let p = benchmark_problem(grid, 0.5, 0.2, kernel);
    benchmark_cell(&p, &f.values, Answer::Positive, (7.0, 16.0))
}

fn sinusoidal_benchmark() -> Outcome {
    let grid = Arc::new(make_grid(0.0, 2.0, 30));
    let f = TargetFunction::sinusoidal(&grid);
    let kernel = KernelSpec::squared_exponential(1.78 * 1.78, 0.24);
    let p = benchmark_problem(grid, 0.2, 0.8, kernel);
    let truth = instance_metrics(&f.values, 0.2, 0.8, 1e-8).truth;
    assert_eq!(truth, Truth::Negative);
    benchmark_cell(&p, &f.values, Answer::Negative, (56.7 * 0.8, 56.7 * 1.2))
}

fn rate_estimation_benefit() -> Outcome {
    let grid = Arc::new(make_grid(-1.0, 2.0, 30));
    let kernel = KernelSpec::squared_exponential(1.0, 0.2);
    let draws = 50u64;
    let results: Vec<(f64, f64, usize)> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let f = gp_prior_draw(&grid, kernel, 1000 + i).expect("prior draw");
            let h = median_level(&f.values);
            let p = benchmark_problem(grid.clone(), h, 0.2, kernel);
            let oracle = NoisyTable::new(f.values.clone(), p.noise_sigma);
            let mut q = [0.0; 2];
            let mut errors = 0;
            for (k, spec) in [plain(PolicyKind::Fcb), re(PolicyKind::Fcb)]
                .into_iter()
                .enumerate()
            {
                match run(&p, spec, &oracle, i, None) {
                    Ok(rec) => q[k] = rec.total_queries as f64,
                    Err(_) => errors += 1,
                }
            }
            (q[0], q[1], errors)
        })
        .collect();
    let errors: usize = results.iter().map(|r| r.2).sum();
    let fcb = mean(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    let fcb_re = mean(&results.iter().map(|r| r.1).collect::<Vec<_>>());
    let ratio = fcb_re / fcb;
    Outcome {
        pass: errors == 0 && ratio <= 0.90,
        detail: format!(
            "{draws} draws: mean fcb {fcb:.2}, fcb-re {fcb_re:.2}, ratio {ratio:.3} (need <= 0.90), errors {errors}"
        ),
    }
}

fn small_grid() -> Arc<PointGrid> {
    Arc::new(make_grid(-1.0, 2.0, 14))
}

fn schedule_problem(grid: Arc<PointGrid>, h: f64, w: f64, epsilon: f64) -> ProblemSpec {
    ProblemSpec {
        grid,
        h,
        w,
        epsilon,
        delta: 0.05,
        noise_sigma: 0.1,
        kernel: KernelSpec::squared_exponential(1.0, 0.2),
        beta_mode: BetaMode::Schedule,
        on_empty: EmptyIntersectionMode::Abort,
    }
}

fn correctness_guarantee() -> Outcome {
    const TARGET: usize = 500;
    const WS: [f64; 5] = [0.2, 0.35, 0.5, 0.65, 0.8];
    let grid = small_grid();
    let policies = PolicySpec::all();
    let kernel = KernelSpec::squared_exponential(1.0, 0.2);

    // instances in seed order, keeping the first TARGET decided ones
    let mut instances = Vec::new();
    let mut skipped = 0;
    let mut seed = 0u64;
    while instances.len() < TARGET {
        let f = gp_prior_draw(&grid, kernel, 50_000 + seed).expect("prior draw");
        let w = WS[seed as usize % WS.len()];
        let truth = instance_metrics(&f.values, 0.0, w, 0.05).truth;
        if truth == Truth::Indeterminate {
            skipped += 1;
        } else {
            instances.push((seed, f.values, w, truth));
        }
        seed += 1;
    }
    let outcomes: Vec<Result<bool, String>> = instances
        .par_iter()
        .map(|(seed, values, w, truth)| {
            let p = schedule_problem(grid.clone(), 0.0, *w, 0.05);
            let spec = policies[*seed as usize % policies.len()];
            let oracle = NoisyTable::new(values.clone(), p.noise_sigma);
            run(&p, spec, &oracle, *seed, None)
                .map(|rec| correct(rec.answer, *truth))
                .map_err(|e| format!("{spec} seed {seed}: {e}"))
        })
        .collect();
    let n = outcomes.len() as u64;
    let errors: Vec<&String> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();
    // a failed run counts as a wrong answer
    let wrong = outcomes.iter().filter(|o| !matches!(o, Ok(true))).count() as u64;
    let positives = instances.iter().filter(|i| i.3 == Truth::Positive).count();
    let binom = Binomial::new(0.05, n).expect("valid binomial");
    let p_value = if wrong == 0 { 1.0 } else { binom.sf(wrong - 1) };
    let fraction = wrong as f64 / n as f64;
    Outcome {
        pass: fraction <= 0.05 && p_value >= 0.01,
        detail: format!(
            "{n} decided runs ({positives} positive, {skipped} indeterminate skipped): wrong {wrong} \
             ({fraction:.4}), P(X >= {wrong} | p=0.05) = {p_value:.3e}, errors {}{}",
            errors.len(),
            errors.first().map_or(String::new(), |e| format!(" e.g. {e}"))
        ),
    }
}

fn halting_bounds() -> Outcome {
    const WS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
    const INSTANCES: u64 = 20;
    let grid = small_grid();
    let kernel = KernelSpec::squared_exponential(1.0, 0.2);
    let policies = PolicySpec::all();
    let jobs: Vec<(u64, PolicySpec)> = (0..INSTANCES)
        .flat_map(|i| policies.iter().map(move |&s| (i, s)))
        .collect();
    let draws: Vec<Vec<f64>> = (0..INSTANCES)
        .map(|i| {
            gp_prior_draw(&grid, kernel, 70_000 + i)
                .expect("prior draw")
                .values
        })
        .collect();
    let problem = |i: u64| {
        let h = median_level(&draws[i as usize]);
        schedule_problem(grid.clone(), h, WS[i as usize % WS.len()], 0.2)
    };
    // (instance, policy, queries so far, coverage abort, other failure)
    let runs: Vec<(u64, PolicySpec, usize, bool, Option<String>)> = jobs
        .par_iter()
        .map(|&(i, spec)| {
            let p = problem(i);
            let oracle = NoisyTable::new(draws[i as usize].clone(), p.noise_sigma);
            match run(&p, spec, &oracle, i, None) {
                Ok(rec) => (i, spec, rec.total_queries, false, None),
                Err(e @ RunError::EmptyIntersection { .. }) => {
                    let q = e.trace().map_or(0, |t| t.steps.len());
                    (i, spec, q, true, None)
                }
                Err(e) => (i, spec, 0, false, Some(format!("{spec} run {i}: {e}"))),
            }
        })
        .collect();

    let failures: Vec<&String> = runs.iter().filter_map(|r| r.4.as_ref()).collect();
    let aborts = runs.iter().filter(|r| r.3).count();
    let allowed_aborts = (0.05 * runs.len() as f64).floor() as usize;
    let max_q = runs.iter().map(|r| r.2).max().unwrap_or(1).max(1);
    let noise_var = 0.01;
    let gamma = greedy_gamma(&grid, kernel, noise_var, max_q).expect("greedy gamma");
    let sched = problem(0).schedule().expect("schedule");
    let t_of = |gap: f64, q: usize| {
        sample_complexity_t(
            gap,
            |t| sched.beta(t).expect("t >= 1"),
            |t| gamma[t - 1],
            noise_var,
            q,
        )
    };

    let mut over_2eps = 0;
    let (mut fcb_runs, mut fcb_over) = (0, 0);
    for &(i, spec, q, aborted, _) in &runs {
        // T <= q - 1 means the run asked for more than T values
        if q > 0 && t_of(0.4, q - 1).is_some() {
            over_2eps += 1;
        }
        if spec == plain(PolicyKind::Fcb) && !aborted {
            fcb_runs += 1;
            let p = problem(i);
            let m = instance_metrics(&draws[i as usize], p.h, p.w, p.epsilon);
            if q > 0 && t_of(m.delta_w + p.epsilon, q - 1).is_some() {
                fcb_over += 1;
            }
        }
    }
    let fcb_ok = fcb_runs > 0 && (fcb_runs - fcb_over) as f64 >= 0.95 * fcb_runs as f64;
    Outcome {
        pass: failures.is_empty() && aborts <= allowed_aborts && over_2eps == 0 && fcb_ok,
        detail: format!(
            "{} runs over {} policies, max queries {max_q}: above T(2eps) {over_2eps}; \
             fcb above T(delta_w+eps) {fcb_over}/{fcb_runs}; coverage aborts {aborts} \
             (allowed {allowed_aborts}); other failures {}",
            runs.len(),
            policies.len(),
            failures.len()
        ),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_post, mut worst_gain) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let dim = rng.random_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let grid = Arc::new(PointGrid::new(pts).expect("distinct random points"));
        let kernel =
            KernelSpec::squared_exponential(rng.random_range(0.5..2.0), rng.random_range(0.2..1.0));
        let noise = rng.random_range(0.01..0.5);
        let t = rng.random_range(1..=30);

        let mut gp = GpPosterior::new(grid.clone(), kernel, noise).expect("prior");
        let mut obs = Vec::new();
        let mut gain = 0.0;
        for _ in 0..t {
            let x = rng.random_range(0..n);
            let y: f64 = rng.sample::<f64, _>(StandardNormal) * 1.5;
            gain += 0.5 * (1.0 + gp.variance(x).expect("variance") / noise).ln();
            gp.condition(x, y).expect("condition");
            obs.push((x, y));
        }

        let k = |a: usize, b: usize| kernel.eval_unchecked(grid.point(a), grid.point(b));
        let kt = DMatrix::from_fn(t, t, |r, c| k(obs[r].0, obs[c].0));
        let chol = (kt.clone() + DMatrix::identity(t, t) * noise)
            .cholesky()
            .expect("noisy Gram matrix is positive definite");
        let y = DVector::from_iterator(t, obs.iter().map(|o| o.1));
        let alpha = chol.solve(&y);
        let cross = DMatrix::from_fn(t, n, |r, x| k(obs[r].0, x));
        let solved = chol.solve(&cross);
        for x in 0..n {
            let mu = cross.column(x).dot(&alpha);
            worst_post = worst_post.max((mu - gp.mean(x)).abs());
            for x2 in 0..n {
                let cov = k(x, x2) - cross.column(x).dot(&solved.column(x2));
                worst_post =
                    worst_post.max((cov - gp.covariance(x, x2).expect("covariance")).abs());
            }
        }
        let m = DMatrix::identity(t, t) + kt / noise;
        let logdet = 2.0
            * m.cholesky()
                .expect("I + K / noise is positive definite")
                .l()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        worst_gain = worst_gain.max((gain - 0.5 * logdet).abs());
    }
    Outcome {
        pass: worst_post <= 1e-8 && worst_gain <= 1e-9,
        detail: format!(
            "100 instances: max posterior deviation {worst_post:.2e} (<= 1e-8), \
             max information-gain deviation {worst_gain:.2e} (<= 1e-9)"
        ),
    }
}

#[derive(Default)]
struct InvariantLog {
    prev: Option<Vec<gpcb_core::IntervalState>>,
    prev_high: usize,
    prev_low: usize,
    prev_fcb: Option<f64>,
    violations: Vec<String>,
}

impl InvariantLog {
    fn check(&mut self, v: &StepView<'_>, epsilon: f64, fcb: Option<bool>) {
        let tol = 1e-12;
        let mut bad = |m: String| self.violations.push(format!("t={}: {m}", v.t));
        if let Some(prev) = &self.prev {
            for (x, (old, new)) in prev.iter().zip(v.intervals).enumerate() {
                if new.lower < old.lower - tol || new.upper > old.upper + tol {
                    bad(format!("interval of {x} widened"));
                }
                if old.label != Label::Uncertain && new.label != old.label {
                    bad(format!("label of {x} changed"));
                }
            }
        }
        if v.high < self.prev_high || v.low < self.prev_low {
            bad("certified counts decreased".into());
        }
        for &x in v.uncertain {
            let beta_sigma = v.beta.sqrt() * v.sigma_prev[x];
            if beta_sigma.is_nan() || beta_sigma <= epsilon {
                bad(format!(
                    "uncertain {x} has sqrt(beta) sigma {beta_sigma} <= eps"
                ));
            }
        }
        if let (Some(nonincreasing), Some(sel)) = (fcb, v.selection) {
            let bound = 2.0 * v.beta.sqrt() * v.sigma_prev[sel.index] - epsilon;
            if sel.score > bound + 1e-9 {
                bad(format!("fcb score {} above bound {bound}", sel.score));
            }
            if nonincreasing {
                if let Some(p) = self.prev_fcb {
                    if sel.score > p + 1e-9 {
                        bad(format!("fcb score rose from {p} to {}", sel.score));
                    }
                }
                self.prev_fcb = Some(sel.score);
            }
        }
        self.prev = Some(v.intervals.to_vec());
        self.prev_high = v.high;
        self.prev_low = v.low;
    }
}

fn run_invariants() -> Outcome {
    const WS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
    let grid = small_grid();
    let kernel = KernelSpec::squared_exponential(1.0, 0.2);
    let policies = PolicySpec::all();
    let epsilon = 0.05;
    // (violations, coverage abort, other failure)
    let results: Vec<(Vec<String>, Option<String>, Option<String>)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let f = gp_prior_draw(&grid, kernel, 90_000 + i).expect("prior draw");
            let h = median_level(&f.values);
            let p = schedule_problem(grid.clone(), h, WS[i as usize % WS.len()], epsilon);
            // half the runs use fcb, the rest cycle through every policy
            let spec = if i % 2 == 0 {
                plain(PolicyKind::Fcb)
            } else {
                policies[(i / 2) as usize % policies.len()]
            };
            let fcb = (spec.base() == PolicyKind::Fcb).then_some(!spec.rate_estimation());
            let oracle = NoisyTable::new(f.values, p.noise_sigma);
            let mut log = InvariantLog::default();
            let mut observer = |v: &StepView<'_>| log.check(v, epsilon, fcb);
            let model = p.prior().expect("prior");
            let outcome = run_with(&p, spec, model, &oracle, &RunOptions::new(i), &mut observer);
            let (abort, failure) = match outcome {
                Ok(_) => (None, None),
                Err(e @ RunError::EmptyIntersection { .. }) => {
                    (Some(format!("{spec} run {i}: {e}")), None)
                }
                Err(e) => (None, Some(format!("{spec} run {i}: {e}"))),
            };
            (log.violations, abort, failure)
        })
        .collect();
    let violations: Vec<&String> = results.iter().flat_map(|r| &r.0).collect();
    let aborts: Vec<&String> = results.iter().filter_map(|r| r.1.as_ref()).collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.2.as_ref()).collect();
    // the confidence bounds may fail with probability delta
    let allowed_aborts = (0.05 * results.len() as f64).floor() as usize;
    Outcome {
        pass: violations.is_empty() && failures.is_empty() && aborts.len() <= allowed_aborts,
        detail: format!(
            "100 runs: {} violations, {} coverage aborts (allowed {allowed_aborts}), {} other failures{}",
            violations.len(),
            aborts.len(),
            failures.len(),
            violations
                .first()
                .or(failures.first())
                .or(aborts.first())
                .map_or(String::new(), |m| format!(", first: {m}"))
        ),
    }
}

fn tscb_comparison() -> Outcome {
    const ROWS: usize = 240;
    const COLS: usize = 400;
    const BLOCK: usize = 10;
    const WS: [f64; 2] = [0.3, 0.7];
    let dir = tempfile::tempdir().expect("temp dir");
    let shape = GridImage::new(ROWS, COLS, vec![0.0; ROWS * COLS], BLOCK, 0.0).expect("shape");
    let centres = Arc::new(shape.grid());
    let kernel = KernelSpec::squared_exponential(1.0, 0.1);

    let mut round_trip_ok = true;
    let mut gp_q = Vec::new();
    let mut ts_q = Vec::new();
    let mut wrong = 0;
    let mut errors = Vec::new();
    for i in 0..20u64 {
        let f = gp_prior_draw(&centres, kernel, 30_000 + i).expect("prior draw");
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let pixels: Vec<f64> = (0..ROWS * COLS)
            .map(|k| {
                let block = (k / COLS / BLOCK) * (COLS / BLOCK) + (k % COLS) / BLOCK;
                f.values[block] + 0.1 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let path = dir.path().join(format!("image_{i}.csv"));
        write_grid_csv(&path, ROWS, COLS, &pixels).expect("write csv");
        let (grid, image) = load_grid_image(&path, BLOCK, 0.0).expect("load csv");
        round_trip_ok &= image.values == pixels && grid == *centres && grid.len() == 960;

        let truth_values = image.block_means();
        let h = median_level(&truth_values);
        let w = WS[i as usize % WS.len()];
        let truth = instance_metrics(&truth_values, h, w, 1e-8).truth;
        let p = benchmark_problem(Arc::new(grid), h, w, kernel);
        let oracle = image.subsample_oracle();
        let gp = run(&p, re(PolicyKind::Ftsv), &oracle, i, None);
        let ts = run_tscb(&p, TscbPrior::default(), &oracle, i, None);
        for (rec, out) in [(gp, &mut gp_q), (ts, &mut ts_q)] {
            match rec {
                Ok(rec) => {
                    out.push(rec.total_queries as f64);
                    if !correct(rec.answer, truth) {
                        wrong += 1;
                    }
                }
                Err(e) => errors.push(format!("instance {i}: {e}")),
            }
        }
    }
    let (gp_med, ts_med) = (median(&gp_q), median(&ts_q));
    Outcome {
        pass: round_trip_ok && errors.is_empty() && wrong == 0 && ts_med >= 2.0 * gp_med,
        detail: format!(
            "20 instances: median ts-cb {ts_med:.1}, ftsv-re {gp_med:.1} (ratio {:.2}, need >= 2), \
             wrong {wrong}, errors {}, csv round trip {}",
            ts_med / gp_med,
            errors.len(),
            if round_trip_ok { "exact" } else { "MISMATCH" }
        ),
    }
}
