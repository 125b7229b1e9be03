use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpcb_harness::commands::{self, Overrides, Summary};
use gpcb_harness::config::Experiment;
use gpcb_harness::HarnessError;

/// Gaussian process classification bandit experiments.
#[derive(Debug, Parser)]
#[command(name = "gpcb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one policy at one w for every replication.
    Run(Common),
    /// Run every policy × w × replication.
    Sweep(Common),
    /// Tune the kernel by maximum likelihood and print a [kernel] block.
    Tune(Common),
    /// Tabulate the target function into function.csv.
    GenFunction(Common),
    /// Print instance metrics and sample-complexity bounds per w.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Largest t considered for the bounds.
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
    },
    /// Sweep and write averaged growth curves per policy and w.
    Curves(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Base seed; replication r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Policy or comma separated policies, e.g. fcb,fcb-re,tscb.
    #[arg(long)]
    policy: Option<String>,
    /// Comma separated rate thresholds, e.g. 0.2,0.4.
    #[arg(long)]
    w: Option<String>,
}

impl Common {
    fn experiment(&self) -> Result<Experiment, HarnessError> {
        let mut exp = Experiment::load(&self.config)?;
        Overrides {
            seed: self.seed,
            parallelism: self.parallelism,
            policies: self.policy.clone(),
            w: self.w.clone(),
        }
        .apply(&mut exp)?;
        Ok(exp)
    }
}

fn report(summary: Summary) -> Result<(), HarnessError> {
    for a in &summary.aggregates {
        let ci = if a.ci_defined {
            format!("{:.2}", a.ci95_halfwidth)
        } else {
            "n/a".to_string()
        };
        println!(
            "{:<8} w={:<5} n={:<4} queries {:>9.2} ± {:<8} correct {:.3}",
            a.policy, a.w, a.n_runs, a.mean_queries, ci, a.correct_fraction
        );
    }
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    if summary.failed > 0 {
        return Err(HarnessError::RunsFailed {
            failed: summary.failed,
            total: summary.runs,
        });
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(c) => report(commands::run(&c.experiment()?, &c.out, &c.config)?),
        Command::Sweep(c) => report(commands::sweep(&c.experiment()?, &c.out, &c.config)?),
        Command::Curves(c) => report(commands::curves(&c.experiment()?, &c.out, &c.config)?),
        Command::Tune(c) => {
            print!("{}", commands::tune(&c.experiment()?)?);
            Ok(())
        }
        Command::GenFunction(c) => {
            let path = commands::gen_function(&c.experiment()?, &c.out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Metrics { common, horizon } => {
            print!("{}", commands::metrics(&common.experiment()?, horizon)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
