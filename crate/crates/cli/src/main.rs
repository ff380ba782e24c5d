use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use jbstar::measure::I2Policy;
use jbstar::Tolerance;
use jbstar_cli::{list_suites, run, RunConfig, DEFAULT_SEED, DEFAULT_TRIALS};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Refuse,
    Warn,
}

/// Verification suites for finite-dimensional JB*-algebras.
#[derive(Debug, Parser)]
#[command(name = "jbstar", version)]
struct Cli {
    /// Suite to run, or `list` to print the available suites.
    suite: String,
    /// Algebra descriptor (JSON).
    #[arg(long)]
    algebra: Option<PathBuf>,
    /// Map descriptor (JSON).
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRIALS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, env = "JBSTAR_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    abs_eps: Option<f64>,
    #[arg(long)]
    rel_eps: Option<f64>,
    #[arg(long)]
    cluster_eps: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
    /// Warp parameter for the counterexample suite.
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    /// What theorem-grade runs do with type I2 summands.
    #[arg(long, value_enum, default_value = "refuse")]
    i2_policy: PolicyArg,
    /// Record hypothesis failures instead of refusing to run.
    #[arg(long)]
    exploratory: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.suite == "list" {
        for (name, about) in list_suites() {
            println!("{name:<22} {about}");
        }
        return ExitCode::SUCCESS;
    }
    let d = Tolerance::default();
    let cfg = RunConfig {
        suite: cli.suite,
        algebra_path: cli.algebra,
        map_path: cli.map,
        trials: cli.trials as usize,
        seed: cli.seed,
        tol: Tolerance {
            abs_eps: cli.abs_eps.unwrap_or(d.abs_eps),
            rel_eps: cli.rel_eps.unwrap_or(d.rel_eps),
            cluster_eps: cli.cluster_eps.unwrap_or(d.cluster_eps),
        },
        out_path: cli.out,
        epsilon: cli.epsilon,
        i2_policy: match cli.i2_policy {
            PolicyArg::Refuse => I2Policy::Refuse,
            PolicyArg::Warn => I2Policy::Warn,
        },
        exploratory: cli.exploratory,
    };
    match run(&cfg) {
        Ok(doc) => {
            if cli.json {
                println!("{}", doc.to_json());
            } else {
                print!("{}", doc.summary());
            }
            ExitCode::from(doc.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("jbstar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
