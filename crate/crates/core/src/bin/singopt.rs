use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use singopt::conditions::RegionSpec;
use singopt::experiment::{conditions_report, default_center, parse_problem, run_config_file};
use singopt::problems::build_problem;

#[derive(Parser)]
#[command(name = "singopt", version, about = "Experiments with optimizers near non-isolated minima")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solvers of a TOML experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate landscape constants around a point and print a JSON report.
    Conditions {
        #[arg(long)]
        problem: String,
        /// Problem parameter as key=value, e.g. `--param a=2`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Comma-separated coordinates; defaults to a canonical point of S.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0)]
        r_inner: f64,
        #[arg(long, default_value_t = 0.1)]
        r_outer: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn conditions(
    problem: &str,
    params: &[String],
    center: Option<Vec<f64>>,
    region: (f64, f64, usize, u64),
) -> singopt::Result<String> {
    let spec = parse_problem(problem, params)?;
    let p = build_problem(&spec)?;
    let center = match center {
        Some(c) => c,
        None => default_center(&p)?,
    };
    let (r_inner, r_outer, samples, seed) = region;
    let report = conditions_report(&p, &RegionSpec::new(&center, r_inner, r_outer, samples, seed))?;
    Ok(serde_json::to_string_pretty(&report)?)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out } => match run_config_file(&config, out.as_deref()) {
            Ok(summary) if summary.diverged() => {
                eprintln!("a solver diverged; see summary.json");
                ExitCode::from(2)
            }
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Conditions { problem, params, center, r_inner, r_outer, samples, seed } => {
            match conditions(&problem, &params, center, (r_inner, r_outer, samples, seed)) {
                Ok(json) => {
                    println!("{json}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
