use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nordstrom_cli::config::{read_json, ExperimentConfig};
use nordstrom_cli::error::{CliError, EXIT_CHECK_FAILED, EXIT_OK};
use nordstrom_cli::{certify, run, sweep, verify};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "nordstrom",
    version,
    about = "Experiments for the damped cubic wave equation on the 3-torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat an experiment over values of one numeric field.
    Sweep {
        config: PathBuf,
        /// Dotted field path, or one of `a0`, `kappa`, `n`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Blow-up bound for constant source floor and data means.
    Certify {
        #[arg(long, allow_hyphen_values = true)]
        a0: f64,
        #[arg(long, allow_hyphen_values = true)]
        f0: f64,
        #[arg(long, allow_hyphen_values = true)]
        g0: f64,
        #[arg(long)]
        kappa: f64,
    },
    /// Built-in invariant suite.
    Verify,
}

fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|e| CliError::config("values", format!("{v:?}: {e}")))
        })
        .collect()
}

fn execute(command: Command) -> Result<u8, CliError> {
    let start = Instant::now();
    match command {
        Command::Run { config, out } => {
            let mut value = read_json(&config)?;
            if let (Some(out), Value::Object(map)) = (out, &mut value) {
                map.insert("output_dir".into(), Value::from(out.to_string_lossy().into_owned()));
            }
            let config = ExperimentConfig::from_value(value)?;
            let report = run::run_experiment(&config)?;
            for c in &report.checks {
                let status = serde_json::to_value(c.status).expect("status serializes");
                println!("{:<11} {:<15} {}", c.name, status.as_str().unwrap_or(""), c.detail);
            }
            println!(
                "solver: {:?}, last t = {}",
                report.solver.status, report.solver.last_time
            );
            println!("outputs in {}", config.output_dir.display());
            println!("wall time {:.3} s", start.elapsed().as_secs_f64());
            Ok(report.exit_code)
        }
        Command::Sweep {
            config,
            param,
            values,
            parallel,
        } => {
            let base = read_json(&config)?;
            let values = parse_values(&values)?;
            let (rows, code) = sweep::sweep(&base, &param, &values, parallel)?;
            let failed = rows.iter().filter(|r| r.exit_code != EXIT_OK).count();
            println!("{} runs, {failed} with nonzero exit", rows.len());
            println!("wall time {:.3} s", start.elapsed().as_secs_f64());
            Ok(code)
        }
        Command::Certify { a0, f0, g0, kappa } => {
            let view = certify::certify(a0, f0, g0, kappa)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&view).expect("certificate serializes")
            );
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let outcomes = verify::run_suite();
            for o in &outcomes {
                println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            Ok(if outcomes.iter().all(|o| o.pass) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if std::env::var_os("NORDSTROM_THREADS").is_some() {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(nordstrom_cli::thread_cap())
            .build_global();
    }
    let code = execute(cli.command).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code)
}
