use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qopt::harness::{self, exit_code, ExperimentConfig};
use qopt::{Execution, QoptError};

#[derive(Parser)]
#[command(name = "qopt", version, about = "Constrained quasar-convex optimization experiments")]
struct Cli {
    /// Run sample loops and sweeps on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace CSV.
    Run { config: PathBuf },
    /// Run the property-verification suite.
    Verify {
        /// Comma-separated check names or family prefixes (default: all).
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
        /// List check names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Run a config over a parameter grid.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "sweep_out")]
        out_dir: PathBuf,
    },
}

fn read_json(path: &PathBuf, field: &str) -> Result<serde_json::Value, QoptError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QoptError::config(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| QoptError::config(field, format!("invalid JSON: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let outcome = match cli.command {
        Command::Run { config } => ExperimentConfig::from_file(&config).and_then(|cfg| {
            let (trace, result) = match &cfg.output_path {
                Some(_) => match harness::run_experiment(&cfg) {
                    Ok(t) => (Some(t), Ok(())),
                    Err(e) => (None, Err(e)),
                },
                None => {
                    let (t, r) = harness::execute(&cfg);
                    print!("{}", t.to_csv_string());
                    (None, r)
                }
            };
            if let (Some(t), Some(path)) = (trace, &cfg.output_path) {
                eprintln!(
                    "wrote {} ({} rows, final gap {})",
                    path.display(),
                    t.rows.len(),
                    t.final_gap.map_or("n/a".into(), |g| format!("{g:.3e}"))
                );
            }
            result.map(|()| 0)
        }),
        Command::Verify { suite, json, list } => {
            if list {
                for name in harness::check_names() {
                    println!("{name}");
                }
                Ok(0)
            } else {
                harness::verify(&suite, exec).map(|report| {
                    if json {
                        println!("{}", harness::verify::report_json(&report));
                    } else {
                        print!("{}", report.table());
                    }
                    if report.pass {
                        0
                    } else {
                        1
                    }
                })
            }
        }
        Command::Sweep {
            config,
            grid,
            out_dir,
        } => read_json(&config, "config").and_then(|base| {
            let grid = read_json(&grid, "grid")?;
            let summary = harness::sweep(&base, &grid, &out_dir, exec)?;
            for (alg, fit) in &summary.fits {
                println!("{alg}: slope {:.4}, intercept {:.4}", fit.slope, fit.intercept);
            }
            eprintln!("wrote {} runs to {}", summary.runs.len(), out_dir.display());
            Ok(if summary.runs.iter().any(|r| r.failure.is_some()) { 3 } else { 0 })
        }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
