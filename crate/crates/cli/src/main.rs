use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rrtlevels_cli::suites::moment_row;
use rrtlevels_cli::{run, ExperimentConfig, RunError, Suite, Threads};

#[derive(Parser)]
#[command(
    name = "rrtlevels",
    version,
    about = "Simulation and verification suites for random recursive tree levels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads, or "auto".
        #[arg(long)]
        threads: Option<Threads>,
        /// Output directory; falls back to the config, then to $RRTLEVELS_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available suites.
    ListSuites,
    /// Print the closed-form moments at one (k, t).
    Moments {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        t: f64,
    },
}

fn fail(err: &RunError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::ListSuites => {
            for suite in Suite::ALL {
                println!("{:<24} {}", suite.name(), suite.description());
            }
            ExitCode::SUCCESS
        }
        Command::Moments { k, t } => match moment_row(k, t) {
            Ok(row) => {
                println!("{}", serde_json::to_string_pretty(&row).expect("row serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run {
            config,
            seed,
            threads,
            out,
        } => {
            let settings = ExperimentConfig::load(&config).and_then(|mut cfg| {
                cfg.seed = seed.or(cfg.seed);
                cfg.threads = threads.or(cfg.threads);
                cfg.output.dir = out.or(cfg.output.dir);
                cfg.resolve()
            });
            let settings = match settings {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            match run(&settings) {
                Ok(outcome) => {
                    for r in &outcome.reports {
                        println!(
                            "{} {}: {} (statistic {:.6})",
                            r.verdict(),
                            r.suite,
                            r.check,
                            r.statistic
                        );
                    }
                    println!(
                        "wrote {} rows to {}, summary {} ({:.1}s)",
                        outcome.csv_rows,
                        outcome.csv_path.display(),
                        outcome.summary_path.display(),
                        outcome.elapsed.as_secs_f64()
                    );
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
    }
}
