use clap::{Parser, Subcommand};
use hgibbs_cli::registry::EXPERIMENTS;
use hgibbs_cli::{emit_default_config, parse_config, run};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hgibbs", version, about = "Run seeded Monte Carlo experiments on H-Brownian Gibbs line ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Report path; overrides `output_path` and the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a complete config with default parameters.
    EmitDefaultConfig { experiment: String },
    /// List registered experiments.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::ListExperiments => {
            for e in &EXPERIMENTS {
                println!("{:<14}{}", e.name, e.summary);
            }
            0
        }
        Command::EmitDefaultConfig { experiment } => match emit_default_config(&experiment) {
            Some(text) => {
                print!("{text}");
                0
            }
            None => {
                eprintln!("error: unknown experiment `{experiment}`");
                2
            }
        },
        Command::Run { config, seed, threads, output } => match std::fs::read_to_string(&config) {
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", config.display());
                2
            }
            Ok(text) => match parse_config(&text) {
                Err(errs) => {
                    eprintln!("error: invalid config {}:\n{errs}", config.display());
                    2
                }
                Ok(mut cfg) => {
                    if let Some(s) = seed {
                        cfg.seed = s;
                    }
                    match threads {
                        Some(0) => {
                            eprintln!("error: --threads must be positive");
                            return ExitCode::from(2);
                        }
                        Some(t) => cfg.threads = t,
                        None => {}
                    }
                    if output.is_some() {
                        cfg.output_path = output;
                    }
                    run(&cfg)
                }
            },
        },
    };
    ExitCode::from(code as u8)
}
