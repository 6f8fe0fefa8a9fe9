use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infc::experiment::{emit_certificate, run_experiment, selftest, Overrides};
use infc::Error;

#[derive(Parser)]
#[command(name = "infc", version, about = "Inf-convolution sample-and-hold experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for all emitted files (overrides the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for the sampling-based constant estimates (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record the state at every integrator substep.
    #[arg(long, global = true)]
    dense: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the accuracy sweep described by a config file.
    Run { config: PathBuf },
    /// Compute and write the stability-margin certificate for a config file.
    Certify { config: PathBuf },
    /// Run the built-in property checks.
    Selftest,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownName { .. } | Error::InvalidInput(_) => 2,
        Error::Io(_) | Error::Csv(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        output_dir: cli.output_dir,
        seed: cli.seed,
        dense: cli.dense,
    };
    let result = match cli.command {
        Command::Run { config } => run_experiment(&config, &overrides).map(|(cfg, sweep)| {
            println!("{:>8} {:>10} {:>16} {:>12} {:>7}", "eta", "eps_x", "terminal |x|", "entered_at", "stayed");
            for p in &sweep.points {
                let entered = p.verdict.entered_at.map_or("-".to_string(), |t| format!("{t:.3}"));
                println!(
                    "{:>8e} {:>10.3e} {:>16.6} {:>12} {:>7}",
                    p.eta, p.eps_x, p.terminal_mean_norm, entered, p.verdict.stayed
                );
            }
            if let Some(e) = &sweep.certificate_error {
                println!("certificate unavailable: {e}");
            }
            println!("wrote {}", cfg.output_dir.display());
        }),
        Command::Certify { config } => emit_certificate(&config, &overrides).map(|(cert, path)| {
            print!("{}", cert.report());
            println!("wrote {}", path.display());
        }),
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
