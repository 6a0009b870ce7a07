use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use stabtensor_cli::{parse_jobspec, run, Overrides};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Emit {
    Text,
    Machine,
}

/// Injective stabilization of tensor products over Z and Z/m.
#[derive(Debug, Parser)]
#[command(name = "stabtensor", version)]
struct Args {
    /// Job file; `-` reads standard input.
    #[arg(long)]
    job: PathBuf,
    /// Seed for randomized suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Initial tower horizon.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    emit: Emit,
    /// Truncation level over Z; results are still re-certified one level up.
    #[arg(long)]
    truncation: Option<u32>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = if args.job.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        std::fs::read_to_string(&args.job)
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.job.display());
            return ExitCode::from(2);
        }
    };
    let job = match parse_jobspec(&text) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides { seed: args.seed, horizon: args.horizon, truncation: args.truncation };
    match run(&job, &overrides) {
        Ok(report) => {
            match args.emit {
                Emit::Text => print!("{}", report.text()),
                Emit::Machine => print!("{}", report.machine()),
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
