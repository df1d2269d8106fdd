//! `mdsim`: simulate radar returns of human activities and build datasets.
//!
//! Exit codes: 0 success, 2 configuration error, 3 simulation error, 4 I/O error.
//! Log verbosity comes from `MDSIM_LOG` (e.g. `MDSIM_LOG=debug`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdsim::dataset::{self, ArtifactKind, BatchSpec};
use mdsim::nn;
use mdsim::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "mdsim", version, about = "FMCW radar micro-Doppler simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write raw data, RTM, DTMs and trajectory.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Override the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a randomised dataset; rerunning resumes an interrupted batch.
    Batch {
        config: PathBuf,
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check global-filter gradients against central differences.
    Gradcheck {
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the header, axes and entropy of an RHS1/RHM1 file.
    Inspect { file: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Simulation => 3,
        ErrorKind::Io => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = dataset::load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let m = dataset::run_single(&cfg, &out)?;
            println!(
                "{} seed {}: {} files ({} DTMs) in {}",
                m.activity,
                m.seed,
                m.files().count(),
                m.count(ArtifactKind::Dtm),
                out.display()
            );
        }
        Command::Batch { config, spec, out } => {
            let base = dataset::load_config(&config)?;
            let spec = BatchSpec::load(&spec)?;
            let m = dataset::run_batch(&spec, &base, &out)?;
            println!(
                "{} items ({} train / {} val) in {}",
                m.items.len(),
                m.train,
                m.val,
                out.display()
            );
        }
        Command::Gradcheck {
            count,
            step,
            tolerance,
            seed,
        } => {
            let checks = nn::gradient_check_suite(count, step, seed)?;
            let mut worst: f64 = 0.0;
            for c in &checks {
                println!(
                    "{}x{}x{}  grad_x {:.3e}  grad_k {:.3e}",
                    c.shape.h, c.shape.w, c.shape.d, c.error_x, c.error_k
                );
                worst = worst.max(c.error_x).max(c.error_k);
            }
            println!("worst relative error {worst:.3e} (tolerance {tolerance:.0e})");
            if worst.is_nan() || worst >= tolerance {
                return Err(Error::InvalidParameter(format!(
                    "gradient check failed: {worst:.3e} >= {tolerance:.0e}"
                )));
            }
        }
        Command::Inspect { file } => print!("{}", dataset::inspect(&file)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MDSIM_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
