//! Command-line surface over the simulation library.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.

use clap::{Parser, Subcommand};
use squeezer_core::cli::{
    self, Figure, MetricsOptions, RunConfig,
};
use squeezer_core::error::Result;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "squeezer", version, about = "Fock-space simulation of a measurement-based squeezing gate on non-Gaussian states")]
struct Args {
    /// JSON run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the tomography RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the Fock cutoff dimension.
    #[arg(long, global = true)]
    cutoff: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured input state and write it as a state file.
    Prepare,
    /// Apply the configured squeezing gate to a state file.
    Apply {
        /// Input state JSON.
        state: PathBuf,
    },
    /// Sample the Wigner function of a state file to CSV.
    Wigner {
        state: PathBuf,
        /// Half-range of the square grid (auto-sized when omitted).
        #[arg(long)]
        range: Option<f64>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Quadrature distributions over a phase scan.
    Marginals {
        state: PathBuf,
        #[arg(long, default_value_t = 24)]
        phases: usize,
    },
    /// Distinguishability/interference curves and related figures of merit.
    Metrics {
        state: PathBuf,
        #[arg(long, default_value_t = 2.2)]
        beta_max: f64,
        #[arg(long, default_value_t = 45)]
        beta_points: usize,
        /// Also emit the coherent- and Gaussian-mixture bounds.
        #[arg(long)]
        bounds: bool,
        /// Evaluate the anti-correlation witness at this detector efficiency.
        #[arg(long)]
        anticorrelation: Option<f64>,
    },
    /// Simulated homodyne records plus maximum-likelihood reconstruction.
    Tomo {
        state: PathBuf,
    },
    /// Run a named demonstration pipeline (fig2, fig3, supplfig1, supplfig2).
    Reproduce {
        figure: String,
    },
}

fn load_config(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.tomography.seed = seed;
    }
    if let Some(cutoff) = args.cutoff {
        cfg.cutoff = cutoff;
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<()> {
    let cfg = load_config(args)?;
    let out = cfg.output_dir.clone().unwrap_or_else(|| args.out.clone());
    match &args.command {
        Command::Prepare => {
            let path = cli::cmd_prepare(&cfg, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Apply { state } => {
            let path = cli::cmd_apply(&cfg, state, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Wigner {
            state,
            range,
            points,
        } => {
            cli::cmd_wigner(&cfg, state, *range, *points, &out)?;
            println!("wrote {}", out.join("wigner.csv").display());
        }
        Command::Marginals { state, phases } => {
            cli::cmd_marginals(&cfg, state, *phases, &out)?;
            println!("wrote {}", out.join("marginals.csv").display());
        }
        Command::Metrics {
            state,
            beta_max,
            beta_points,
            bounds,
            anticorrelation,
        } => {
            let opts = MetricsOptions {
                beta_max: *beta_max,
                beta_points: *beta_points,
                with_bounds: *bounds,
                anticorrelation_eta: *anticorrelation,
            };
            cli::cmd_metrics(&cfg, state, &opts, &out)?;
            println!("wrote {}", out.join("metrics_report.json").display());
        }
        Command::Tomo { state } => {
            cli::cmd_tomo(&cfg, state, &out)?;
            println!("wrote {}", out.join("reconstruction.json").display());
        }
        Command::Reproduce { figure } => {
            let figure: Figure = figure.parse()?;
            let dir = cli::cmd_reproduce(&cfg, figure, &out)?;
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
