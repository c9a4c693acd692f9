use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use rsic::baselines::{Method, DEFAULT_COPHENETIC_DROP, DEFAULT_ELBOW_TOLERANCE};
use rsic::matcore::{generate_swimmer, save_matrix, MatrixFormat, DEFAULT_HOLDOUT_FRACTION};
use rsic::rsic::{DEFAULT_THETA, DEFAULT_THETA_FLAT};
use rsic::sweep::{self, SweepConfig};
use rsic::Algorithm;

#[derive(Parser)]
#[command(name = "rsic", version, about = "NMF rank selection by residual sensitivity to initial conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every rank in a range and report MCI islands and baseline selections.
    Sweep(SweepArgs),
    /// Write the 256 x 1024 Swimmer matrix.
    Swimmer {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: MatrixFormat,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// csv or mtx.
    #[arg(long, default_value = "csv")]
    format: MatrixFormat,
    /// Skip a header line in CSV input.
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = sweep::DEFAULT_K_MIN)]
    kmin: usize,
    /// Defaults to min(m, n, 64).
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = sweep::DEFAULT_INITS)]
    inits: usize,
    #[arg(long, default_value_t = sweep::DEFAULT_SCD_ITERS)]
    scd_iters: usize,
    #[arg(long, default_value_t = sweep::DEFAULT_MU_ITERS)]
    mu_iters: usize,
    #[arg(long, default_value = "scd")]
    algorithm: Algorithm,
    /// Comma list of mci,elbow,cophenetic,dispersion,permutation,ari,kscv,madimput.
    #[arg(long, value_delimiter = ',', default_value = "mci")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = sweep::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_HOLDOUT_FRACTION)]
    holdout_fraction: f64,
    /// Repeats for the permutation and imputation methods.
    #[arg(long, default_value_t = sweep::DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[arg(long, default_value_t = DEFAULT_THETA_FLAT)]
    theta_flat: f64,
    #[arg(long, default_value_t = DEFAULT_COPHENETIC_DROP)]
    cophenetic_drop: f64,
    #[arg(long, default_value_t = DEFAULT_ELBOW_TOLERANCE)]
    elbow_tolerance: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "rsic-out")]
    out: PathBuf,
    /// Divide residuals by ||A||_F before computing the MCI.
    #[arg(long)]
    normalize_residuals: bool,
    /// Apply a 3-point moving median to the MCI curve before island detection.
    #[arg(long)]
    smooth_mci: bool,
    /// Estimated multiplications above which a method is skipped.
    #[arg(long, default_value_t = sweep::DEFAULT_COST_CEILING)]
    cost_ceiling: u128,
}

impl SweepArgs {
    fn into_config(self) -> SweepConfig {
        let format = match self.format {
            MatrixFormat::Csv { .. } => MatrixFormat::Csv { header: self.header },
            f => f,
        };
        SweepConfig {
            input: Some(self.input),
            format,
            k_min: self.kmin,
            k_max: self.kmax,
            inits: self.inits,
            scd_iters: self.scd_iters,
            mu_iters: self.mu_iters,
            algorithm: self.algorithm,
            methods: self.methods,
            seed: self.seed,
            holdout_fraction: self.holdout_fraction,
            repeats: self.repeats,
            theta: self.theta,
            theta_flat: self.theta_flat,
            cophenetic_drop: self.cophenetic_drop,
            elbow_tolerance: self.elbow_tolerance,
            normalize_residuals: self.normalize_residuals,
            smooth_mci: self.smooth_mci,
            cost_ceiling: self.cost_ceiling,
            threads: self.threads,
            out: Some(self.out),
        }
    }
}

fn run(cli: Cli) -> rsic::Result<()> {
    match cli.command {
        Command::Sweep(args) => {
            let config = args.into_config();
            let out = config.out.clone().expect("output directory");
            let (report, timing) = sweep::run_sweep(&config)?;
            sweep::emit_report(&report, &out)?;
            sweep::write_timing(&timing, &out)?;
            for m in &report.methods {
                info!("{}: {:?}", m.method, m.selected);
            }
            info!("report written to {}", out.display());
        }
        Command::Swimmer { out, format } => {
            save_matrix(&generate_swimmer(), &out, format)?;
            info!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
