//! `khem`: consensus clustering from the command line.

mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use khem_core::metrics::{ari, nmi};
use khem_core::theory::{self, ArgmaxRule};
use khem_core::{basegen, cehm, Config, DiffusionMode, DEFAULT_MAX_ITERS};
use serde::Serialize;

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "khem",
    version,
    about = "Consensus clustering by k-HyperEdge Medoids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse an ensemble base (n rows × l integer labels) into k clusters.
    Consensus {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// Consensus labels, one per line.
        #[arg(long)]
        output: PathBuf,
        /// Loss trace CSV: stage,iteration,loss.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value = "rebuild")]
        diffusion_mode: DiffusionMode,
        /// Skip one header line of the input.
        #[arg(long)]
        header: bool,
    },
    /// Build an ensemble base by repeated k-means on a points file.
    Generate {
        #[arg(long)]
        points: PathBuf,
        /// True cluster count; each run draws its own count from a range above it.
        #[arg(long)]
        k: usize,
        /// Number of base clusterings.
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        header: bool,
    },
    /// Score predicted labels against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        header: bool,
    },
    /// Run the randomized property suites for the loss geometry.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Argmax reading for the single-move and fixed-point suites.
        #[arg(long, default_value = "in-place")]
        argmax: ArgmaxRule,
    },
    /// Write a synthetic Gaussian-blob dataset.
    Blobs {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Points CSV, n rows × dim columns.
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth labels, one per line.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Summary {
    n: usize,
    l: usize,
    n_c: usize,
    k: usize,
    init_loss: f64,
    rounds: usize,
    iterations: usize,
    final_loss: f64,
    seed: u64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("KHEM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        CliError::Invalid(format!(
            "KHEM_THREADS must be a non-negative integer, got {value:?}"
        ))
    })?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    Ok(())
}

/// Rounds to six decimals so that values rounding to zero print without a
/// minus sign.
fn six_places(v: f64) -> f64 {
    (v * 1e6).round() / 1e6 + 0.0
}

fn json_line<T: Serialize>(value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(|e| CliError::Failed(e.to_string()))?;
    println!("{line}");
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Consensus {
            input,
            k,
            output,
            trace,
            seed,
            max_iters,
            diffusion_mode,
            header,
        } => {
            if max_iters == 0 {
                return Err(CliError::Invalid("--max-iters must be at least 1".into()));
            }
            let base = io::read_base(&input, header)?;
            let config = Config {
                max_iters,
                seed,
                diffusion_mode,
            };
            let r = cehm(&base, k, &config)?;
            io::write_lines(&output, &r.labels)?;
            if let Some(path) = trace {
                let diffusion = r
                    .diffusion_loss_trace
                    .iter()
                    .enumerate()
                    .map(|(i, loss)| ["d".to_string(), (i + 1).to_string(), loss.to_string()]);
                let adjustment = r
                    .adjust_loss_trace
                    .iter()
                    .enumerate()
                    .map(|(i, loss)| ["a".to_string(), i.to_string(), loss.to_string()]);
                let head = ["stage", "iteration", "loss"].map(String::from);
                io::write_rows(
                    &path,
                    std::iter::once(head).chain(diffusion).chain(adjustment),
                )?;
            }
            json_line(&Summary {
                n: r.n,
                l: r.l,
                n_c: r.n_clusters,
                k: r.k,
                init_loss: r.init_loss,
                rounds: r.diffusion_rounds,
                iterations: r.iterations,
                final_loss: r.final_loss(),
                seed: r.seed,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate {
            points,
            k,
            runs,
            output,
            seed,
            header,
        } => {
            if runs == 0 {
                return Err(CliError::Invalid("--runs must be at least 1".into()));
            }
            if k < 2 {
                return Err(CliError::Invalid(format!(
                    "--k must be at least 2, got {k}"
                )));
            }
            let points = io::read_points(&points, header)?;
            let base = basegen::generate_base(&points, k, runs, seed)?;
            io::write_rows(&output, (0..base.n()).map(|x| base.row(x).to_vec()))?;
            eprintln!(
                "wrote {} × {} base to {}",
                base.n(),
                base.l(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            pred,
            truth,
            header,
        } => {
            let pred = io::read_labels(&pred, header)?;
            let truth = io::read_labels(&truth, header)?;
            let (nmi, ari) = (nmi(&pred, &truth)?, ari(&pred, &truth)?);
            println!(
                "{{\"nmi\": {:.6}, \"ari\": {:.6}}}",
                six_places(nmi),
                six_places(ari)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            trials,
            seed,
            argmax,
        } => {
            if trials == 0 {
                return Err(CliError::Invalid("--trials must be at least 1".into()));
            }
            let mut reports = theory::inequality_suites(trials, seed).to_vec();
            reports.push(theory::single_move_suite(trials, seed, argmax));
            reports.push(theory::monotonicity_suite(trials, seed));
            reports.push(theory::fixed_point_suite(trials, seed, argmax));
            for r in &reports {
                json_line(r)?;
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                eprintln!("{failed} of {} suites reported violations", reports.len());
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Blobs {
            n,
            k,
            dim,
            spread,
            seed,
            output,
            truth,
        } => {
            let (points, labels) = basegen::gaussian_blobs(n, k, dim, spread, seed)?;
            io::write_rows(&output, (0..points.n()).map(|i| points.row(i).to_vec()))?;
            if let Some(path) = truth {
                io::write_lines(&path, &labels)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("khem: {e}");
            e.exit_code()
        }
    }
}
