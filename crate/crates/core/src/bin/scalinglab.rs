//! Command-line front end. Science parameters come from the TOML config or
//! flags; only the thread count is read from the environment
//! (`SCALINGLAB_THREADS`).

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scalinglab::baseline::{CseOrder, Distribution, LossKind, DEFAULT_SMOOTHING};
use scalinglab::graph::io::load_model;
use scalinglab::pipeline::{
    self, baseline_sweep, cmd_diagnostics, cmd_gen_graph, cmd_gen_walks, cmd_ingest,
    write_baseline_csv, BaselineTarget, ExperimentConfig, FitStatus, SchemaMap, SchemaPreset,
};
use scalinglab::powerfit::Axis;
use scalinglab::walk::write_ranked_csv;
use scalinglab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "scalinglab",
    version,
    about = "Scaling-law experiments on Markov random walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the graph and transition model described in the config.
    GenGraph {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample walks (generating the graph first if needed).
    GenWalks {
        #[arg(long)]
        config: PathBuf,
    },
    /// Stationary law, spectral gap, entropies and ranked distributions of a model.
    Diagnostics {
        #[arg(long)]
        model: PathBuf,
        /// Ranked distributions as `rank,probability,kind`.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Analytic counting-model loss against Monte-Carlo, as `D,analytic,mc_mean,mc_stderr`.
    Baseline {
        /// Walk baseline of this transition model.
        #[arg(long, conflicts_with = "uniform")]
        model: Option<PathBuf>,
        /// I.i.d. baseline for a uniform distribution over this many symbols.
        #[arg(long)]
        uniform: Option<usize>,
        #[arg(long, value_enum, default_value_t = LossArg::Cse)]
        loss: LossArg,
        #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1000, 10000])]
        d: Vec<u64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        smoothing: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalise an external loss CSV into the loss-table format.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemaArg::Native)]
        schema: SchemaArg,
        #[arg(long, default_value_t = 0)]
        drop_largest: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-slice power-law fits with bootstrap intervals.
    #[command(name = "fit-1d")]
    Fit1d {
        #[arg(long)]
        config: PathBuf,
        /// `d` fits L(D) at each N; `n` fits L(N) at each D.
        #[arg(long, value_enum, default_value_t = AxisArg::D)]
        axis: AxisArg,
    },
    /// Two-dimensional parametric fits.
    #[command(name = "fit-2d")]
    Fit2d {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute-optimal frontier of the configured surface.
    Frontier {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train/validation comparison of all surface-fitting methods.
    CompareFits {
        #[arg(long)]
        config: PathBuf,
    },
    /// Every fitting stage, with panel data for plotting.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        compare: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Cse,
    Mse,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Native,
    Epoch,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    N,
    D,
}

/// Success, but some fits failed.
const EXIT_PARTIAL: u8 = 2;
const EXIT_INVALID: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_)
        | Error::Malformed { .. }
        | Error::Format(_)
        | Error::Io { .. }
        | Error::DegenerateInput(_) => EXIT_INVALID,
        Error::NumericFailure { .. } | Error::FitFailure(_) => EXIT_PARTIAL,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn output_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    if dir.is_dir() {
        Ok(dir)
    } else {
        Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        ))
    }
}

/// Runs a command; `Ok(false)` means it finished with failed fits.
fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::GenGraph { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (model, _) = cmd_gen_graph(&cfg)?;
            log::info!(
                "wrote model with {} nodes, {} transitions",
                model.n_nodes(),
                model.nnz()
            );
        }
        Command::GenWalks { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (ds, _) = cmd_gen_walks(&cfg)?;
            log::info!("wrote {} walks of length {}", ds.n_seqs(), ds.seq_len());
        }
        Command::Diagnostics { model, stats_out } => {
            let m = load_model(&model)?;
            let (diag, ranked) = cmd_diagnostics(&m)?;
            #[derive(Serialize)]
            struct Summary {
                n_nodes: usize,
                component_size: usize,
                spectral_gap: f64,
                lambda2_modulus: f64,
                entropy_rate: f64,
                stationary_entropy: f64,
            }
            let summary = Summary {
                n_nodes: m.n_nodes(),
                component_size: diag.component_size,
                spectral_gap: diag.spectral_gap,
                lambda2_modulus: diag.lambda2_modulus,
                entropy_rate: diag.entropy_rate,
                stationary_entropy: diag.stationary_entropy,
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?
            );
            if let Some(p) = stats_out {
                write_ranked_csv(create(&p)?, &ranked).map_err(|e| Error::io(&p, e))?;
            }
        }
        Command::Baseline {
            model,
            uniform,
            loss,
            d,
            trials,
            smoothing,
            seed,
            out,
        } => {
            let rows = match (model, uniform) {
                (Some(path), _) => {
                    let m = load_model(&path)?;
                    baseline_sweep(BaselineTarget::Walk(&m), &d, trials, smoothing, seed)?
                }
                (None, Some(v)) => {
                    let pi = Distribution::uniform(v);
                    let loss = match loss {
                        LossArg::Cse => LossKind::Cse,
                        LossArg::Mse => LossKind::Mse,
                    };
                    let target = BaselineTarget::Iid {
                        pi: &pi,
                        loss,
                        order: CseOrder::Second,
                    };
                    baseline_sweep(target, &d, trials, smoothing, seed)?
                }
                (None, None) => {
                    return Err(Error::InvalidArgument("pass --model or --uniform".into()))
                }
            };
            match out {
                Some(p) => write_baseline_csv(create(&p)?, &rows)?,
                None => write_baseline_csv(std::io::stdout().lock(), &rows)?,
            }
        }
        Command::Ingest {
            input,
            schema,
            drop_largest,
            out,
        } => {
            let preset = match schema {
                SchemaArg::Native => SchemaPreset::Native,
                SchemaArg::Epoch => SchemaPreset::Epoch,
            };
            let (table, report) = cmd_ingest(&input, &SchemaMap::preset(preset), drop_largest)?;
            table.write_csv(create(&out)?)?;
            log::info!(
                "read {} rows, removed {} duplicates and {} outliers, kept {}",
                report.rows_read,
                report.duplicates_removed,
                report.dropped_largest,
                report.rows_kept
            );
        }
        Command::Fit1d { config, axis } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir(&cfg)?;
            let (_, _, points) = pipeline::load_table(&cfg)?;
            let (axis, name) = match axis {
                AxisArg::D => (Axis::D, "loss_vs_d"),
                AxisArg::N => (Axis::N, "loss_vs_n"),
            };
            let report = pipeline::fit_1d(&points, axis, &cfg.fit, cfg.seed);
            write_json(&dir.join(format!("fit_1d_{name}.json")), &report)?;
            report.write_panel_csv(&points, create(&dir.join(format!("panel_{name}.csv")))?)?;
            return Ok(!report.any_failed());
        }
        Command::Fit2d { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir(&cfg)?;
            let (_, _, points) = pipeline::load_table(&cfg)?;
            let report = pipeline::fit_2d(&points, &cfg.fit);
            write_json(&dir.join("fit_2d.json"), &report)?;
            return Ok(
                report.chinchilla_status == FitStatus::Ok && report.kaplan_status == FitStatus::Ok
            );
        }
        Command::Frontier { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir(&cfg)?;
            let (_, _, points) = pipeline::load_table(&cfg)?;
            let report = pipeline::fit_frontier_stage(&points, &cfg.fit, cfg.seed)?;
            write_json(&dir.join("frontier.json"), &report)?;
            if let Some(s) = &report.samples {
                s.write_csv(create(&dir.join("frontier.csv"))?)?;
            }
        }
        Command::CompareFits { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir(&cfg)?;
            let (_, _, points) = pipeline::load_table(&cfg)?;
            let report = pipeline::compare_stage(&points, &cfg.fit, cfg.seed)?;
            write_json(&dir.join("compare.json"), &report)?;
            return Ok(report.methods.values().all(|m| m.n_failures == 0));
        }
        Command::Report { config, compare } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir(&cfg)?;
            let (_, ingest, points) = pipeline::load_table(&cfg)?;
            write_json(&dir.join("ingest.json"), &ingest)?;
            let report = pipeline::cmd_fit(&points, &cfg.fit, cfg.seed, compare, dir)?;
            return Ok(report.all_converged);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(v) = std::env::var("SCALINGLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not set thread count: {e}");
                }
            }
            _ => {
                eprintln!("error: SCALINGLAB_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_INVALID);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some fits failed; see the report for per-fit status");
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
