//! `ttrap`: runs the trapped-pulse experiments from flags or a JSON config.
//!
//! Exit status: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 numerical failure during a simulation.

mod config;
mod experiments;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use config::{set, typed_params, ConfigError, Experiment, FileConfig, DEFAULT_OUTPUT_DIR, FORMAT_VERSION};

#[derive(Parser, Debug)]
#[command(name = "ttrap", version, about = "Temporally trapped two-photon gate simulations")]
struct Cli {
    /// JSON run configuration; flags given on the command line override its params.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all artifacts (created if missing).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "TTRAP_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment named in --config.
    Run,
    /// Bound FH/SH modes of the sech trap and their coupling.
    Eigenmodes(EigenFlags),
    /// Two-photon Rabi cycling over two gate times.
    Rabi(TrapFlags),
    /// Phase gate at the located gate time.
    Upi(TrapFlags),
    /// CZ gate error versus gap ratio, with a log-log fit.
    CzSweep(CzFlags),
    /// Untrapped Gaussian-pulse baseline over gate time and pulse width.
    GaussianSweep(GaussFlags),
    /// Resonator figures of merit for a list of platforms.
    Fom(FomFlags),
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::Run => return None,
            Command::Eigenmodes(_) => Experiment::Eigenmodes,
            Command::Rabi(_) => Experiment::Rabi,
            Command::Upi(_) => Experiment::Upi,
            Command::CzSweep(_) => Experiment::CzSweep,
            Command::GaussianSweep(_) => Experiment::GaussianSweep,
            Command::Fom(_) => Experiment::Fom,
        })
    }

    fn apply_flags(&self, m: &mut Map<String, Value>) {
        match self {
            Command::Run => {}
            Command::Eigenmodes(f) => {
                set(m, "xi0", f.xi0);
                set(m, "dg_ratio", f.dg_ratio);
                set(m, "n_grid", f.n_grid);
                set(m, "box", f.box_len);
                set(m, "box_per_xi0", f.box_per_xi0);
                set(m, "alpha", f.alpha);
                set(m, "rho", f.rho);
                set(m, "delta", f.delta);
                set(m, "r_norm", f.r_norm);
                set(m, "n_modes", f.n_modes);
            }
            Command::Rabi(f) | Command::Upi(f) => {
                set(m, "dg_ratio", f.dg_ratio);
                set(m, "dt", f.dt);
                set(m, "n_grid", f.n_grid);
                set(m, "box", f.box_len);
                set(m, "box_per_xi0", f.box_per_xi0);
                set(m, "alpha", f.alpha);
                set(m, "rho", f.rho);
                set(m, "delta", f.delta);
                set(m, "r_norm", f.r_norm);
                set(m, "sample_every", f.sample_every);
                set(m, "flux_stride", f.flux_stride);
                if f.checkpoint {
                    set(m, "checkpoint", Some(true));
                }
            }
            Command::CzSweep(f) => {
                set(m, "dg_ratios", f.dg_ratios.clone());
                set(m, "dt", f.dt);
                set(m, "n_grid", f.n_grid);
                set(m, "box_per_xi0", f.box_per_xi0);
                set(m, "alpha", f.alpha);
                set(m, "rho", f.rho);
                set(m, "delta", f.delta);
                set(m, "r_norm", f.r_norm);
            }
            Command::GaussianSweep(f) => {
                set(m, "t_pi", f.t_pi.clone());
                set(m, "tau_g", f.tau_g.clone());
                set(m, "dt", f.dt);
                set(m, "n_grid", f.n_grid);
                set(m, "box", f.box_len);
                set(m, "rho", f.rho);
                set(m, "r_norm", f.r_norm);
            }
            Command::Fom(f) => {
                if let Some(p) = &f.platforms {
                    // a flag path is relative to the working directory
                    let abs = std::path::absolute(p).unwrap_or_else(|_| p.clone());
                    m.remove("platforms");
                    set(m, "platforms_file", Some(abs));
                }
            }
        }
    }
}

#[derive(Args, Debug)]
struct EigenFlags {
    /// Trap width in fast-time units; overrides --dg-ratio.
    #[arg(long)]
    xi0: Option<f64>,
    #[arg(long)]
    dg_ratio: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long = "box")]
    box_len: Option<f64>,
    #[arg(long)]
    box_per_xi0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    r_norm: Option<f64>,
    #[arg(long)]
    n_modes: Option<usize>,
}

#[derive(Args, Debug)]
struct TrapFlags {
    /// Gap ratio Δ/g, which fixes the trap width.
    #[arg(long)]
    dg_ratio: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long = "box")]
    box_len: Option<f64>,
    #[arg(long)]
    box_per_xi0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    r_norm: Option<f64>,
    #[arg(long)]
    sample_every: Option<usize>,
    /// Write every n-th sample to flux.csv (0 disables the file).
    #[arg(long)]
    flux_stride: Option<usize>,
    /// Save the state at the gate time (upi only).
    #[arg(long)]
    checkpoint: bool,
}

#[derive(Args, Debug)]
struct CzFlags {
    /// Comma-separated gap ratios.
    #[arg(long, value_delimiter = ',')]
    dg_ratios: Option<Vec<f64>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long)]
    box_per_xi0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    r_norm: Option<f64>,
}

#[derive(Args, Debug)]
struct GaussFlags {
    /// Comma-separated gate times.
    #[arg(long, value_delimiter = ',')]
    t_pi: Option<Vec<f64>>,
    /// Comma-separated pulse widths.
    #[arg(long, value_delimiter = ',')]
    tau_g: Option<Vec<f64>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long = "box")]
    box_len: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    r_norm: Option<f64>,
}

#[derive(Args, Debug)]
struct FomFlags {
    /// JSON array of platform records.
    #[arg(long)]
    platforms: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<ttrap_core::Error>() {
            return match e {
                e if e.is_numerical() => 3,
                ttrap_core::Error::Io(_) => 1,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let experiment = match (cli.command.experiment(), &file) {
        (None, None) => return Err(ConfigError("`run` needs --config".into()).into()),
        (None, Some(f)) => f.experiment,
        (Some(e), Some(f)) if e != f.experiment => {
            return Err(ConfigError(format!(
                "{}: experiment is \"{}\" but the subcommand is `{}`",
                f.path.display(),
                f.experiment.name(),
                e.name()
            ))
            .into())
        }
        (Some(e), _) => e,
    };
    let base = config_dir(file.as_ref());
    let output_dir = cli
        .output_dir
        .clone()
        .or_else(|| file.as_ref().and_then(|f| f.output_dir.as_ref()).map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    let jobs = match cli.jobs {
        Some(0) => return Err(ConfigError("--jobs must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;

    let mut params = file.as_ref().map(|f| f.params.clone()).unwrap_or_default();
    cli.command.apply_flags(&mut params);
    std::fs::create_dir_all(&output_dir)?;

    let f = file.as_ref();
    let outcome = match experiment {
        Experiment::Eigenmodes => experiments::eigenmodes(typed_params(params, f)?, &output_dir)?,
        Experiment::Rabi => experiments::rabi(typed_params(params, f)?, &output_dir)?,
        Experiment::Upi => experiments::upi(typed_params(params, f)?, &output_dir)?,
        Experiment::CzSweep => experiments::cz(typed_params(params, f)?, &output_dir)?,
        Experiment::GaussianSweep => experiments::gaussian(typed_params(params, f)?, &output_dir)?,
        Experiment::Fom => experiments::fom(typed_params(params, f)?, &base, &output_dir)?,
    };

    let manifest = json!({
        "format_version": FORMAT_VERSION,
        "experiment": experiment.name(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "constants_version": ttrap_core::constants::CONSTANTS_VERSION,
        "config_file": file.as_ref().map(|f| f.path.display().to_string()),
        "jobs": jobs,
        "params": outcome.params,
        "outputs": outcome.outputs,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(output_dir.join("manifest.json"), text)?;
    println!("{}: wrote {} files to {}", experiment.name(), outcome.outputs.len() + 1, output_dir.display());
    Ok(())
}

/// Paths inside a config file are relative to the file's directory.
fn config_dir(file: Option<&FileConfig>) -> PathBuf {
    file.and_then(|f| f.path.parent())
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
