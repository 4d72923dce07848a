//! Command-line front end.
//!
//! Subcommands: simulate, trajectories, estimate, mc-study, sweep, fisher.
//! Configuration comes from flags and/or a JSON config file (flags win).
//! Every successful run writes a machine-readable summary echoing its fully
//! resolved configuration, including the seed, so outputs can be reproduced
//! bit for bit. Data goes to files, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numerical error
//! (path overflow or singular normal equations).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    consistency_sweep, mc_study, run_replication, study_csv, sweep_csv, trajectories_csv,
    trajectory_bundle, write_atomic, StudyConfig, SweepAxis,
};
use crate::inference::{fisher_information_theta, DEFAULT_SINGULARITY_EPS};
use crate::model::ModelParams;
use crate::simulate::{
    evaluate_field, simulate_ensemble_replication, Scheme, DEFAULT_OVERFLOW_THRESHOLD,
};
use crate::spectral::build_basis;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SPDE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "spde-movement",
    about = "Spectral-Galerkin SPDE simulator and drift-parameter MLE toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one ensemble and export the reconstructed field at chosen locations
    Simulate(SimulateArgs),
    /// Dirac-initial-condition ensemble evaluated at several locations
    Trajectories(TrajectoriesArgs),
    /// Simulate one replication and estimate (theta, beta)
    Estimate(CommonArgs),
    /// Replicated estimation study with mean and 95% quantiles
    McStudy(McStudyArgs),
    /// Consistency sweep over T or N
    Sweep(SweepArgs),
    /// Fisher information for theta: exact sum and asymptote
    Fisher(CommonArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SchemeArg {
    Exact,
    Euler,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Exact => Scheme::Exact,
            SchemeArg::Euler => Scheme::Euler,
        }
    }
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config file; explicit flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Spatial dimension, 1 or 2
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long = "n-modes")]
    n_modes: Option<usize>,
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scheme: Option<SchemeArg>,
    #[arg(long = "overflow-threshold")]
    overflow_threshold: Option<f64>,
    /// Relative singularity threshold for the normal-equation determinant
    #[arg(long)]
    epsilon: Option<f64>,
    /// Rayon worker count (0 = library default); must not change results
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory (default: $SPDE_OUT_DIR or the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Locations at which to export the reconstructed field
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    xi: Vec<f64>,
}

#[derive(Args, Debug)]
struct TrajectoriesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Location of the Dirac-delta initial condition
    #[arg(long)]
    xi0: Option<f64>,
    /// Locations at which trajectories are evaluated
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.2,0.4,0.6,0.8,1.0")]
    xi: Vec<f64>,
}

#[derive(Args, Debug)]
struct McStudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of replications
    #[arg(long)]
    reps: Option<u32>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep axis: t or n
    #[arg(long)]
    axis: AxisArg,
    /// Comma-separated sweep values
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Replications per sweep point
    #[arg(long, default_value_t = 100)]
    reps: u32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    T,
    N,
}

/// Optional values as read from a JSON config file. Field names double as
/// the file schema.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    theta: Option<f64>,
    beta: Option<f64>,
    sigma: Option<f64>,
    gamma: Option<f64>,
    dimension: Option<usize>,
    n_modes: Option<usize>,
    t_final: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
    scheme: Option<SchemeArg>,
    reps: Option<u32>,
    overflow_threshold: Option<f64>,
    epsilon: Option<f64>,
    workers: Option<usize>,
}

/// Fully resolved configuration, echoed into every summary.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub study: StudyConfig,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl CliConfig {
    /// Flat echo of the resolved configuration, in the same schema
    /// `--config` accepts, so any summary can be replayed verbatim.
    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.study.params.theta,
            "beta": self.study.params.beta,
            "sigma": self.study.params.sigma,
            "gamma": self.study.params.gamma,
            "dimension": self.study.dimension,
            "n_modes": self.study.n_modes,
            "t_final": self.study.t_final,
            "dt": self.study.dt,
            "seed": self.study.seed,
            "scheme": match self.study.scheme {
                Scheme::Exact => "exact",
                Scheme::Euler => "euler",
            },
            "reps": self.study.replications,
            "overflow_threshold": self.study.overflow_threshold,
            "epsilon": self.study.singularity_epsilon,
            "workers": self.workers,
        })
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = serde_json::from_str(&text)?;
    Ok(cfg)
}

fn resolve(common: &CommonArgs, reps: Option<u32>) -> Result<CliConfig> {
    let file = match &common.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let mut missing = Vec::new();
    let mut need = |flag: Option<f64>, file: Option<f64>, name: &str| -> f64 {
        match flag.or(file) {
            Some(v) => v,
            None => {
                missing.push(name.to_string());
                f64::NAN
            }
        }
    };
    let theta = need(common.theta, file.theta, "theta");
    let beta = need(common.beta, file.beta, "beta");
    let sigma = need(common.sigma, file.sigma, "sigma");
    let t_final = need(common.t_final, file.t_final, "t_final");
    let dt = need(common.dt, file.dt, "dt");
    let n_modes = match common.n_modes.or(file.n_modes) {
        Some(v) => v,
        None => {
            missing.push("n_modes".to_string());
            0
        }
    };
    if !missing.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "missing required fields: {}",
            missing.join(", ")
        )));
    }
    let gamma = common.gamma.or(file.gamma).unwrap_or(0.0);
    let params = ModelParams::new(theta, beta, sigma, gamma)?;
    let study = StudyConfig {
        params,
        dimension: common.dimension.or(file.dimension).unwrap_or(1),
        n_modes,
        t_final,
        dt,
        replications: reps.or(file.reps).unwrap_or(100),
        seed: common.seed.or(file.seed).unwrap_or(0),
        scheme: common
            .scheme
            .or(file.scheme)
            .map(Scheme::from)
            .unwrap_or(Scheme::Exact),
        overflow_threshold: common
            .overflow_threshold
            .or(file.overflow_threshold)
            .unwrap_or(DEFAULT_OVERFLOW_THRESHOLD),
        singularity_epsilon: common.epsilon.or(file.epsilon).unwrap_or(DEFAULT_SINGULARITY_EPS),
    };
    study.grid()?;
    build_basis(study.dimension, study.n_modes)?;
    let out_dir = match &common.out {
        Some(p) => p.clone(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let workers = if common.workers != 0 {
        common.workers
    } else {
        file.workers.unwrap_or(0)
    };
    Ok(CliConfig { study, out_dir, workers })
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("rayon pool");
        pool.install(f)
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = resolve(&args.common, Some(1))?;
            let basis = build_basis(cfg.study.dimension, cfg.study.n_modes)?;
            let grid = cfg.study.grid()?;
            let ic = vec![0.0; basis.len()];
            let ensemble = simulate_ensemble_replication(
                &basis,
                &cfg.study.params,
                &ic,
                &grid,
                cfg.study.seed,
                0,
                cfg.study.scheme,
                cfg.study.overflow_threshold,
            )?;
            let mut csv = String::from("t,value,xi\n");
            for &x in &args.xi {
                for (i, t) in grid.times().enumerate() {
                    let v = evaluate_field(&ensemble, i, &[x])?;
                    csv.push_str(&format!("{t},{v},{x}\n"));
                }
            }
            ensure_out_dir(&cfg.out_dir)?;
            write_atomic(&cfg.out_dir.join("field.csv"), &csv)?;
            write_json(&cfg.out_dir.join("simulate_config.json"), &cfg.echo())?;
            eprintln!("wrote {}", cfg.out_dir.join("field.csv").display());
        }
        Command::Trajectories(args) => {
            let cfg = resolve(&args.common, Some(1))?;
            let xi0 = args.xi0.ok_or_else(|| {
                Error::InvalidParameter("missing required fields: xi0".into())
            })?;
            let bundle = trajectory_bundle(&cfg.study, xi0, &args.xi)?;
            ensure_out_dir(&cfg.out_dir)?;
            write_atomic(&cfg.out_dir.join("trajectories.csv"), &trajectories_csv(&bundle))?;
            write_json(&cfg.out_dir.join("trajectories_config.json"), &cfg.echo())?;
            eprintln!("wrote {}", cfg.out_dir.join("trajectories.csv").display());
        }
        Command::Estimate(common) => {
            let cfg = resolve(&common, Some(1))?;
            let result = in_pool(cfg.workers, || run_replication(&cfg.study, 0))?;
            ensure_out_dir(&cfg.out_dir)?;
            write_json(
                &cfg.out_dir.join("estimate.json"),
                &serde_json::json!({ "config": cfg.echo(), "result": result }),
            )?;
            eprintln!("wrote {}", cfg.out_dir.join("estimate.json").display());
        }
        Command::McStudy(args) => {
            let cfg = resolve(&args.common, args.reps)?;
            let summary = in_pool(cfg.workers, || mc_study(&cfg.study))?;
            ensure_out_dir(&cfg.out_dir)?;
            write_atomic(&cfg.out_dir.join("replications.csv"), &study_csv(&summary))?;
            write_json(
                &cfg.out_dir.join("summary.json"),
                &serde_json::json!({
                    "config": cfg.echo(),
                    "theta": summary.theta,
                    "beta": summary.beta,
                    "n_ok": summary.n_ok,
                    "n_err": summary.n_err,
                    "wall_time_secs": summary.wall_time_secs,
                }),
            )?;
            eprintln!(
                "theta: mean {} [{}, {}]; beta: mean {} [{}, {}]; ok {} err {}",
                summary.theta.mean,
                summary.theta.q025,
                summary.theta.q975,
                summary.beta.mean,
                summary.beta.q025,
                summary.beta.q975,
                summary.n_ok,
                summary.n_err
            );
        }
        Command::Sweep(args) => {
            let cfg = resolve(&args.common, Some(args.reps))?;
            if args.values.is_empty() {
                return Err(Error::InvalidParameter("sweep needs at least one value".into()));
            }
            let axis = match args.axis {
                AxisArg::T => SweepAxis::T,
                AxisArg::N => SweepAxis::N,
            };
            let curve =
                in_pool(cfg.workers, || consistency_sweep(&cfg.study, axis, &args.values))?;
            ensure_out_dir(&cfg.out_dir)?;
            write_atomic(&cfg.out_dir.join("sweep.csv"), &sweep_csv(&curve))?;
            write_json(&cfg.out_dir.join("sweep_config.json"), &cfg.echo())?;
            eprintln!("wrote {}", cfg.out_dir.join("sweep.csv").display());
        }
        Command::Fisher(common) => {
            let cfg = resolve(&common, Some(1))?;
            let basis = build_basis(cfg.study.dimension, cfg.study.n_modes)?;
            let info = fisher_information_theta(&basis, &cfg.study.params, cfg.study.t_final);
            ensure_out_dir(&cfg.out_dir)?;
            write_json(
                &cfg.out_dir.join("fisher.json"),
                &serde_json::json!({ "config": cfg.echo(), "fisher": info }),
            )?;
            eprintln!("wrote {}", cfg.out_dir.join("fisher.json").display());
        }
    }
    Ok(())
}

/// Parse `argv` (including the program name) and run; returns the process
/// exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
