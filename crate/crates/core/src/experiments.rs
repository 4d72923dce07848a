//! Monte Carlo harness: replicated estimation studies, consistency sweeps
//! and trajectory bundles, with CSV/JSON reporting.
//!
//! Replications are keyed by `rep_id`; each one draws from its own
//! counter-derived noise substream, so a study is bitwise reproducible for a
//! fixed seed regardless of how many rayon workers execute it.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{estimate_ensemble, EstimateResult, DEFAULT_SINGULARITY_EPS};
use crate::model::{ModelParams, TimeGrid};
use crate::simulate::{
    dirac_initial_coefficients, simulate_ensemble_replication, trajectory_at, Scheme,
    DEFAULT_OVERFLOW_THRESHOLD,
};
use crate::spectral::build_basis;

/// Full configuration of one Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub params: ModelParams,
    pub dimension: usize,
    pub n_modes: usize,
    pub t_final: f64,
    pub dt: f64,
    pub replications: u32,
    pub seed: u64,
    pub scheme: Scheme,
    #[serde(default = "default_overflow")]
    pub overflow_threshold: f64,
    #[serde(default = "default_epsilon")]
    pub singularity_epsilon: f64,
}

fn default_overflow() -> f64 {
    DEFAULT_OVERFLOW_THRESHOLD
}

fn default_epsilon() -> f64 {
    DEFAULT_SINGULARITY_EPS
}

impl StudyConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_final, self.dt)
    }

    fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        build_basis(self.dimension, self.n_modes)?;
        self.grid()?;
        Ok(())
    }
}

/// Outcome of a single replication.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRecord {
    pub rep_id: u32,
    pub outcome: std::result::Result<EstimateResult, String>,
    /// True when the failure was numerical (overflow / singularity).
    pub numerical_error: bool,
}

/// Simulate one ensemble with substream (seed, rep_id), estimate, and attach
/// the replication id to any failure.
pub fn run_replication(config: &StudyConfig, rep_id: u32) -> Result<EstimateResult> {
    config.validate()?;
    let basis = build_basis(config.dimension, config.n_modes)?;
    let grid = config.grid()?;
    let ic = vec![0.0; basis.len()];
    let run = || -> Result<EstimateResult> {
        let ensemble = simulate_ensemble_replication(
            &basis,
            &config.params,
            &ic,
            &grid,
            config.seed,
            rep_id,
            config.scheme,
            config.overflow_threshold,
        )?;
        estimate_ensemble(&ensemble, config.singularity_epsilon)
    };
    run().map_err(|e| Error::Replication {
        rep_id: rep_id as u64,
        source: Box::new(e),
    })
}

/// Per-parameter summary: mean plus empirical 2.5% / 97.5% order statistics
/// with linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

fn summarize(values: &[f64]) -> ParamSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ParamSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q025: quantile(&sorted, 0.025),
        q975: quantile(&sorted, 0.975),
    }
}

/// Linear-interpolation quantile of an already sorted slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Result of a replicated study.
#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub config: StudyConfig,
    pub theta: ParamSummary,
    pub beta: ParamSummary,
    pub n_ok: usize,
    pub n_err: usize,
    pub wall_time_secs: f64,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

/// Run `config.replications` replications (in parallel on the current rayon
/// pool) and summarize. Failed replications are counted, not dropped
/// silently; the summary covers the successful ones.
pub fn mc_study(config: &StudyConfig) -> Result<McSummary> {
    config.validate()?;
    let start = Instant::now();
    let records: Vec<ReplicationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|rep_id| match run_replication(config, rep_id) {
            Ok(result) => ReplicationRecord {
                rep_id,
                outcome: Ok(result),
                numerical_error: false,
            },
            Err(e) => ReplicationRecord {
                rep_id,
                numerical_error: e.is_numerical(),
                outcome: Err(e.to_string()),
            },
        })
        .collect();
    let thetas: Vec<f64> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|e| e.theta_hat))
        .collect();
    let betas: Vec<f64> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|e| e.beta_hat))
        .collect();
    let n_ok = thetas.len();
    let n_err = records.len() - n_ok;
    if n_ok == 0 {
        // surface the first failure when nothing succeeded
        let first = records
            .iter()
            .find_map(|r| r.outcome.as_ref().err().cloned())
            .unwrap_or_default();
        return Err(Error::InvalidParameter(format!(
            "all {} replications failed; first error: {first}",
            records.len()
        )));
    }
    Ok(McSummary {
        config: config.clone(),
        theta: summarize(&thetas),
        beta: summarize(&betas),
        n_ok,
        n_err,
        wall_time_secs: start.elapsed().as_secs_f64(),
        records,
    })
}

/// Sweep axis for the consistency curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    T,
    N,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub median_abs_err_theta: f64,
    pub median_abs_err_beta: f64,
    pub n_ok: usize,
}

/// One mc_study per sweep value; medians of |theta_hat - theta0| and
/// |beta_hat - beta0| against the config's parameters as the true values.
pub fn consistency_sweep(
    config: &StudyConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    let mut curve = Vec::with_capacity(values.len());
    for &v in values {
        let mut point_config = config.clone();
        match axis {
            SweepAxis::T => point_config.t_final = v,
            SweepAxis::N => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "N sweep value {v} is not a positive integer"
                    )));
                }
                point_config.n_modes = v as usize;
            }
        }
        let summary = mc_study(&point_config)?;
        let mut errs_theta: Vec<f64> = Vec::new();
        let mut errs_beta: Vec<f64> = Vec::new();
        for r in &summary.records {
            if let Ok(e) = &r.outcome {
                errs_theta.push((e.theta_hat - config.params.theta).abs());
                errs_beta.push((e.beta_hat - config.params.beta).abs());
            }
        }
        errs_theta.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errs_beta.sort_by(|a, b| a.partial_cmp(b).unwrap());
        curve.push(SweepPoint {
            axis_value: v,
            median_abs_err_theta: quantile(&errs_theta, 0.5),
            median_abs_err_beta: quantile(&errs_beta, 0.5),
            n_ok: summary.n_ok,
        });
    }
    Ok(curve)
}

/// Field time series at each requested location, from one ensemble started
/// at the Dirac delta in xi0.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryBundle {
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    /// One series per entry of `xi`, each of length n_steps + 1.
    pub series: Vec<Vec<f64>>,
}

pub fn trajectory_bundle(config: &StudyConfig, xi0: f64, xi_list: &[f64]) -> Result<TrajectoryBundle> {
    config.validate()?;
    let basis = build_basis(config.dimension, config.n_modes)?;
    let grid = config.grid()?;
    let ic = dirac_initial_coefficients(&basis, &[xi0])?;
    let ensemble = simulate_ensemble_replication(
        &basis,
        &config.params,
        &ic,
        &grid,
        config.seed,
        0,
        config.scheme,
        config.overflow_threshold,
    )?;
    let series = xi_list
        .iter()
        .map(|&x| trajectory_at(&ensemble, &[x]))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBundle {
        times: grid.times().collect(),
        xi: xi_list.to_vec(),
        series,
    })
}

// ---------------------------------------------------------------------------
// file output
// ---------------------------------------------------------------------------

/// Write `contents` to `path` atomically (temp file + rename), so failed
/// runs never leave partial output behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Per-replication CSV: rep_id, theta_hat, beta_hat, j1, j2, status.
pub fn study_csv(summary: &McSummary) -> String {
    let mut out = String::from("rep_id,theta_hat,beta_hat,j1,j2,status\n");
    for r in &summary.records {
        match &r.outcome {
            Ok(e) => out.push_str(&format!(
                "{},{},{},{},{},ok\n",
                r.rep_id, e.theta_hat, e.beta_hat, e.j1, e.j2
            )),
            Err(_) => out.push_str(&format!(
                "{},,,,,{}\n",
                r.rep_id,
                if r.numerical_error { "numerical_error" } else { "error" }
            )),
        }
    }
    out
}

/// Sweep CSV: axis_value, median_abs_err_theta, median_abs_err_beta, n_ok.
pub fn sweep_csv(curve: &[SweepPoint]) -> String {
    let mut out = String::from("axis_value,median_abs_err_theta,median_abs_err_beta,n_ok\n");
    for p in curve {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.axis_value, p.median_abs_err_theta, p.median_abs_err_beta, p.n_ok
        ));
    }
    out
}

/// Trajectory CSV: t, value, xi (one row per grid time per location).
pub fn trajectories_csv(bundle: &TrajectoryBundle) -> String {
    let mut out = String::from("t,value,xi\n");
    for (x, series) in bundle.xi.iter().zip(&bundle.series) {
        for (t, v) in bundle.times.iter().zip(series) {
            out.push_str(&format!("{t},{v},{x}\n"));
        }
    }
    out
}
