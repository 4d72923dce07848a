//! Fourier-mode Ornstein-Uhlenbeck simulation and field reconstruction.
//!
//! Each Galerkin mode solves the scalar SDE
//!
//!   du_k = (-theta lambda_k^2 + beta lambda_k) u_k dt + sigma lambda_k^{-gamma} dw_k
//!
//! with mutually independent Brownian motions. Two samplers are provided:
//! the exact OU transition (marginal law matches the closed-form moments at
//! every grid time) and the Euler-Maruyama step. The noise here is additive,
//! so the Milstein correction vanishes and Euler-Maruyama *is* the Milstein
//! scheme for this model.
//!
//! Noise streams are counter-derived: mode k of replication r under root
//! seed s draws from ChaCha8 stream (r << 32) | k of seed s. Results are
//! therefore independent of scheduling and worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, TimeGrid};
use crate::spectral::{eigenfunction_value, SpectralBasis};

/// Default |u| magnitude at which an exploding path is aborted.
pub const DEFAULT_OVERFLOW_THRESHOLD: f64 = 1e30;

/// Below this |a * dt| the OU transition variance switches to its analytic
/// limit b^2 dt.
const DEGENERATE_DRIFT_EPS: f64 = 1e-12;

/// Integration scheme for the mode SDEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Exact OU transition density, the higher-fidelity default.
    Exact,
    /// Euler-Maruyama (= Milstein, since the noise is additive).
    Euler,
}

/// Drift coefficient a_k = -theta lambda^2 + beta lambda of mode k.
pub fn drift_coefficient(lambda: f64, params: &ModelParams) -> f64 {
    -params.theta * lambda * lambda + params.beta * lambda
}

/// Noise coefficient b_k = sigma lambda^{-gamma} of mode k.
pub fn noise_coefficient(lambda: f64, params: &ModelParams) -> f64 {
    params.sigma * lambda.powf(-params.gamma)
}

/// E[u_k(t)] = u0 e^{a t}.
pub fn mean_at(u0: f64, lambda: f64, params: &ModelParams, t: f64) -> f64 {
    u0 * (drift_coefficient(lambda, params) * t).exp()
}

/// E[u_k^2(t)]: b^2 expm1(2 a t) / (2 a) + u0^2 e^{2 a t}, with the
/// Brownian limit b^2 t + u0^2 when a = 0.
pub fn second_moment_at(u0: f64, lambda: f64, params: &ModelParams, t: f64) -> f64 {
    let a = drift_coefficient(lambda, params);
    let b = noise_coefficient(lambda, params);
    if a.abs() * t.max(1.0) < DEGENERATE_DRIFT_EPS {
        b * b * t + u0 * u0
    } else {
        let e2at = (2.0 * a * t).exp_m1();
        b * b * e2at / (2.0 * a) + u0 * u0 * (e2at + 1.0)
    }
}

/// One simulated Fourier coefficient path on the shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePath {
    pub mode_index: usize,
    pub lambda: f64,
    /// u_k at t_0, ..., t_n (n_steps + 1 values, all finite).
    pub values: Vec<f64>,
}

fn step_loop<F>(
    mode_index: usize,
    lambda: f64,
    u0: f64,
    grid: &TimeGrid,
    overflow_threshold: f64,
    mut step: F,
) -> Result<ModePath>
where
    F: FnMut(f64) -> f64,
{
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(u0);
    let mut u = u0;
    for i in 0..grid.n_steps() {
        u = step(u);
        if !u.is_finite() || u.abs() > overflow_threshold {
            return Err(Error::PathOverflow {
                mode_index,
                step: i + 1,
                threshold: overflow_threshold,
            });
        }
        values.push(u);
    }
    Ok(ModePath {
        mode_index,
        lambda,
        values,
    })
}

/// Exact OU transition sampler:
/// u_{n+1} = u_n e^{a dt} + Z sqrt(b^2 expm1(2 a dt) / (2 a)).
pub fn simulate_mode_exact<R: Rng>(
    lambda: f64,
    params: &ModelParams,
    u0: f64,
    grid: &TimeGrid,
    rng: &mut R,
    mode_index: usize,
    overflow_threshold: f64,
) -> Result<ModePath> {
    let a = drift_coefficient(lambda, params);
    let b = noise_coefficient(lambda, params);
    let dt = grid.dt();
    let growth = (a * dt).exp();
    let std = if (a * dt).abs() < DEGENERATE_DRIFT_EPS {
        b * dt.sqrt()
    } else {
        (b * b * (2.0 * a * dt).exp_m1() / (2.0 * a)).sqrt()
    };
    step_loop(mode_index, lambda, u0, grid, overflow_threshold, |u| {
        let z: f64 = rng.sample(StandardNormal);
        u * growth + std * z
    })
}

/// Euler-Maruyama step: u_{n+1} = u_n + a u_n dt + b sqrt(dt) Z.
pub fn simulate_mode_euler<R: Rng>(
    lambda: f64,
    params: &ModelParams,
    u0: f64,
    grid: &TimeGrid,
    rng: &mut R,
    mode_index: usize,
    overflow_threshold: f64,
) -> Result<ModePath> {
    let a = drift_coefficient(lambda, params);
    let b = noise_coefficient(lambda, params);
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    step_loop(mode_index, lambda, u0, grid, overflow_threshold, |u| {
        let z: f64 = rng.sample(StandardNormal);
        u + a * u * dt + b * sqrt_dt * z
    })
}

/// N simulated mode paths sharing one grid; the truncated solution U^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEnsemble {
    pub basis: SpectralBasis,
    pub params: ModelParams,
    pub grid: TimeGrid,
    pub paths: Vec<ModePath>,
    pub seed: u64,
}

/// Dedicated generator for (seed, replication, mode).
pub(crate) fn mode_rng(seed: u64, replication: u32, mode_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replication as u64) << 32) | mode_index as u64);
    rng
}

/// Simulate one ensemble. Same (seed, replication) gives a bit-identical
/// ensemble regardless of how callers schedule the work.
pub fn simulate_ensemble(
    basis: &SpectralBasis,
    params: &ModelParams,
    initial_coefficients: &[f64],
    grid: &TimeGrid,
    seed: u64,
    scheme: Scheme,
) -> Result<ModeEnsemble> {
    simulate_ensemble_replication(
        basis,
        params,
        initial_coefficients,
        grid,
        seed,
        0,
        scheme,
        DEFAULT_OVERFLOW_THRESHOLD,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble_replication(
    basis: &SpectralBasis,
    params: &ModelParams,
    initial_coefficients: &[f64],
    grid: &TimeGrid,
    seed: u64,
    replication: u32,
    scheme: Scheme,
    overflow_threshold: f64,
) -> Result<ModeEnsemble> {
    if initial_coefficients.len() != basis.len() {
        return Err(Error::InvalidParameter(format!(
            "{} initial coefficients for a basis of {} modes",
            initial_coefficients.len(),
            basis.len()
        )));
    }
    if !(overflow_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "overflow threshold must be > 0, got {overflow_threshold}"
        )));
    }
    let mut paths = Vec::with_capacity(basis.len());
    for (mode, &u0) in basis.modes().iter().zip(initial_coefficients) {
        let mut rng = mode_rng(seed, replication, mode.index);
        let path = match scheme {
            Scheme::Exact => simulate_mode_exact(
                mode.lambda,
                params,
                u0,
                grid,
                &mut rng,
                mode.index,
                overflow_threshold,
            ),
            Scheme::Euler => simulate_mode_euler(
                mode.lambda,
                params,
                u0,
                grid,
                &mut rng,
                mode.index,
                overflow_threshold,
            ),
        }?;
        paths.push(path);
    }
    Ok(ModeEnsemble {
        basis: basis.clone(),
        params: *params,
        grid: *grid,
        paths,
        seed,
    })
}

/// Spectral coefficients of a Dirac delta at xi0: u_k(0) = h_k(xi0).
pub fn dirac_initial_coefficients(basis: &SpectralBasis, xi0: &[f64]) -> Result<Vec<f64>> {
    (1..=basis.len())
        .map(|k| eigenfunction_value(basis, k, xi0))
        .collect()
}

/// Reconstructed field U^N(t_i, xi) = sum_k u_k(t_i) h_k(xi).
pub fn evaluate_field(ensemble: &ModeEnsemble, t_index: usize, xi: &[f64]) -> Result<f64> {
    if t_index > ensemble.grid.n_steps() {
        return Err(Error::InvalidParameter(format!(
            "time index {t_index} out of range 0..={}",
            ensemble.grid.n_steps()
        )));
    }
    let mut sum = 0.0;
    for path in &ensemble.paths {
        sum += path.values[t_index]
            * eigenfunction_value(&ensemble.basis, path.mode_index, xi)?;
    }
    Ok(sum)
}

/// Field time series at a fixed location over the whole grid.
pub fn trajectory_at(ensemble: &ModeEnsemble, xi: &[f64]) -> Result<Vec<f64>> {
    // evaluate the eigenfunctions once, then sweep over time
    let h: Vec<f64> = (1..=ensemble.basis.len())
        .map(|k| eigenfunction_value(&ensemble.basis, k, xi))
        .collect::<Result<_>>()?;
    Ok((0..=ensemble.grid.n_steps())
        .map(|i| {
            ensemble
                .paths
                .iter()
                .zip(&h)
                .map(|(p, hk)| p.values[i] * hk)
                .sum()
        })
        .collect())
}

/// sum_k u_k(t_i)^2; equals the L^2 norm of the reconstructed field by
/// orthonormality of the basis.
pub fn parseval_norm(ensemble: &ModeEnsemble, t_index: usize) -> Result<f64> {
    if t_index > ensemble.grid.n_steps() {
        return Err(Error::InvalidParameter(format!(
            "time index {t_index} out of range 0..={}",
            ensemble.grid.n_steps()
        )));
    }
    Ok(ensemble
        .paths
        .iter()
        .map(|p| p.values[t_index] * p.values[t_index])
        .sum())
}
