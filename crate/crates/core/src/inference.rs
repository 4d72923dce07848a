//! Sufficient statistics, the closed-form drift MLE, Fisher information and
//! the consistency diagnostics.
//!
//! From the discretized paths we form five weighted path functionals
//!
//!   I1 = sum_k lambda_k^{4+2g} int u_k^2 dt     I4 = sum_k lambda_k^{2+2g} int u_k du_k
//!   I2 = sum_k lambda_k^{2+2g} int u_k^2 dt     I5 = sum_k lambda_k^{1+2g} int u_k du_k
//!   I3 = sum_k lambda_k^{3+2g} int u_k^2 dt
//!
//! and the estimators solve the 2x2 normal equations
//!
//!   theta I1 - beta I3 = -I4,   -theta I3 + beta I2 = I5,
//!
//! i.e. theta = (I3 I5 - I2 I4)/(I1 I2 - I3^2), beta = (I1 I5 - I3 I4)/(I1 I2 - I3^2).
//!
//! Stochastic integrals are discretized by left-point Ito sums and int u^2 dt
//! by left Riemann sums on the same grid points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulate::{drift_coefficient, noise_coefficient, ModeEnsemble};
use crate::spectral::{Dimension, SpectralBasis};

/// Default relative threshold below which the normal-equation determinant is
/// treated as singular.
pub const DEFAULT_SINGULARITY_EPS: f64 = 1e-12;

/// Left-point Ito sum sum_i u_i (u_{i+1} - u_i). Satisfies the exact algebra
/// sum u_i du_i = (u_T^2 - u_0^2 - sum (du_i)^2) / 2.
pub fn ito_sum(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[0] * (w[1] - w[0])).sum()
}

/// Left Riemann sum of int u^2 dt over the grid.
pub fn energy_quadrature(values: &[f64], dt: f64) -> f64 {
    values[..values.len() - 1].iter().map(|u| u * u).sum::<f64>() * dt
}

/// The five path functionals I1..I5 of one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub gamma: f64,
    /// int u_k^2 dt per mode, in mode order.
    pub per_mode_energy: Vec<f64>,
}

pub fn sufficient_statistics(ensemble: &ModeEnsemble) -> Result<SufficientStats> {
    let gamma = ensemble.params.gamma;
    let dt = ensemble.grid.dt();
    let mut stats = SufficientStats {
        i1: 0.0,
        i2: 0.0,
        i3: 0.0,
        i4: 0.0,
        i5: 0.0,
        gamma,
        per_mode_energy: Vec::with_capacity(ensemble.paths.len()),
    };
    let mut any_nonzero = false;
    // fixed mode-order summation keeps the reduction bitwise deterministic
    for path in &ensemble.paths {
        let energy = energy_quadrature(&path.values, dt);
        let ito = ito_sum(&path.values);
        any_nonzero |= path.values.iter().any(|&v| v != 0.0);
        let l = path.lambda;
        stats.i1 += l.powf(4.0 + 2.0 * gamma) * energy;
        stats.i2 += l.powf(2.0 + 2.0 * gamma) * energy;
        stats.i3 += l.powf(3.0 + 2.0 * gamma) * energy;
        stats.i4 += l.powf(2.0 + 2.0 * gamma) * ito;
        stats.i5 += l.powf(1.0 + 2.0 * gamma) * ito;
        stats.per_mode_energy.push(energy);
    }
    if !any_nonzero {
        return Err(Error::DegenerateData);
    }
    Ok(stats)
}

/// Point estimates plus diagnostics for one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub beta_hat: f64,
    pub j1: f64,
    pub j2: f64,
    pub det_factor: f64,
    pub r1: f64,
    pub r2: f64,
    pub fisher_theta: f64,
}

/// Closed-form MLE from the sufficient statistics, with the default
/// singularity threshold.
pub fn estimate(stats: &SufficientStats) -> Result<EstimateResult> {
    estimate_with_epsilon(stats, DEFAULT_SINGULARITY_EPS)
}

pub fn estimate_with_epsilon(stats: &SufficientStats, epsilon: f64) -> Result<EstimateResult> {
    let det = stats.i1 * stats.i2 - stats.i3 * stats.i3;
    let scale = stats.i1 * stats.i2;
    if !(det > epsilon * scale) {
        return Err(Error::Singular { det, scale });
    }
    let theta_hat = (stats.i3 * stats.i5 - stats.i2 * stats.i4) / det;
    let beta_hat = (stats.i1 * stats.i5 - stats.i3 * stats.i4) / det;
    let (r1, r2) = normal_equation_residuals(stats, theta_hat, beta_hat);
    let (j1, j2, det_factor) = proof_diagnostics(stats);
    Ok(EstimateResult {
        theta_hat,
        beta_hat,
        j1,
        j2,
        det_factor,
        r1,
        r2,
        fisher_theta: 0.0,
    })
}

/// Residuals of the normal equations:
/// r1 = theta I1 - beta I3 + I4, r2 = -theta I3 + beta I2 - I5.
pub fn normal_equation_residuals(
    stats: &SufficientStats,
    theta_hat: f64,
    beta_hat: f64,
) -> (f64, f64) {
    (
        theta_hat * stats.i1 - beta_hat * stats.i3 + stats.i4,
        -theta_hat * stats.i3 + beta_hat * stats.i2 - stats.i5,
    )
}

/// (J1, J2, 1 - J1 J2) with J1 = -I3/I1 and J2 = -I3/I2, so that
/// 1 - J1 J2 = (I1 I2 - I3^2)/(I1 I2), the determinant factor of the solve.
pub fn proof_diagnostics(stats: &SufficientStats) -> (f64, f64, f64) {
    if stats.i3 == 0.0 {
        return (0.0, 0.0, 1.0);
    }
    let j1 = -stats.i3 / stats.i1;
    let j2 = -stats.i3 / stats.i2;
    (j1, j2, 1.0 - j1 * j2)
}

/// E[int_0^T u_k^2 dt] for a zero-IC mode under the true parameters:
/// b^2 / (-2a) (T - expm1(2 a T)/(2 a)), with the Brownian limit b^2 T^2 / 2
/// at a = 0.
pub fn expected_mode_energy(lambda: f64, params: &ModelParams, t_final: f64) -> f64 {
    let a = drift_coefficient(lambda, params);
    let b = noise_coefficient(lambda, params);
    if (a * t_final).abs() < 1e-10 {
        b * b * t_final * t_final / 2.0
    } else {
        -b * b / (2.0 * a) * (t_final - (2.0 * a * t_final).exp_m1() / (2.0 * a))
    }
}

/// Fisher information for theta: the exact sum
/// (1/sigma^2) sum_k lambda_k^{4+2g} E[int u_k^2 dt] together with its
/// large-(N,T) asymptote varpi d T N^{2/d+1} / ((4+2d) theta0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInformation {
    pub exact: f64,
    pub asymptotic: f64,
}

pub fn fisher_information_theta(
    basis: &SpectralBasis,
    params: &ModelParams,
    t_final: f64,
) -> FisherInformation {
    let g = params.gamma;
    let exact = basis
        .lambdas()
        .map(|l| l.powf(4.0 + 2.0 * g) * expected_mode_energy(l, params, t_final))
        .sum::<f64>()
        / (params.sigma * params.sigma);
    let d = basis.dimension().as_usize() as f64;
    let varpi = match basis.dimension() {
        Dimension::One => std::f64::consts::PI * std::f64::consts::PI,
        Dimension::Two => 4.0 * std::f64::consts::PI,
    };
    let n = basis.len() as f64;
    let asymptotic = varpi * d * t_final * n.powf(2.0 / d + 1.0) / ((4.0 + 2.0 * d) * params.theta);
    FisherInformation { exact, asymptotic }
}

/// Statistics, estimate, diagnostics and Fisher information for one
/// ensemble in a single call. `fisher_theta` is evaluated at the estimated
/// parameters over the ensemble's own basis and horizon.
pub fn estimate_ensemble(ensemble: &ModeEnsemble, epsilon: f64) -> Result<EstimateResult> {
    let stats = sufficient_statistics(ensemble)?;
    let mut result = estimate_with_epsilon(&stats, epsilon)?;
    if result.theta_hat > 0.0 && result.beta_hat > 0.0 {
        let fitted = ModelParams {
            theta: result.theta_hat,
            beta: result.beta_hat,
            sigma: ensemble.params.sigma,
            gamma: ensemble.params.gamma,
        };
        result.fisher_theta =
            fisher_information_theta(&ensemble.basis, &fitted, ensemble.grid.t_final()).exact;
    }
    Ok(result)
}
