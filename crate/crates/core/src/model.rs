//! Model parameters and the uniform time grid shared by all mode paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters (theta, beta, sigma, gamma) of the stochastic
/// advection-diffusion equation. theta is the diffusion speed, beta the
/// advection strength, sigma the noise amplitude and gamma the spectral
/// noise decay. Individual modes are allowed to be explosive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub theta: f64,
    pub beta: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(theta: f64, beta: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta must be > 0, got {theta}")));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(ModelParams { theta, beta, sigma, gamma })
    }
}

/// Uniform grid on [0, T] with step `dt`; `dt` must divide T within 1e-12
/// relative tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        if !(t_final > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be > 0, got {t_final}"
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        let n_steps = (t_final / dt).round();
        if n_steps < 1.0 || (n_steps * dt - t_final).abs() > 1e-12 * t_final {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} does not divide t_final = {t_final}"
            )));
        }
        Ok(TimeGrid {
            t_final,
            dt,
            n_steps: n_steps as usize,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Grid times t_0 = 0, ..., t_n = T (n_steps + 1 values).
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |i| i as f64 * self.dt)
    }
}
