//! C ABI over the core simulator and estimator.
//!
//! Conventions (mirrored in include/spde_movement.h):
//! - handles are opaque pointers created by `*_new` and released by `*_free`;
//!   freeing a null pointer is a no-op
//! - functions returning `int32_t` use 0 = ok, 1 = invalid input,
//!   2 = numerical failure (path overflow / singular normal equations),
//!   3 = internal error (null handle, bad buffer)
//! - after a nonzero code, `spde_last_error` returns a message valid on the
//!   calling thread until the next failing call

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use spde_movement::experiments::StudyConfig;
use spde_movement::inference::{estimate_ensemble, fisher_information_theta};
use spde_movement::model::ModelParams;
use spde_movement::simulate::{
    simulate_ensemble_replication, trajectory_at, Scheme, DEFAULT_OVERFLOW_THRESHOLD,
};
use spde_movement::spectral::build_basis;
use spde_movement::{Error, ModeEnsemble};

pub const SPDE_OK: i32 = 0;
pub const SPDE_ERR_INVALID: i32 = 1;
pub const SPDE_ERR_NUMERICAL: i32 = 2;
pub const SPDE_ERR_INTERNAL: i32 = 3;

pub const SPDE_SCHEME_EXACT: i32 = 0;
pub const SPDE_SCHEME_EULER: i32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(code: i32, message: impl Into<Vec<u8>>) -> i32 {
    let text = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
    code
}

fn fail_with(err: Error) -> i32 {
    let code = if err.is_numerical() {
        SPDE_ERR_NUMERICAL
    } else {
        SPDE_ERR_INVALID
    };
    fail(code, err.to_string())
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call from the same thread.
#[no_mangle]
pub extern "C" fn spde_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque study configuration.
pub struct SpdeConfig(StudyConfig);

/// Opaque simulated mode ensemble.
pub struct SpdeEnsemble(ModeEnsemble);

/// Estimation output; field order is part of the ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpdeEstimate {
    pub theta_hat: f64,
    pub beta_hat: f64,
    pub j1: f64,
    pub j2: f64,
    pub det_factor: f64,
    pub r1: f64,
    pub r2: f64,
    pub fisher_theta: f64,
}

/// Build a configuration handle, or return null with the error retrievable
/// via `spde_last_error`.
#[no_mangle]
pub extern "C" fn spde_config_new(
    theta: f64,
    beta: f64,
    sigma: f64,
    gamma: f64,
    dimension: u32,
    n_modes: u32,
    t_final: f64,
    dt: f64,
    seed: u64,
    scheme: i32,
) -> *mut SpdeConfig {
    let build = || -> Result<StudyConfig, Error> {
        let params = ModelParams::new(theta, beta, sigma, gamma)?;
        let scheme = match scheme {
            SPDE_SCHEME_EXACT => Scheme::Exact,
            SPDE_SCHEME_EULER => Scheme::Euler,
            other => {
                return Err(Error::InvalidParameter(format!("unknown scheme {other}")));
            }
        };
        let config = StudyConfig {
            params,
            dimension: dimension as usize,
            n_modes: n_modes as usize,
            t_final,
            dt,
            replications: 1,
            seed,
            scheme,
            overflow_threshold: DEFAULT_OVERFLOW_THRESHOLD,
            singularity_epsilon: spde_movement::inference::DEFAULT_SINGULARITY_EPS,
        };
        config.grid()?;
        build_basis(config.dimension, config.n_modes)?;
        Ok(config)
    };
    match build() {
        Ok(config) => Box::into_raw(Box::new(SpdeConfig(config))),
        Err(e) => {
            fail_with(e);
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub extern "C" fn spde_config_free(config: *mut SpdeConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Simulate replication `rep_id` of the configured study (zero initial
/// condition), or return null on failure.
///
/// # Safety
/// `config` must be a live handle from `spde_config_new`.
#[no_mangle]
pub unsafe extern "C" fn spde_simulate(config: *const SpdeConfig, rep_id: u32) -> *mut SpdeEnsemble {
    let Some(config) = (unsafe { config.as_ref() }) else {
        fail(SPDE_ERR_INTERNAL, "null config handle");
        return std::ptr::null_mut();
    };
    let c = &config.0;
    let run = || -> Result<ModeEnsemble, Error> {
        let basis = build_basis(c.dimension, c.n_modes)?;
        simulate_ensemble_replication(
            &basis,
            &c.params,
            &vec![0.0; basis.len()],
            &c.grid()?,
            c.seed,
            rep_id,
            c.scheme,
            c.overflow_threshold,
        )
    };
    match run() {
        Ok(e) => Box::into_raw(Box::new(SpdeEnsemble(e))),
        Err(e) => {
            fail_with(e);
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub extern "C" fn spde_ensemble_free(ensemble: *mut SpdeEnsemble) {
    if !ensemble.is_null() {
        drop(unsafe { Box::from_raw(ensemble) });
    }
}

/// Number of grid times per path (n_steps + 1); 0 for a null handle.
///
/// # Safety
/// `ensemble` must be null or a live handle from `spde_simulate`.
#[no_mangle]
pub unsafe extern "C" fn spde_ensemble_times(ensemble: *const SpdeEnsemble) -> u64 {
    match unsafe { ensemble.as_ref() } {
        Some(e) => e.0.grid.n_steps() as u64 + 1,
        None => 0,
    }
}

/// Reconstructed field time series at one location. `xi` holds `xi_len`
/// coordinates (the spatial dimension) and `out` receives
/// `spde_ensemble_times` values.
///
/// # Safety
/// `ensemble` must be a live handle; `xi` and `out` must point to readable /
/// writable buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn spde_trajectory(
    ensemble: *const SpdeEnsemble,
    xi: *const f64,
    xi_len: u64,
    out: *mut f64,
    out_len: u64,
) -> i32 {
    let Some(e) = (unsafe { ensemble.as_ref() }) else {
        return fail(SPDE_ERR_INTERNAL, "null ensemble handle");
    };
    if xi.is_null() || out.is_null() {
        return fail(SPDE_ERR_INTERNAL, "null buffer");
    }
    let needed = e.0.grid.n_steps() as u64 + 1;
    if out_len != needed {
        return fail(
            SPDE_ERR_INTERNAL,
            format!("output buffer holds {out_len} values, need {needed}"),
        );
    }
    let xi = unsafe { std::slice::from_raw_parts(xi, xi_len as usize) };
    match trajectory_at(&e.0, xi) {
        Ok(series) => {
            let out = unsafe { std::slice::from_raw_parts_mut(out, out_len as usize) };
            out.copy_from_slice(&series);
            SPDE_OK
        }
        Err(err) => fail_with(err),
    }
}

/// Closed-form (theta, beta) estimate with diagnostics for one ensemble.
///
/// # Safety
/// `ensemble` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spde_estimate(
    ensemble: *const SpdeEnsemble,
    epsilon: f64,
    out: *mut SpdeEstimate,
) -> i32 {
    let Some(e) = (unsafe { ensemble.as_ref() }) else {
        return fail(SPDE_ERR_INTERNAL, "null ensemble handle");
    };
    let Some(out) = (unsafe { out.as_mut() }) else {
        return fail(SPDE_ERR_INTERNAL, "null output pointer");
    };
    match estimate_ensemble(&e.0, epsilon) {
        Ok(r) => {
            *out = SpdeEstimate {
                theta_hat: r.theta_hat,
                beta_hat: r.beta_hat,
                j1: r.j1,
                j2: r.j2,
                det_factor: r.det_factor,
                r1: r.r1,
                r2: r.r2,
                fisher_theta: r.fisher_theta,
            };
            SPDE_OK
        }
        Err(err) => fail_with(err),
    }
}

/// Fisher information for theta under the configured parameters: the exact
/// spectral sum and the large-(N, T) asymptote.
///
/// # Safety
/// `config` must be a live handle; `exact` and `asymptotic` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spde_fisher(
    config: *const SpdeConfig,
    exact: *mut f64,
    asymptotic: *mut f64,
) -> i32 {
    let Some(config) = (unsafe { config.as_ref() }) else {
        return fail(SPDE_ERR_INTERNAL, "null config handle");
    };
    if exact.is_null() || asymptotic.is_null() {
        return fail(SPDE_ERR_INTERNAL, "null output pointer");
    }
    let c = &config.0;
    let basis = match build_basis(c.dimension, c.n_modes) {
        Ok(b) => b,
        Err(e) => return fail_with(e),
    };
    let info = fisher_information_theta(&basis, &c.params, c.t_final);
    unsafe {
        *exact = info.exact;
        *asymptotic = info.asymptotic;
    }
    SPDE_OK
}
