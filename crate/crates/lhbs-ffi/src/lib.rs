//! C ABI for the HRIS localization simulator.
//!
//! The surface follows the usual opaque-handle pattern: create a simulator
//! with [`lhbs_sim_new`], adjust it with `key = value` assignments through
//! [`lhbs_sim_set`] (same keys as the config-file format), then run trials,
//! sweeps or bound evaluations. Every fallible call returns an
//! [`LhbsStatus`]; outputs are written through caller-provided structs.
//!
//! All returned handles must be released with their matching `_free`
//! function exactly once.

use std::ffi::{c_char, CStr};
use std::ptr;

use lhbs_core::config::{ConfigError, SimConfig};
use lhbs_core::crlb;
use lhbs_core::harness::{run_sweep, SweepResult, SweepSpec};
use lhbs_core::protocol::TrialContext;

/// Call outcome. Zero is success; everything else identifies the failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LhbsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    UnknownKey = 3,
    InvalidValue = 4,
    InvalidConfig = 5,
    DetectionFailed = 6,
    BoundUnavailable = 7,
}

/// Opaque simulator handle holding the scenario, protocol and sweep knobs.
pub struct LhbsSim {
    config: SimConfig,
}

/// Opaque sweep-result handle; read rows via [`lhbs_sweep_row`].
pub struct LhbsSweepResult {
    result: SweepResult,
}

/// One protocol round: estimates alongside ground truth.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LhbsTrialResult {
    /// Angle available at the surface after phase 1, radians.
    pub phi_hat_hris: f64,
    /// Angle demodulated at the UE, radians.
    pub phi_demod: f64,
    /// Range estimate, meters.
    pub r_hat: f64,
    /// Position fix, meters.
    pub p_hat_x: f64,
    pub p_hat_y: f64,
    /// Ground truth.
    pub true_phi: f64,
    pub true_r: f64,
    pub true_p_x: f64,
    pub true_p_y: f64,
    /// Clock offset used in the trial, radians.
    pub epsilon: f64,
    /// Burst arrival-time estimates, seconds.
    pub t_rx1: f64,
    pub t_rx2: f64,
}

/// Cramér-Rao bounds at one SNR point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LhbsCrlbReport {
    /// Angle bound, rad^2.
    pub crlb_phi: f64,
    /// Range bound, m^2.
    pub crlb_r: f64,
    /// Off-diagonal Fisher coefficient, 1/(rad m).
    pub alpha: f64,
    /// Position bound, m^2.
    pub crlb_pos: f64,
}

/// One aggregated sweep point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LhbsSweepRow {
    pub snr_db: f64,
    pub rmse_r: f64,
    pub rmse_phi: f64,
    pub rmse_pos: f64,
    pub sqrt_crlb_r: f64,
    pub sqrt_crlb_phi: f64,
    pub sqrt_crlb_pos: f64,
    pub failures: u64,
    pub trials: u64,
}

/// Creates a simulator with the default scenario and protocol parameters.
/// Free with [`lhbs_sim_free`].
#[no_mangle]
pub extern "C" fn lhbs_sim_new() -> *mut LhbsSim {
    Box::into_raw(Box::new(LhbsSim {
        config: SimConfig::default(),
    }))
}

/// Releases a simulator handle. A null pointer is a no-op.
///
/// # Safety
/// `sim` must be a pointer previously returned by [`lhbs_sim_new`] and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn lhbs_sim_free(sim: *mut LhbsSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Applies one configuration assignment, using the same keys and value
/// syntax as the config-file format (e.g. `"seq_len"`, `"150"`).
///
/// # Safety
/// `sim` must be a live handle from [`lhbs_sim_new`]; `key` and `value`
/// must be NUL-terminated strings valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn lhbs_sim_set(
    sim: *mut LhbsSim,
    key: *const c_char,
    value: *const c_char,
) -> LhbsStatus {
    if sim.is_null() || key.is_null() || value.is_null() {
        return LhbsStatus::NullArgument;
    }
    let (key, value) = match (CStr::from_ptr(key).to_str(), CStr::from_ptr(value).to_str()) {
        (Ok(k), Ok(v)) => (k, v),
        _ => return LhbsStatus::InvalidUtf8,
    };
    match (*sim).config.apply_kv(key, value) {
        Ok(()) => LhbsStatus::Ok,
        Err(ConfigError::UnknownKey(_)) => LhbsStatus::UnknownKey,
        Err(_) => LhbsStatus::InvalidValue,
    }
}

/// Runs one seeded protocol round. On `Ok` the result struct is filled;
/// estimation failures (lost detection and the like) return
/// `DetectionFailed` without touching the output.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory for
/// one [`LhbsTrialResult`].
#[no_mangle]
pub unsafe extern "C" fn lhbs_sim_trial(
    sim: *const LhbsSim,
    seed: u64,
    out: *mut LhbsTrialResult,
) -> LhbsStatus {
    if sim.is_null() || out.is_null() {
        return LhbsStatus::NullArgument;
    }
    let config = &(*sim).config;
    if config.validate().is_err() {
        return LhbsStatus::InvalidConfig;
    }
    let ctx = match TrialContext::build(&config.scenario, &config.protocol) {
        Ok(ctx) => ctx,
        Err(_) => return LhbsStatus::InvalidConfig,
    };
    match ctx.run(seed) {
        Ok(t) => {
            ptr::write(
                out,
                LhbsTrialResult {
                    phi_hat_hris: t.phi_hat_hris,
                    phi_demod: t.phi_demod,
                    r_hat: t.r_hat,
                    p_hat_x: t.p_hat.x,
                    p_hat_y: t.p_hat.y,
                    true_phi: t.truth.phi_hu,
                    true_r: t.truth.r_hu,
                    true_p_x: config.scenario.ue_pos.x,
                    true_p_y: config.scenario.ue_pos.y,
                    epsilon: t.epsilon,
                    t_rx1: t.t_rx1,
                    t_rx2: t.t_rx2,
                },
            );
            LhbsStatus::Ok
        }
        Err(_) => LhbsStatus::DetectionFailed,
    }
}

/// Evaluates the Cramér-Rao bounds at one SNR point.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory for
/// one [`LhbsCrlbReport`].
#[no_mangle]
pub unsafe extern "C" fn lhbs_sim_crlb(
    sim: *const LhbsSim,
    snr_db: f64,
    out: *mut LhbsCrlbReport,
) -> LhbsStatus {
    if sim.is_null() || out.is_null() {
        return LhbsStatus::NullArgument;
    }
    let config = &(*sim).config;
    if config.validate().is_err() {
        return LhbsStatus::InvalidConfig;
    }
    match crlb::report(&config.scenario, &config.protocol, snr_db) {
        Ok(rep) => {
            ptr::write(
                out,
                LhbsCrlbReport {
                    crlb_phi: rep.crlb_phi,
                    crlb_r: rep.crlb_r,
                    alpha: rep.alpha,
                    crlb_pos: rep.crlb_pos,
                },
            );
            LhbsStatus::Ok
        }
        Err(_) => LhbsStatus::BoundUnavailable,
    }
}

/// Runs the configured Monte Carlo sweep (grid, trial count and master
/// seed all come from the handle's configuration) and returns a result
/// handle. Free with [`lhbs_sweep_free`].
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable pointer
/// storage.
#[no_mangle]
pub unsafe extern "C" fn lhbs_sim_sweep(
    sim: *const LhbsSim,
    out: *mut *mut LhbsSweepResult,
) -> LhbsStatus {
    if sim.is_null() || out.is_null() {
        return LhbsStatus::NullArgument;
    }
    let config = &(*sim).config;
    if config.validate().is_err() {
        return LhbsStatus::InvalidConfig;
    }
    let spec = SweepSpec {
        snr_grid_db: config.sweep.grid(),
        trials_per_point: config.sweep.trials_per_point,
        cfg: config.protocol,
        scenario: config.scenario,
        master_seed: config.master_seed,
    };
    match run_sweep(&spec) {
        Ok(result) => {
            *out = Box::into_raw(Box::new(LhbsSweepResult { result }));
            LhbsStatus::Ok
        }
        Err(_) => LhbsStatus::InvalidConfig,
    }
}

/// Number of SNR points in a sweep result. Null yields zero.
///
/// # Safety
/// `res`, when non-null, must be a live handle from [`lhbs_sim_sweep`].
#[no_mangle]
pub unsafe extern "C" fn lhbs_sweep_len(res: *const LhbsSweepResult) -> usize {
    if res.is_null() {
        0
    } else {
        (*res).result.points.len()
    }
}

/// Copies one sweep row into `out`.
///
/// # Safety
/// `res` must be a live handle from [`lhbs_sim_sweep`]; `out` must point
/// to writable memory for one [`LhbsSweepRow`].
#[no_mangle]
pub unsafe extern "C" fn lhbs_sweep_row(
    res: *const LhbsSweepResult,
    index: usize,
    out: *mut LhbsSweepRow,
) -> LhbsStatus {
    if res.is_null() || out.is_null() {
        return LhbsStatus::NullArgument;
    }
    let points = &(*res).result.points;
    let Some(p) = points.get(index) else {
        return LhbsStatus::InvalidValue;
    };
    ptr::write(
        out,
        LhbsSweepRow {
            snr_db: p.snr_db,
            rmse_r: p.rmse_range,
            rmse_phi: p.rmse_aoa,
            rmse_pos: p.rmse_pos,
            sqrt_crlb_r: p.sqrt_crlb_range,
            sqrt_crlb_phi: p.sqrt_crlb_aoa,
            sqrt_crlb_pos: p.sqrt_crlb_pos,
            failures: p.failures as u64,
            trials: p.trials as u64,
        },
    );
    LhbsStatus::Ok
}

/// Releases a sweep result. A null pointer is a no-op.
///
/// # Safety
/// `res` must be a pointer previously returned by [`lhbs_sim_sweep`] and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lhbs_sweep_free(res: *mut LhbsSweepResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn lhbs_status_message(status: LhbsStatus) -> *const c_char {
    let message: &'static [u8] = match status {
        LhbsStatus::Ok => b"ok\0",
        LhbsStatus::NullArgument => b"null argument\0",
        LhbsStatus::InvalidUtf8 => b"string argument is not valid UTF-8\0",
        LhbsStatus::UnknownKey => b"unknown configuration key\0",
        LhbsStatus::InvalidValue => b"invalid configuration value\0",
        LhbsStatus::InvalidConfig => b"configuration failed validation\0",
        LhbsStatus::DetectionFailed => b"estimation failed (flagged trial)\0",
        LhbsStatus::BoundUnavailable => b"bound unavailable at this point\0",
    };
    message.as_ptr() as *const c_char
}
