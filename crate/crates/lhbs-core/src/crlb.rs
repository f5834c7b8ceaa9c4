//! Closed-form Cramér-Rao lower bounds on the angle, range and position
//! estimates, assembled from the mean received burst and its range
//! derivative.
//!
//! The angle bound treats the surface-side estimate as error-free and
//! bounds only the UE-side demodulation; the range bound follows the
//! matched-filter form with the RMS bandwidth of the pulse and the total
//! energy of both bursts; the position bound maps the 2x2 Fisher
//! information through the polar-to-Cartesian Jacobian.

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{channel_coeff, downlink_gain, hris_profile_tx1};
use crate::geometry::{derive_polar, position_jacobian, Scenario};
use crate::linalg::hdot;
use crate::protocol::{ProtocolConfig, ProtocolError};
use crate::signals::{
    cazac, modulate_dense_onto_grid, modulate_derivative_dense_onto_grid, rms_bandwidth,
};
use crate::SPEED_OF_LIGHT;

/// Bounds and Fisher information at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport {
    /// Angle bound, rad^2.
    pub crlb_phi: f64,
    /// Range bound, m^2.
    pub crlb_r: f64,
    /// Off-diagonal Fisher coefficient, 1/(rad m).
    pub alpha: f64,
    /// 2x2 Fisher information matrix over [phi, r].
    pub fim: [[f64; 2]; 2],
    /// Position bound, m^2.
    pub crlb_pos: f64,
}

#[derive(Debug, Error)]
pub enum CrlbError {
    #[error("zero mean signal; the bound is undefined")]
    ZeroSignal,
    #[error("signal and derivative lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("Fisher information matrix is singular or indefinite")]
    SingularFim,
    #[error(transparent)]
    Setup(#[from] ProtocolError),
}

/// Angle bound `sigma_u^2 / (2 ||s||^2)` from the mean burst.
pub fn crlb_aoa(s: &[Complex64], sigma2_u: f64) -> Result<f64, CrlbError> {
    let energy: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(CrlbError::ZeroSignal);
    }
    Ok(sigma2_u / (2.0 * energy))
}

/// Range bound `c^2 / (16 B2^2 (E_s / N_0))`.
///
/// The 16 folds in the two transmitted bursts and the fact that each
/// arrival measures twice the one-way delay.
pub fn crlb_range(e_s: f64, n0: f64, b2: f64) -> f64 {
    SPEED_OF_LIGHT * SPEED_OF_LIGHT / (16.0 * b2 * b2 * (e_s / n0))
}

/// Off-diagonal Fisher coefficient `alpha = -(2/sigma_u^2) Im[s^H ds/dr]`.
pub fn fim_alpha(s: &[Complex64], s_dot: &[Complex64], sigma2_u: f64) -> Result<f64, CrlbError> {
    if s.len() != s_dot.len() {
        return Err(CrlbError::LengthMismatch(s.len(), s_dot.len()));
    }
    Ok(-(2.0 / sigma2_u) * hdot(s, s_dot).im)
}

/// Position bound `tr[J I^{-1} J^T]` with `I` assembled from the two scalar
/// bounds and the off-diagonal coefficient.
///
/// Fails when the assembled information matrix is not positive definite.
pub fn crlb_position(
    crlb_phi: f64,
    crlb_r: f64,
    alpha: f64,
    jacobian: &[[f64; 2]; 2],
) -> Result<f64, CrlbError> {
    if !(crlb_phi > 0.0 && crlb_r > 0.0) {
        return Err(CrlbError::SingularFim);
    }
    let a = 1.0 / crlb_phi;
    let b = 1.0 / crlb_r;
    let det = a * b - alpha * alpha;
    if det <= 0.0 {
        return Err(CrlbError::SingularFim);
    }
    // I^{-1}
    let i11 = b / det;
    let i12 = -alpha / det;
    let i22 = a / det;

    // tr(J I^{-1} J^T) over the 2x2 blocks.
    let j = jacobian;
    let mut trace = 0.0;
    for row in j.iter().take(2) {
        let (c1, c2) = (row[0], row[1]);
        trace += c1 * (i11 * c1 + i12 * c2) + c2 * (i12 * c1 + i22 * c2);
    }
    Ok(trace)
}

/// Mean burst and its range derivative for a scenario, evaluated at the
/// true angle with zero clock offset (the bounds are offset-invariant).
pub fn mean_signal(
    scenario: &Scenario,
    cfg: &ProtocolConfig,
) -> Result<(Vec<Complex64>, Vec<Complex64>), CrlbError> {
    let polar = derive_polar(scenario).map_err(ProtocolError::from)?;
    let pulse = cfg.pulse();
    let pilot = cazac(cfg.seq_len).map_err(ProtocolError::from)?;
    let lambda = cfg.wavelength();
    let xi_bh = channel_coeff(polar.r_bh, lambda, 0.0);
    let xi_uh = channel_coeff(polar.r_hu, lambda, 0.0);
    let hris = cfg.hris_array();
    let bs = cfg.bs_array();
    let profile = hris_profile_tx1(&hris, polar.phi_hu, polar.theta_bh);
    let g1 = downlink_gain(
        &bs,
        &hris,
        xi_bh,
        xi_uh,
        polar.phi_hu,
        polar.theta_bh,
        polar.phi_bh,
        &profile,
    );

    let t_arr = cfg.turnaround + 2.0 * polar.tau_hu;
    let ts = pulse.sample_period();
    let lead = cfg.span as f64 * pulse.symbol_period;
    let k_start = ((t_arr - lead) / ts).floor() as i64;
    let len = (cfg.seq_len + 2 * cfg.span as usize) * cfg.oversampling as usize + 1;
    let burst = modulate_dense_onto_grid(&pilot, &pulse, t_arr, k_start, len);
    let burst_dot = modulate_derivative_dense_onto_grid(&pilot, &pulse, t_arr, k_start, len);

    let s: Vec<Complex64> = burst.iter().map(|b| g1 * b).collect();
    // d s / d r = (1/c) d s / d tau, and the pulse argument carries -2 tau.
    let scale = -2.0 / SPEED_OF_LIGHT;
    let s_dot: Vec<Complex64> = burst_dot.iter().map(|b| g1 * scale * b).collect();
    Ok((s, s_dot))
}

/// Evaluates all bounds for a scenario at the given SNR.
pub fn report(
    scenario: &Scenario,
    cfg: &ProtocolConfig,
    snr_db: f64,
) -> Result<CrlbReport, CrlbError> {
    let polar = derive_polar(scenario).map_err(ProtocolError::from)?;
    let jac = position_jacobian(polar.phi_hu, polar.r_hu);

    let snr = 10f64.powf(snr_db / 10.0);
    if snr.is_infinite() {
        // Noiseless degenerate point: every bound collapses to zero.
        return Ok(CrlbReport {
            crlb_phi: 0.0,
            crlb_r: 0.0,
            alpha: 0.0,
            fim: [[f64::INFINITY, 0.0], [0.0, f64::INFINITY]],
            crlb_pos: 0.0,
        });
    }

    let (s, s_dot) = mean_signal(scenario, cfg)?;
    let sigma2 = ProtocolConfig {
        snr_db,
        ..*cfg
    }
    .noise_variance(&polar);
    let sigma2_u = sigma2 * cfg.oversampling as f64;

    let crlb_phi = crlb_aoa(&s, sigma2_u)?;
    let alpha = fim_alpha(&s, &s_dot, sigma2_u)?;

    let lambda = cfg.wavelength();
    let xi_bh = channel_coeff(polar.r_bh, lambda, 0.0);
    let xi_uh = channel_coeff(polar.r_hu, lambda, 0.0);
    let gain = (xi_bh * xi_uh).norm() * cfg.hris_elements as f64;
    // Total energy across both bursts with unit-power symbols.
    let e_s = 2.0 * cfg.seq_len as f64 * gain * gain * cfg.symbol_period();
    let n0 = sigma2_u * cfg.sample_period();
    let b2 = rms_bandwidth(&cfg.pulse());
    let crlb_r = crlb_range(e_s, n0, b2);

    let crlb_pos = crlb_position(crlb_phi, crlb_r, alpha, &jac)?;
    Ok(CrlbReport {
        crlb_phi,
        crlb_r,
        alpha,
        fim: [[1.0 / crlb_phi, alpha], [alpha, 1.0 / crlb_r]],
        crlb_pos,
    })
}
