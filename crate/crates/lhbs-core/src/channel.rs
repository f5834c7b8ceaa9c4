//! Steering vectors, free-space channel coefficients, the BS-HRIS matrix and
//! UE-HRIS vector channels, the BS beamformer, and the two HRIS reflection
//! profiles used in the acknowledgment phase.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Uniform linear array (or HRIS element line) description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    /// Number of antennas / elements.
    pub num_elements: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayConfig {
    /// Half-wavelength spaced array.
    pub fn half_wavelength(num_elements: usize, wavelength: f64) -> Self {
        Self {
            num_elements,
            spacing: wavelength / 2.0,
            wavelength,
        }
    }

    /// Spatial frequency constant `kappa = 2 pi d / lambda`.
    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.spacing / self.wavelength
    }
}

/// Receive steering vector `a_A(theta)_n = exp(-j kappa sin(theta) n)`.
pub fn steering_vector(cfg: &ArrayConfig, theta: f64) -> Vec<Complex64> {
    let k_sin = cfg.kappa() * theta.sin();
    (0..cfg.num_elements)
        .map(|n| Complex64::from_polar(1.0, -k_sin * n as f64))
        .collect()
}

/// Free-space channel coefficient: amplitude `lambda / (4 pi r)` and phase
/// `-(epsilon + 2 pi r / lambda)` carrying path delay and clock offset.
pub fn channel_coeff(r: f64, wavelength: f64, epsilon: f64) -> Complex64 {
    assert!(r > 0.0, "range must be positive");
    let amplitude = wavelength / (4.0 * PI * r);
    Complex64::from_polar(amplitude, -(epsilon + 2.0 * PI * r / wavelength))
}

/// Uplink UE -> HRIS vector channel `h_UH = xi * a_R(phi_hu)`.
pub fn uplink_channel(cfg_hris: &ArrayConfig, xi: Complex64, phi_hu: f64) -> Vec<Complex64> {
    steering_vector(cfg_hris, phi_hu)
        .into_iter()
        .map(|a| xi * a)
        .collect()
}

/// Rank-one BS -> HRIS channel matrix
/// `H_BH = (1/sqrt(M)) xi a_R(theta_bh) a_M(phi_bh)^H`, R x M.
pub fn bs_hris_channel(
    cfg_bs: &ArrayConfig,
    cfg_hris: &ArrayConfig,
    xi_bh: Complex64,
    theta_bh: f64,
    phi_bh: f64,
) -> Vec<Vec<Complex64>> {
    let a_r = steering_vector(cfg_hris, theta_bh);
    let a_m = steering_vector(cfg_bs, phi_bh);
    let scale = 1.0 / (cfg_bs.num_elements as f64).sqrt();
    a_r.iter()
        .map(|&ar| a_m.iter().map(|&am| scale * xi_bh * ar * am.conj()).collect())
        .collect()
}

/// Matched BS beamformer `b_BS = a_M(phi_bh) / sqrt(M)`, unit norm.
pub fn bs_beamformer(cfg_bs: &ArrayConfig, phi_bh: f64) -> Vec<Complex64> {
    let scale = 1.0 / (cfg_bs.num_elements as f64).sqrt();
    steering_vector(cfg_bs, phi_bh)
        .into_iter()
        .map(|a| scale * a)
        .collect()
}

/// Per-element HRIS reflection setting: power fraction `rho` and phases.
#[derive(Debug, Clone, PartialEq)]
pub struct HrisProfile {
    pub rho: f64,
    pub phases: Vec<f64>,
}

impl HrisProfile {
    /// Diagonal entries `sqrt(rho) e^{j alpha_i}`.
    pub fn diagonal(&self) -> Vec<Complex64> {
        let gain = self.rho.sqrt();
        self.phases
            .iter()
            .map(|&a| Complex64::from_polar(gain, a))
            .collect()
    }
}

// Element phase ramp that reverses the BS-side arrival ramp and steers the
// reflection toward phi_hat. Under this crate's single signed-angle
// convention the two arrival ramps add, so the compensation carries
// sin(phi_hat) + sin(theta_bh); the surface is fully reflective here.
fn steer_phases(cfg_hris: &ArrayConfig, phi_hat: f64, theta_bh: f64) -> Vec<f64> {
    let k = cfg_hris.kappa();
    let slope = k * (phi_hat.sin() + theta_bh.sin());
    (0..cfg_hris.num_elements)
        .map(|i| slope * i as f64)
        .collect()
}

/// Reflection profile of the first acknowledgment burst: beam-steering ramp
/// plus the common message phase `e^{j phi_hat}` that backscatters the
/// estimated angle to the UE.
pub fn hris_profile_tx1(cfg_hris: &ArrayConfig, phi_hat: f64, theta_bh: f64) -> HrisProfile {
    let phases = steer_phases(cfg_hris, phi_hat, theta_bh)
        .into_iter()
        .map(|p| p + phi_hat)
        .collect();
    HrisProfile { rho: 1.0, phases }
}

/// Reflection profile of the second acknowledgment burst: beam-steering ramp
/// only, no message phase.
pub fn hris_profile_tx2(cfg_hris: &ArrayConfig, phi_hat: f64, theta_bh: f64) -> HrisProfile {
    HrisProfile {
        rho: 1.0,
        phases: steer_phases(cfg_hris, phi_hat, theta_bh),
    }
}

/// End-to-end downlink scalar seen by the single-antenna UE:
/// `xi_uh * a_R(phi_hu)^T Omega H_BH b_BS`.
///
/// With a profile steered at `phi_hat = phi_hu` this evaluates to
/// `R xi_bh xi_uh` (tx2) or `R xi_bh xi_uh e^{j phi_hat}` (tx1).
pub fn downlink_gain(
    cfg_bs: &ArrayConfig,
    cfg_hris: &ArrayConfig,
    xi_bh: Complex64,
    xi_uh: Complex64,
    phi_hu: f64,
    theta_bh: f64,
    phi_bh: f64,
    profile: &HrisProfile,
) -> Complex64 {
    let h = bs_hris_channel(cfg_bs, cfg_hris, xi_bh, theta_bh, phi_bh);
    let b = bs_beamformer(cfg_bs, phi_bh);
    // H_BH * b_BS, length R.
    let hb: Vec<Complex64> = h
        .iter()
        .map(|row| row.iter().zip(&b).map(|(m, w)| m * w).sum())
        .collect();
    let omega = profile.diagonal();
    let a_ue = steering_vector(cfg_hris, phi_hu);
    let cascade: Complex64 = a_ue
        .iter()
        .zip(&omega)
        .zip(&hb)
        .map(|((a, o), x)| a * o * x)
        .sum();
    xi_uh * cascade
}
