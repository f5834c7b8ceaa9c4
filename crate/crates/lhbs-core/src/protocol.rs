//! End-to-end protocol timeline: pilot snapshots at the HRIS, synthesis of
//! the two acknowledgment bursts on the UE sample grid, and the final
//! angle/range/position estimation.
//!
//! Timeline (UE clock): the UE transmits its pilot at t = 0; the HRIS
//! detects it after one time of flight; the BS burst, scheduled a fixed
//! turnaround `T` after that detection, reaches the UE at `T + 2 tau_hu`.
//! The second burst follows the first by `N T_c`. The UE samples on its own
//! clock grid, so the true arrival generally falls between samples; that
//! residual is what limits ranging at high SNR when sub-sample
//! interpolation is off.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::f64::consts::PI;
use thiserror::Error;

use crate::channel::{
    channel_coeff, downlink_gain, hris_profile_tx1, hris_profile_tx2, uplink_channel, ArrayConfig,
};
use crate::estimators::{
    demod_aoa, differential_combine, music_aoa, range_estimate, toa_correlate, EstimatorError,
    SnapshotSet,
};
use crate::geometry::{derive_polar, position_from_polar, GeometryError, Point2, PolarParams, Scenario};
use crate::signals::{
    add_awgn, cazac, modulate, modulate_discrete, modulate_onto_grid, PulseConfig, SignalError,
    Waveform,
};
use crate::SPEED_OF_LIGHT;

/// Where the acknowledgment phase gets its angle estimate from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrisAoaMode {
    /// Use the true angle; the surface-side estimate is treated as error-free.
    Perfect,
    /// Run MUSIC on the phase-1 snapshots.
    Music,
}

/// Clock offset between the UE and the infrastructure clocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonPolicy {
    Fixed(f64),
    /// Drawn uniformly in [0, 2 pi) per trial.
    RandomPerTrial,
}

/// Which synthesis path produces the burst samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisPath {
    /// Closed-form matched-filter cascade (default).
    Analytic,
    /// Upsampled impulses through the SRRC filter twice; quantizes the
    /// arrival to the sample grid. Cross-validation only.
    DiscreteConvolution,
}

/// All protocol and radio knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Pilot length `N`, even.
    pub seq_len: usize,
    /// Signal bandwidth `B` in Hz; the symbol period is `1/B`.
    pub bandwidth: f64,
    /// SRRC roll-off factor.
    pub roll_off: f64,
    /// Oversampling factor `u_f`.
    pub oversampling: u32,
    /// Pre-agreed turnaround `T` in seconds.
    pub turnaround: f64,
    /// Clock-offset policy.
    pub epsilon: EpsilonPolicy,
    /// Operating SNR in dB (may be infinite for noiseless runs).
    pub snr_db: f64,
    /// Source of the surface-side angle estimate.
    pub hris_aoa_mode: HrisAoaMode,
    /// Sub-sample peak interpolation in the ToA estimator.
    pub interp: bool,
    /// Pulse truncation half-length in symbols.
    pub span: u32,
    /// BS array size `M`.
    pub bs_antennas: usize,
    /// HRIS element count `R`.
    pub hris_elements: usize,
    /// Element spacing in wavelengths for both arrays.
    pub spacing_wavelengths: f64,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// MUSIC search grid step in degrees.
    pub music_grid_step_deg: f64,
    /// Correlation search margin around the nominal arrival, in symbols.
    pub search_margin_symbols: u32,
    /// Multiplier on the phase-1 noise variance (sensitivity studies).
    pub phase1_noise_scale: f64,
    /// Burst synthesis path.
    pub synthesis: SynthesisPath,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seq_len: 100,
            bandwidth: 20e6,
            roll_off: 0.8,
            oversampling: 10,
            turnaround: 1e-3,
            epsilon: EpsilonPolicy::RandomPerTrial,
            snr_db: 20.0,
            hris_aoa_mode: HrisAoaMode::Perfect,
            interp: false,
            span: 16,
            bs_antennas: 16,
            hris_elements: 64,
            spacing_wavelengths: 0.5,
            carrier_hz: 25e9,
            music_grid_step_deg: 0.02,
            search_margin_symbols: 25,
            phase1_noise_scale: 1.0,
            synthesis: SynthesisPath::Analytic,
        }
    }
}

impl ProtocolConfig {
    pub fn symbol_period(&self) -> f64 {
        1.0 / self.bandwidth
    }

    pub fn sample_period(&self) -> f64 {
        self.symbol_period() / self.oversampling as f64
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn pulse(&self) -> PulseConfig {
        PulseConfig {
            symbol_period: self.symbol_period(),
            roll_off: self.roll_off,
            oversampling: self.oversampling,
            span: self.span,
        }
    }

    pub fn hris_array(&self) -> ArrayConfig {
        ArrayConfig {
            num_elements: self.hris_elements,
            spacing: self.spacing_wavelengths * self.wavelength(),
            wavelength: self.wavelength(),
        }
    }

    pub fn bs_array(&self) -> ArrayConfig {
        ArrayConfig {
            num_elements: self.bs_antennas,
            spacing: self.spacing_wavelengths * self.wavelength(),
            wavelength: self.wavelength(),
        }
    }

    /// Noise variance per phase-1 sample implied by the configured SNR,
    /// `sigma^2 = |xi_bh xi_uh|^2 R^2 / 10^(snr/10)`, for the given scenario.
    pub fn noise_variance(&self, polar: &PolarParams) -> f64 {
        let lambda = self.wavelength();
        let xi_bh = channel_coeff(polar.r_bh, lambda, 0.0);
        let xi_uh = channel_coeff(polar.r_hu, lambda, 0.0);
        let gain_sq = (xi_bh * xi_uh).norm_sqr() * (self.hris_elements as f64).powi(2);
        gain_sq / 10f64.powf(self.snr_db / 10.0)
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<(), ProtocolError> {
        if self.seq_len == 0 || self.seq_len % 2 != 0 {
            return Err(ProtocolError::InvalidConfig(format!(
                "seq_len: must be even and positive, got {}",
                self.seq_len
            )));
        }
        if !(self.bandwidth > 0.0) {
            return Err(ProtocolError::InvalidConfig(
                "bandwidth: must be positive".to_string(),
            ));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(ProtocolError::InvalidConfig(
                "carrier_hz: must be positive".to_string(),
            ));
        }
        if self.bs_antennas == 0 || self.hris_elements < 2 {
            return Err(ProtocolError::InvalidConfig(
                "array sizes: bs_antennas >= 1 and hris_elements >= 2 required".to_string(),
            ));
        }
        if !(self.spacing_wavelengths > 0.0) {
            return Err(ProtocolError::InvalidConfig(
                "spacing_wavelengths: must be positive".to_string(),
            ));
        }
        if !(self.music_grid_step_deg > 0.0) {
            return Err(ProtocolError::InvalidConfig(
                "music_grid_deg: must be positive".to_string(),
            ));
        }
        if !(self.phase1_noise_scale >= 0.0) {
            return Err(ProtocolError::InvalidConfig(
                "phase1_noise_scale: must be nonnegative".to_string(),
            ));
        }
        self.pulse().validate()?;

        let polar = derive_polar(scenario)?;
        let guard = (self.span + self.search_margin_symbols) as f64 * self.symbol_period();
        let needed =
            2.0 * polar.tau_hu + self.seq_len as f64 * self.symbol_period() + 2.0 * guard;
        if self.turnaround <= needed {
            return Err(ProtocolError::InvalidConfig(format!(
                "turnaround_s: {} s does not separate the phases; needs > {:.3e} s",
                self.turnaround, needed
            )));
        }
        Ok(())
    }
}

/// One simulated protocol round.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// Angle available at the surface after phase 1.
    pub phi_hat_hris: f64,
    /// Angle demodulated at the UE from the backscatter message.
    pub phi_demod: f64,
    /// Range estimate at the UE, meters.
    pub r_hat: f64,
    /// Position fix.
    pub p_hat: Point2,
    /// Ground-truth polar parameters.
    pub truth: PolarParams,
    /// Clock offset used in this trial.
    pub epsilon: f64,
    /// Arrival-time estimates of the two bursts.
    pub t_rx1: f64,
    pub t_rx2: f64,
}

/// Estimation failure inside an otherwise well-configured trial. These are
/// counted, not propagated as crashes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum TrialFailure {
    #[error("phase-1 angle estimation: {0}")]
    Phase1(EstimatorError),
    #[error("first burst detection: {0}")]
    FirstBurst(EstimatorError),
    #[error("second burst detection: {0}")]
    SecondBurst(EstimatorError),
    #[error("angle demodulation: {0}")]
    Demod(EstimatorError),
    #[error("ranging: {0}")]
    Ranging(EstimatorError),
}

pub type TrialOutcome = Result<TrialResult, TrialFailure>;

/// Configuration or setup error; aborts the run rather than being counted.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{0}")]
    InvalidConfig(String),
}

/// Precomputed per-(scenario, config) state shared across Monte Carlo
/// trials: geometry, pilot, template and the unit-gain burst samples.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub scenario: Scenario,
    pub cfg: ProtocolConfig,
    pub polar: PolarParams,
    pulse: PulseConfig,
    pilot: Vec<Complex64>,
    template: Waveform,
    /// Unit-gain burst samples over the first receive window.
    burst: Vec<Complex64>,
    /// Grid index of the first window sample.
    k_start: i64,
    /// True arrival time of the first burst.
    t_arr: f64,
    /// Phase-1 noise variance at the configured SNR.
    sigma2: f64,
}

impl TrialContext {
    pub fn build(scenario: &Scenario, cfg: &ProtocolConfig) -> Result<Self, ProtocolError> {
        cfg.validate(scenario)?;
        let polar = derive_polar(scenario)?;
        let pulse = cfg.pulse();
        let pilot = cazac(cfg.seq_len)?;
        let template = modulate(&pilot, &pulse, 0.0)?;

        let ts = pulse.sample_period();
        let t_arr = cfg.turnaround + 2.0 * polar.tau_hu;
        let lead = (cfg.span + cfg.search_margin_symbols) as f64 * pulse.symbol_period;
        let k_start = ((t_arr - lead) / ts).floor() as i64;
        let window_len = (cfg.seq_len
            + 2 * (cfg.span as usize + cfg.search_margin_symbols as usize))
            * cfg.oversampling as usize
            + 1;

        let burst = match cfg.synthesis {
            SynthesisPath::Analytic => {
                modulate_onto_grid(&pilot, &pulse, t_arr, k_start, window_len)
            }
            SynthesisPath::DiscreteConvolution => {
                let delay_samples = (t_arr / ts).round() as i64;
                let w = modulate_discrete(&pilot, &pulse, delay_samples)?;
                let offset = delay_samples - 2 * (cfg.span * cfg.oversampling) as i64;
                let mut out = vec![Complex64::new(0.0, 0.0); window_len];
                for (i, v) in w.samples.iter().enumerate() {
                    let k = offset + i as i64 - k_start;
                    if k >= 0 && (k as usize) < window_len {
                        out[k as usize] = *v;
                    }
                }
                out
            }
        };

        let sigma2 = cfg.noise_variance(&polar);

        Ok(Self {
            scenario: *scenario,
            cfg: *cfg,
            polar,
            pulse,
            pilot,
            template,
            burst,
            k_start,
            t_arr,
            sigma2,
        })
    }

    /// Runs one seeded trial at the configured SNR.
    pub fn run(&self, seed: u64) -> TrialOutcome {
        self.run_with_noise(self.sigma2, seed)
    }

    /// Runs one seeded trial with an explicit phase-1 noise variance
    /// (the oversampled phase-2 variance is `u_f` times larger).
    pub fn run_with_noise(&self, sigma2: f64, seed: u64) -> TrialOutcome {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let epsilon = match cfg.epsilon {
            EpsilonPolicy::Fixed(e) => e,
            EpsilonPolicy::RandomPerTrial => rng.random::<f64>() * 2.0 * PI,
        };

        let lambda = cfg.wavelength();
        let xi_bh = channel_coeff(self.polar.r_bh, lambda, epsilon);
        let xi_uh = channel_coeff(self.polar.r_hu, lambda, epsilon);
        let hris = cfg.hris_array();
        let bs = cfg.bs_array();

        // Phase 1: angle estimation at the surface.
        let phi_hat = match cfg.hris_aoa_mode {
            HrisAoaMode::Perfect => self.polar.phi_hu,
            HrisAoaMode::Music => {
                let set = self.snapshots_inner(xi_uh, sigma2 * cfg.phase1_noise_scale, &mut rng);
                let grid = cfg.music_grid_step_deg * PI / 180.0;
                music_aoa(&set, &hris, grid)
                    .map_err(TrialFailure::Phase1)?
                    .phi
            }
        };

        // Phase 2: two reflected bursts, message phase on the first.
        let p1 = hris_profile_tx1(&hris, phi_hat, self.polar.theta_bh);
        let p2 = hris_profile_tx2(&hris, phi_hat, self.polar.theta_bh);
        let g1 = downlink_gain(
            &bs,
            &hris,
            xi_bh,
            xi_uh,
            self.polar.phi_hu,
            self.polar.theta_bh,
            self.polar.phi_bh,
            &p1,
        );
        let g2 = downlink_gain(
            &bs,
            &hris,
            xi_bh,
            xi_uh,
            self.polar.phi_hu,
            self.polar.theta_bh,
            self.polar.phi_bh,
            &p2,
        );

        let sigma2_u = sigma2 * cfg.oversampling as f64;
        let ts = self.pulse.sample_period();
        let n_uf = cfg.seq_len * cfg.oversampling as usize;
        let mean1 = Waveform::new(
            self.burst.iter().map(|b| g1 * b).collect(),
            ts,
            self.k_start as f64 * ts,
        );
        let mean2 = Waveform::new(
            self.burst.iter().map(|b| g2 * b).collect(),
            ts,
            (self.k_start + n_uf as i64) as f64 * ts,
        );
        let r1 = add_awgn(&mean1, sigma2_u, &mut rng);
        let r2 = add_awgn(&mean2, sigma2_u, &mut rng);

        // Phase 3: arrival times, differential demodulation, position fix.
        let toa1 = toa_correlate(&r1, &self.template, cfg.interp)
            .map_err(TrialFailure::FirstBurst)?;
        let toa2 = toa_correlate(&r2, &self.template, cfg.interp)
            .map_err(TrialFailure::SecondBurst)?;

        let span_uf = (cfg.span * cfg.oversampling) as usize;
        let start = (toa1.peak_lag + span_uf).min(self.burst.len().saturating_sub(n_uf));
        let z = differential_combine(&r1.slice(start, n_uf), &r2.slice(start, n_uf))
            .map_err(TrialFailure::Demod)?;
        let phi_demod = demod_aoa(z).map_err(TrialFailure::Demod)?;

        let r_hat = range_estimate(
            &toa1,
            &toa2,
            cfg.turnaround,
            cfg.seq_len,
            self.pulse.symbol_period,
        )
        .map_err(TrialFailure::Ranging)?;

        let p_hat = position_from_polar(self.scenario.hris_pos, phi_demod, r_hat);

        Ok(TrialResult {
            phi_hat_hris: phi_hat,
            phi_demod,
            r_hat,
            p_hat,
            truth: self.polar,
            epsilon,
            t_rx1: toa1.t_rx,
            t_rx2: toa2.t_rx,
        })
    }

    fn snapshots_inner<R: Rng>(
        &self,
        xi_uh: Complex64,
        sigma2: f64,
        rng: &mut R,
    ) -> SnapshotSet {
        let hris = self.cfg.hris_array();
        let h = uplink_channel(&hris, xi_uh, self.polar.phi_hu);
        let sigma = (sigma2 / 2.0).sqrt();
        let snapshots = self
            .pilot
            .iter()
            .map(|x| {
                h.iter()
                    .map(|hi| {
                        let clean = hi * x;
                        if sigma2 == 0.0 {
                            clean
                        } else {
                            let u1: f64 = 1.0 - rng.random::<f64>();
                            let u2: f64 = rng.random();
                            let amp = (-2.0 * u1.ln()).sqrt() * sigma;
                            clean + Complex64::from_polar(amp, 2.0 * PI * u2)
                        }
                    })
                    .collect()
            })
            .collect();
        SnapshotSet {
            snapshots,
            known_symbols: self.pilot.clone(),
        }
    }

    /// True first-burst arrival time in the UE clock.
    pub fn arrival_time(&self) -> f64 {
        self.t_arr
    }

    /// The correlation template (noiseless burst at zero delay).
    pub fn template(&self) -> &Waveform {
        &self.template
    }

    /// Noiseless phase-1 snapshot noise variance at the configured SNR.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Phase-1 snapshot generation: `y_n = h_uh x_n + w_n` with the surface in
/// full absorption mode.
pub fn phase1_snapshots<R: Rng>(
    scenario: &Scenario,
    cfg: &ProtocolConfig,
    sigma2: f64,
    rng: &mut R,
) -> Result<SnapshotSet, ProtocolError> {
    let ctx = TrialContext::build(scenario, cfg)?;
    let epsilon = match cfg.epsilon {
        EpsilonPolicy::Fixed(e) => e,
        EpsilonPolicy::RandomPerTrial => rng.random::<f64>() * 2.0 * PI,
    };
    let xi_uh = channel_coeff(ctx.polar.r_hu, cfg.wavelength(), epsilon);
    Ok(ctx.snapshots_inner(xi_uh, sigma2, rng))
}

/// Phase-2 burst synthesis: the two received waveforms at the UE, the first
/// carrying the backscattered message phase.
pub fn phase2_waveforms<R: Rng>(
    scenario: &Scenario,
    cfg: &ProtocolConfig,
    phi_hat: f64,
    sigma2_u: f64,
    rng: &mut R,
) -> Result<(Waveform, Waveform), ProtocolError> {
    let ctx = TrialContext::build(scenario, cfg)?;
    let epsilon = match cfg.epsilon {
        EpsilonPolicy::Fixed(e) => e,
        EpsilonPolicy::RandomPerTrial => rng.random::<f64>() * 2.0 * PI,
    };
    let lambda = cfg.wavelength();
    let xi_bh = channel_coeff(ctx.polar.r_bh, lambda, epsilon);
    let xi_uh = channel_coeff(ctx.polar.r_hu, lambda, epsilon);
    let hris = cfg.hris_array();
    let bs = cfg.bs_array();
    let p1 = hris_profile_tx1(&hris, phi_hat, ctx.polar.theta_bh);
    let p2 = hris_profile_tx2(&hris, phi_hat, ctx.polar.theta_bh);
    let g1 = downlink_gain(
        &bs,
        &hris,
        xi_bh,
        xi_uh,
        ctx.polar.phi_hu,
        ctx.polar.theta_bh,
        ctx.polar.phi_bh,
        &p1,
    );
    let g2 = downlink_gain(
        &bs,
        &hris,
        xi_bh,
        xi_uh,
        ctx.polar.phi_hu,
        ctx.polar.theta_bh,
        ctx.polar.phi_bh,
        &p2,
    );
    let ts = ctx.pulse.sample_period();
    let n_uf = cfg.seq_len * cfg.oversampling as usize;
    let mean1 = Waveform::new(
        ctx.burst.iter().map(|b| g1 * b).collect(),
        ts,
        ctx.k_start as f64 * ts,
    );
    let mean2 = Waveform::new(
        ctx.burst.iter().map(|b| g2 * b).collect(),
        ts,
        (ctx.k_start + n_uf as i64) as f64 * ts,
    );
    Ok((
        add_awgn(&mean1, sigma2_u, rng),
        add_awgn(&mean2, sigma2_u, rng),
    ))
}

/// Runs a single seeded protocol round end to end.
pub fn run_trial(
    scenario: &Scenario,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<TrialOutcome, ProtocolError> {
    let ctx = TrialContext::build(scenario, cfg)?;
    Ok(ctx.run(seed))
}
