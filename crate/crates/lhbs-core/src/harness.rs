//! Monte Carlo experiment orchestration: seeded SNR sweeps, RMSE
//! aggregation for range/angle/position, and the CRLB overlay.
//!
//! Per-trial seeds are a pure function of `(master_seed, point, trial)`, so
//! aggregation is deterministic no matter how trials are scheduled across
//! workers.

use rayon::prelude::*;

use crate::crlb;
use crate::geometry::Scenario;
use crate::protocol::{ProtocolConfig, ProtocolError, TrialContext};

/// Sweep description: which SNR points, how many trials each, and the seed.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    pub cfg: ProtocolConfig,
    pub scenario: Scenario,
    pub master_seed: u64,
}

/// Aggregated results at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub rmse_range: f64,
    pub rmse_aoa: f64,
    pub rmse_pos: f64,
    pub sqrt_crlb_range: f64,
    pub sqrt_crlb_aoa: f64,
    pub sqrt_crlb_pos: f64,
    pub failures: usize,
    pub trials: usize,
}

/// One row per SNR point, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Fixed-schema CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "snr_db,rmse_r,rmse_phi,rmse_pos,sqrt_crlb_r,sqrt_crlb_phi,sqrt_crlb_pos,failures,trials\n",
        );
        for p in &self.points {
            out.push_str(&format!(
                "{:.2},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{}\n",
                p.snr_db,
                p.rmse_range,
                p.rmse_aoa,
                p.rmse_pos,
                p.sqrt_crlb_range,
                p.sqrt_crlb_aoa,
                p.sqrt_crlb_pos,
                p.failures,
                p.trials
            ));
        }
        out
    }
}

/// Noise variance implied by the SNR definition
/// `SNR = |xi_bh xi_uh|^2 R^2 / sigma^2` for the given scenario.
pub fn snr_to_noise_variance(
    snr_db: f64,
    scenario: &Scenario,
    cfg: &ProtocolConfig,
) -> Result<f64, ProtocolError> {
    let polar = crate::geometry::derive_polar(scenario)?;
    Ok(ProtocolConfig { snr_db, ..*cfg }.noise_variance(&polar))
}

/// Per-trial seed derivation; splitmix64 over the three indices.
pub fn trial_seed(master_seed: u64, point: usize, trial: usize) -> u64 {
    let mut x = master_seed
        ^ (point as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (trial as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a;
    while x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    }
    while x <= -std::f64::consts::PI {
        x += 2.0 * std::f64::consts::PI;
    }
    x
}

/// Runs the full sweep: seeded trials per SNR point, RMSE over successful
/// trials, failures counted separately, bounds evaluated once per point.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ProtocolError> {
    if spec.trials_per_point == 0 {
        return Err(ProtocolError::InvalidConfig(
            "trials_per_point: must be at least 1".to_string(),
        ));
    }
    if spec.snr_grid_db.is_empty() {
        return Err(ProtocolError::InvalidConfig(
            "snr grid: must not be empty".to_string(),
        ));
    }
    if spec.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProtocolError::InvalidConfig(
            "snr grid: must be strictly increasing".to_string(),
        ));
    }

    let ctx = TrialContext::build(&spec.scenario, &spec.cfg)?;
    let truth = ctx.polar;

    let mut points = Vec::with_capacity(spec.snr_grid_db.len());
    for (pi, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        let sigma2 = snr_to_noise_variance(snr_db, &spec.scenario, &spec.cfg)?;

        let outcomes: Vec<_> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|ti| ctx.run_with_noise(sigma2, trial_seed(spec.master_seed, pi, ti)))
            .collect();

        let mut failures = 0usize;
        let mut sum_r2 = 0.0;
        let mut sum_phi2 = 0.0;
        let mut sum_pos2 = 0.0;
        let mut ok = 0usize;
        for outcome in &outcomes {
            match outcome {
                Ok(t) => {
                    let dr = t.r_hat - truth.r_hu;
                    let dphi = wrap_angle(t.phi_demod - truth.phi_hu);
                    let dpos = t.p_hat.distance_to(&spec.scenario.ue_pos);
                    sum_r2 += dr * dr;
                    sum_phi2 += dphi * dphi;
                    sum_pos2 += dpos * dpos;
                    ok += 1;
                }
                Err(_) => failures += 1,
            }
        }
        let rmse = |s: f64| if ok > 0 { (s / ok as f64).sqrt() } else { f64::NAN };

        let (cr, cp, cpos) = match crlb::report(&spec.scenario, &spec.cfg, snr_db) {
            Ok(rep) => (rep.crlb_r.sqrt(), rep.crlb_phi.sqrt(), rep.crlb_pos.sqrt()),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };

        points.push(SweepPoint {
            snr_db,
            rmse_range: rmse(sum_r2),
            rmse_aoa: rmse(sum_phi2),
            rmse_pos: rmse(sum_pos2),
            sqrt_crlb_range: cr,
            sqrt_crlb_aoa: cp,
            sqrt_crlb_pos: cpos,
            failures,
            trials: spec.trials_per_point,
        });
    }
    Ok(SweepResult { points })
}
