//! Receiver-side estimators: MUSIC angle of arrival from HRIS snapshots,
//! differential demodulation of the backscattered angle message, and
//! correlation-based time-of-arrival / range estimation.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::channel::{steering_vector, ArrayConfig};
use crate::linalg::{eigh, hdot};
use crate::signals::Waveform;
use crate::SPEED_OF_LIGHT;

/// Pilot snapshots collected at the HRIS, one length-R vector per symbol.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub snapshots: Vec<Vec<Complex64>>,
    pub known_symbols: Vec<Complex64>,
}

/// Angle estimate with the pseudo-spectrum kept for diagnostics.
#[derive(Debug, Clone)]
pub struct AoaEstimate {
    /// Estimated angle in radians, inside (-pi/2, pi/2).
    pub phi: f64,
    /// MUSIC pseudo-spectrum over the search grid.
    pub spectrum: Vec<f64>,
    /// Set when a second spectral peak lies within 1 dB of the maximum.
    pub ambiguous: bool,
}

/// Time-of-arrival estimate from a correlation peak.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaEstimate {
    /// Arrival time of the burst in the receiver clock, seconds.
    pub t_rx: f64,
    /// Complex correlation value at the peak.
    pub peak_value: Complex64,
    /// Integer peak lag into the received window.
    pub peak_lag: usize,
    /// Whether sub-sample refinement was applied.
    pub interpolated: bool,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimatorError {
    #[error("degenerate covariance: no snapshots")]
    NoSnapshots,
    #[error("snapshot length {0} does not match array size {1}")]
    SnapshotSizeMismatch(usize, usize),
    #[error("waveform lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-magnitude combiner output; detection failed")]
    ZeroMagnitude,
    #[error("received window shorter than the template: {0} < {1}")]
    WindowTooShort(usize, usize),
    #[error("correlation peak only {0:.1} dB above the median; detection failed")]
    LowPeak(f64),
    #[error("negative time of flight {0:.3e} s; timing misconfiguration")]
    NegativeTof(f64),
}

/// MUSIC angle-of-arrival estimate for a single source.
///
/// Forms the sample covariance, splits off the one-dimensional signal
/// subspace, scans the pseudo-spectrum `1 / ||E_n^H a(theta)||^2` on a
/// uniform grid over (-90, 90) degrees with the given step, and refines the
/// winning grid point with a three-point parabola on the null spectrum.
pub fn music_aoa(
    set: &SnapshotSet,
    cfg: &ArrayConfig,
    grid_step: f64,
) -> Result<AoaEstimate, EstimatorError> {
    let n = set.snapshots.len();
    if n == 0 {
        return Err(EstimatorError::NoSnapshots);
    }
    let r = cfg.num_elements;
    for snap in &set.snapshots {
        if snap.len() != r {
            return Err(EstimatorError::SnapshotSizeMismatch(snap.len(), r));
        }
    }

    // Sample covariance (1/N) sum y y^H.
    let mut cov = vec![vec![Complex64::new(0.0, 0.0); r]; r];
    for snap in &set.snapshots {
        for i in 0..r {
            for j in 0..r {
                cov[i][j] += snap[i] * snap[j].conj();
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for row in &mut cov {
        for v in row.iter_mut() {
            *v *= inv_n;
        }
    }

    let (_vals, vecs) = eigh(&cov);
    // Ascending order: the first R-1 eigenvectors span the noise subspace.
    let noise = &vecs[..r - 1];

    let steps = (PI / grid_step).floor() as usize;
    let mut null = Vec::with_capacity(steps);
    let mut grid = Vec::with_capacity(steps);
    let mut theta = -PI / 2.0 + grid_step;
    while theta < PI / 2.0 - grid_step / 2.0 {
        let a = steering_vector(cfg, theta);
        let d: f64 = noise.iter().map(|e| hdot(e, &a).norm_sqr()).sum();
        grid.push(theta);
        null.push(d);
        theta += grid_step;
    }

    let spectrum: Vec<f64> = null.iter().map(|&d| 1.0 / d.max(1e-300)).collect();

    let (best, _) = null
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();

    // Parabolic refinement on the null spectrum around the minimum.
    let mut phi = grid[best];
    if best > 0 && best + 1 < null.len() {
        let (ym, y0, yp) = (null[best - 1], null[best], null[best + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if denom > 0.0 {
            let delta = 0.5 * (ym - yp) / denom;
            phi += delta.clamp(-0.5, 0.5) * grid_step;
        }
    }

    // Ambiguity: a second local spectral peak within 1 dB of the best.
    let mut peaks: Vec<f64> = Vec::new();
    for i in 1..spectrum.len() - 1 {
        if spectrum[i] > spectrum[i - 1] && spectrum[i] > spectrum[i + 1] {
            peaks.push(spectrum[i]);
        }
    }
    peaks.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let ambiguous = peaks.len() >= 2 && 10.0 * (peaks[0] / peaks[1]).log10() < 1.0;

    Ok(AoaEstimate {
        phi,
        spectrum,
        ambiguous,
    })
}

/// Differential combiner `z = (1/L) sum r_n^* r'_n` over two time-aligned
/// windows of equal length.
pub fn differential_combine(r: &Waveform, rp: &Waveform) -> Result<Complex64, EstimatorError> {
    if r.len() != rp.len() {
        return Err(EstimatorError::LengthMismatch(r.len(), rp.len()));
    }
    let sum: Complex64 = r
        .samples
        .iter()
        .zip(&rp.samples)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum / r.len() as f64)
}

/// Recovers the backscattered angle message: `phi = -angle(z)`, wrapped to
/// (-pi, pi].
pub fn demod_aoa(z: Complex64) -> Result<f64, EstimatorError> {
    if z.norm() == 0.0 {
        return Err(EstimatorError::ZeroMagnitude);
    }
    let mut phi = -z.arg();
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    Ok(phi)
}

// Minimum number of correlation lags before the peak-to-median detection
// check is meaningful.
const MIN_LAGS_FOR_DETECTION: usize = 16;
const DETECTION_THRESHOLD_DB: f64 = 6.0;

/// Correlates the received window against a noiseless replica and returns
/// the arrival time of the burst.
///
/// The peak lag is refined by a three-point parabola on `|C|^2` when
/// `interp` is set. A detection failure is reported when the peak rises
/// less than 6 dB above the median correlation magnitude.
pub fn toa_correlate(
    received: &Waveform,
    template: &Waveform,
    interp: bool,
) -> Result<ToaEstimate, EstimatorError> {
    debug_assert!(
        (received.sample_period - template.sample_period).abs()
            < 1e-12 * template.sample_period
    );
    let lt = template.len();
    let lr = received.len();
    if lr < lt {
        return Err(EstimatorError::WindowTooShort(lr, lt));
    }

    let lags = lr - lt + 1;
    let mut corr = Vec::with_capacity(lags);
    for m in 0..lags {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, t) in template.samples.iter().enumerate() {
            acc += t.conj() * received.samples[m + i];
        }
        corr.push(acc);
    }

    let mags_sq: Vec<f64> = corr.iter().map(|c| c.norm_sqr()).collect();
    let (peak_lag, &peak_sq) = mags_sq
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();

    if lags >= MIN_LAGS_FOR_DETECTION {
        let mut sorted = mags_sq.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let ratio_db = 10.0 * (peak_sq / median.max(1e-300)).log10() / 2.0;
        if ratio_db < DETECTION_THRESHOLD_DB {
            return Err(EstimatorError::LowPeak(ratio_db));
        }
    }

    let ts = received.sample_period;
    let mut t_rx = received.t0 + peak_lag as f64 * ts - template.t0;
    let mut interpolated = false;
    if interp && peak_lag > 0 && peak_lag + 1 < lags {
        let (ym, y0, yp) = (mags_sq[peak_lag - 1], mags_sq[peak_lag], mags_sq[peak_lag + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if denom < 0.0 {
            let delta = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
            t_rx += delta * ts;
            interpolated = true;
        }
    }

    Ok(ToaEstimate {
        t_rx,
        peak_value: corr[peak_lag],
        peak_lag,
        interpolated,
    })
}

/// Combines the arrival times of the two acknowledgment bursts into a range
/// estimate. The second burst starts `N T_c` after the first; each arrival
/// time measures twice the HRIS-UE time of flight plus the turnaround `T`.
pub fn range_estimate(
    toa1: &ToaEstimate,
    toa2: &ToaEstimate,
    turnaround: f64,
    n: usize,
    symbol_period: f64,
) -> Result<f64, EstimatorError> {
    let tof1 = (toa1.t_rx - turnaround) / 2.0;
    let tof2 = (toa2.t_rx - turnaround - n as f64 * symbol_period) / 2.0;
    if tof1 < -1e-12 {
        return Err(EstimatorError::NegativeTof(tof1));
    }
    if tof2 < -1e-12 {
        return Err(EstimatorError::NegativeTof(tof2));
    }
    Ok(SPEED_OF_LIGHT * (tof1 + tof2) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::uplink_channel;
    use crate::signals::{add_awgn, cazac, modulate, modulate_onto_grid, PulseConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hris() -> ArrayConfig {
        ArrayConfig::half_wavelength(64, crate::SPEED_OF_LIGHT / 25e9)
    }

    fn noiseless_snapshots(phi: f64, n: usize) -> SnapshotSet {
        let x = cazac(n).unwrap();
        let h = uplink_channel(&hris(), Complex64::new(1e-6, -2e-6), phi);
        let snapshots = x.iter().map(|xn| h.iter().map(|hi| hi * xn).collect()).collect();
        SnapshotSet {
            snapshots,
            known_symbols: x,
        }
    }

    fn deg(d: f64) -> f64 {
        d * PI / 180.0
    }

    #[test]
    fn music_on_grid_angle_is_exact() {
        let set = noiseless_snapshots(0.0, 20);
        let est = music_aoa(&set, &hris(), deg(0.1)).unwrap();
        assert!(est.phi.abs() < 1e-12);
        assert!(!est.ambiguous);
    }

    #[test]
    fn music_recovers_off_grid_angle() {
        let set = noiseless_snapshots(0.3, 50);
        let step = deg(0.02);
        let est = music_aoa(&set, &hris(), step).unwrap();
        assert!(
            (est.phi - 0.3).abs() < step / 10.0,
            "err {}",
            (est.phi - 0.3).abs()
        );
    }

    #[test]
    fn music_random_angles_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let step = deg(0.1);
        for _ in 0..100 {
            let phi = rng.random_range(-deg(80.0)..deg(80.0));
            let set = noiseless_snapshots(phi, 16);
            let est = music_aoa(&set, &hris(), step).unwrap();
            assert!(
                (est.phi - phi).abs() < step / 10.0,
                "phi {phi}: estimate {} err {}",
                est.phi,
                (est.phi - phi).abs()
            );
        }
    }

    #[test]
    fn music_invariant_to_common_scaling() {
        let set = noiseless_snapshots(-0.41, 30);
        let scale = Complex64::from_polar(3.7, 1.1);
        let scaled = SnapshotSet {
            snapshots: set
                .snapshots
                .iter()
                .map(|s| s.iter().map(|v| v * scale).collect())
                .collect(),
            known_symbols: set.known_symbols.clone(),
        };
        let step = deg(0.05);
        let a = music_aoa(&set, &hris(), step).unwrap();
        let b = music_aoa(&scaled, &hris(), step).unwrap();
        assert!((a.phi - b.phi).abs() < 1e-9);
    }

    #[test]
    fn music_with_noise_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = 0.25;
        let mut set = noiseless_snapshots(phi, 100);
        // Signal power per element ~ |xi|^2; add noise 40 dB below it.
        let sigma2 = 5e-12_f64.powi(2) * 1e-4;
        let sigma = (sigma2 / 2.0).sqrt();
        for snap in &mut set.snapshots {
            for v in snap.iter_mut() {
                let u1: f64 = 1.0 - rng.random::<f64>();
                let u2: f64 = rng.random();
                let amp = (-2.0 * u1.ln()).sqrt() * sigma;
                *v += Complex64::from_polar(amp, 2.0 * PI * u2);
            }
        }
        let est = music_aoa(&set, &hris(), deg(0.02)).unwrap();
        assert!((est.phi - phi).abs() < 1e-3);
    }

    #[test]
    fn music_flags_ambiguous_spectra() {
        // Two sources of equal power break the single-source model: the
        // pseudo-spectrum shows two comparable peaks and the estimate is
        // flagged.
        let cfg = hris();
        let x = cazac(40).unwrap();
        let h1 = uplink_channel(&cfg, Complex64::new(1e-6, 0.0), 0.30);
        let h2 = uplink_channel(&cfg, Complex64::new(0.0, 1e-6), -0.42);
        let snapshots: Vec<Vec<Complex64>> = x
            .iter()
            .enumerate()
            .map(|(n, xn)| {
                let other = x[(n + 17) % x.len()];
                h1.iter()
                    .zip(&h2)
                    .map(|(a, b)| a * xn + b * other)
                    .collect()
            })
            .collect();
        let set = SnapshotSet {
            snapshots,
            known_symbols: x,
        };
        let est = music_aoa(&set, &cfg, deg(0.1)).unwrap();
        assert!(est.ambiguous, "two equal sources should raise the flag");
    }

    #[test]
    fn music_rejects_empty() {
        let set = SnapshotSet {
            snapshots: vec![],
            known_symbols: vec![],
        };
        assert_eq!(
            music_aoa(&set, &hris(), deg(0.1)).unwrap_err(),
            EstimatorError::NoSnapshots
        );
    }

    #[test]
    fn combiner_phase_extraction() {
        let ts = 1e-9;
        let base: Vec<Complex64> = (0..64)
            .map(|i| Complex64::from_polar(1.0 + 0.1 * (i % 5) as f64, 0.3 * i as f64))
            .collect();
        let r = Waveform::new(base.clone(), ts, 0.0);

        // r' = r: mean power, real and nonnegative.
        let z = differential_combine(&r, &r).unwrap();
        assert!(z.im.abs() < 1e-12);
        assert!((z.re - r.energy() / r.len() as f64).abs() < 1e-12);

        // r' = e^{j psi} r: the combiner reads off psi.
        for &psi in &[0.7, -2.1, 3.0] {
            let rot = Complex64::from_polar(1.0, psi);
            let rp = Waveform::new(base.iter().map(|v| v * rot).collect(), ts, 0.0);
            let z = differential_combine(&r, &rp).unwrap();
            assert!((z.arg() - psi).abs() < 1e-12);
        }

        let short = Waveform::new(base[..32].to_vec(), ts, 0.0);
        assert!(matches!(
            differential_combine(&r, &short),
            Err(EstimatorError::LengthMismatch(64, 32))
        ));
    }

    #[test]
    fn combiner_invariant_to_common_gain() {
        let ts = 1e-9;
        let base: Vec<Complex64> = (0..128)
            .map(|i| Complex64::from_polar(0.5 + (i % 7) as f64, 1.7 * i as f64))
            .collect();
        let msg = Complex64::from_polar(1.0, -0.9);
        let r = Waveform::new(base.iter().map(|v| v * msg).collect(), ts, 0.0);
        let rp = Waveform::new(base.clone(), ts, 0.0);
        let z0 = differential_combine(&r, &rp).unwrap();

        let gain = Complex64::from_polar(2.5, 0.6);
        let rg = Waveform::new(r.samples.iter().map(|v| v * gain).collect(), ts, 0.0);
        let rpg = Waveform::new(rp.samples.iter().map(|v| v * gain).collect(), ts, 0.0);
        let z1 = differential_combine(&rg, &rpg).unwrap();
        assert!((z0.arg() - z1.arg()).abs() < 1e-12);
    }

    #[test]
    fn demod_basics() {
        assert!((demod_aoa(Complex64::from_polar(1.0, -0.5)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(demod_aoa(Complex64::new(1.0, 0.0)).unwrap(), -0.0);
        assert_eq!(
            demod_aoa(Complex64::new(0.0, 0.0)).unwrap_err(),
            EstimatorError::ZeroMagnitude
        );
    }

    fn toa_cfg() -> PulseConfig {
        PulseConfig {
            symbol_period: 50e-9,
            roll_off: 0.8,
            oversampling: 10,
            span: 16,
        }
    }

    // Received window embedding the burst at `delay` with margin on both sides.
    fn received_window(x: &[Complex64], cfg: &PulseConfig, delay: f64, margin_syms: i64) -> Waveform {
        let ts = cfg.sample_period();
        let lead = (cfg.span as i64 + margin_syms) as f64 * cfg.symbol_period;
        let k_start = ((delay - lead) / ts).floor() as i64;
        let len = ((x.len() as i64 + 2 * cfg.span as i64 + 2 * margin_syms)
            * cfg.oversampling as i64
            + 1) as usize;
        let samples = modulate_onto_grid(x, cfg, delay, k_start, len);
        Waveform::new(samples, ts, k_start as f64 * ts)
    }

    #[test]
    fn toa_exact_on_grid() {
        let cfg = toa_cfg();
        let x = cazac(50).unwrap();
        let template = modulate(&x, &cfg, 0.0).unwrap();
        let ts = cfg.sample_period();
        let delay = 137.0 * ts;
        let recv = received_window(&x, &cfg, delay, 20);
        let est = toa_correlate(&recv, &template, false).unwrap();
        assert!(
            (est.t_rx - delay).abs() < 1e-15,
            "t_rx {} vs delay {delay}",
            est.t_rx
        );
    }

    #[test]
    fn toa_fractional_delay_with_interpolation() {
        let cfg = toa_cfg();
        let x = cazac(50).unwrap();
        let template = modulate(&x, &cfg, 0.0).unwrap();
        let ts = cfg.sample_period();
        for &frac in &[0.37, 0.12, 0.5, 0.81] {
            let delay = (64.0 + frac) * ts;
            let recv = received_window(&x, &cfg, delay, 20);
            let coarse = toa_correlate(&recv, &template, false).unwrap();
            assert!((coarse.t_rx - delay).abs() <= 0.5 * ts + 1e-15);
            let fine = toa_correlate(&recv, &template, true).unwrap();
            assert!(
                (fine.t_rx - delay).abs() < 0.1 * ts,
                "frac {frac}: err {}",
                (fine.t_rx - delay).abs()
            );
            assert!(fine.interpolated);
        }
    }

    #[test]
    fn toa_pure_noise_raises_low_peak() {
        let cfg = toa_cfg();
        let x = cazac(50).unwrap();
        let template = modulate(&x, &cfg, 0.0).unwrap();
        let ts = cfg.sample_period();
        let len = template.len() + 400;
        let silent = Waveform::new(vec![Complex64::new(0.0, 0.0); len], ts, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let noise = add_awgn(&silent, 1.0, &mut rng);
        match toa_correlate(&noise, &template, false) {
            Err(EstimatorError::LowPeak(_)) => {}
            other => panic!("expected LowPeak, got {other:?}"),
        }
    }

    #[test]
    fn range_estimate_inverts_the_timeline() {
        let t = 1e-3;
        let tc = 50e-9;
        let n = 100;
        let tau = 333.56e-9;
        let toa1 = ToaEstimate {
            t_rx: t + 2.0 * tau,
            peak_value: Complex64::new(1.0, 0.0),
            peak_lag: 0,
            interpolated: false,
        };
        let toa2 = ToaEstimate {
            t_rx: t + n as f64 * tc + 2.0 * tau,
            ..toa1.clone()
        };
        let r = range_estimate(&toa1, &toa2, t, n, tc).unwrap();
        assert!((r - SPEED_OF_LIGHT * tau).abs() < 1e-9);
    }

    #[test]
    fn range_estimate_rejects_negative_tof() {
        let toa = ToaEstimate {
            t_rx: 0.5e-3,
            peak_value: Complex64::new(1.0, 0.0),
            peak_lag: 0,
            interpolated: false,
        };
        assert!(matches!(
            range_estimate(&toa, &toa, 1e-3, 100, 50e-9),
            Err(EstimatorError::NegativeTof(_))
        ));
    }

    #[test]
    fn averaging_two_toas_never_hurts_noiseless() {
        let cfg = toa_cfg();
        let x = cazac(50).unwrap();
        let template = modulate(&x, &cfg, 0.0).unwrap();
        let ts = cfg.sample_period();
        let t = 1e-3;
        let tc = cfg.symbol_period;
        for &frac in &[0.1, 0.33, 0.47] {
            let tau = (40.0 + frac) * ts / 2.0;
            let d1 = t + 2.0 * tau;
            let d2 = t + 50.0 * tc + 2.0 * tau;
            let r1 = received_window(&x, &cfg, d1, 20);
            let r2 = received_window(&x, &cfg, d2, 20);
            let toa1 = toa_correlate(&r1, &template, false).unwrap();
            let toa2 = toa_correlate(&r2, &template, false).unwrap();
            let r = range_estimate(&toa1, &toa2, t, 50, tc).unwrap();
            let e1 = (SPEED_OF_LIGHT * (toa1.t_rx - t) / 2.0 - SPEED_OF_LIGHT * tau).abs();
            let e2 =
                (SPEED_OF_LIGHT * (toa2.t_rx - t - 50.0 * tc) / 2.0 - SPEED_OF_LIGHT * tau).abs();
            let e = (r - SPEED_OF_LIGHT * tau).abs();
            assert!(e <= e1.max(e2) + 1e-12);
        }
    }
}
