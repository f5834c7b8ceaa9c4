//! Waveform primitives: CAZAC pilot sequences, square-root raised cosine
//! pulse shaping, baseband burst synthesis on the receiver sample grid,
//! complex AWGN, and the analytic raised cosine plus its derivative.
//!
//! Burst synthesis evaluates the matched-filter cascade in closed form
//! rather than convolving two truncated filters; a discrete-convolution
//! path exists for cross-validation.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;
use thiserror::Error;

/// A complex baseband sample sequence on a uniform grid.
///
/// `t0` is the time of sample index 0 in the receiver clock, so sample `i`
/// sits at `t0 + i * sample_period`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub sample_period: f64,
    pub t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>, sample_period: f64, t0: f64) -> Self {
        assert!(!samples.is_empty(), "waveform must not be empty");
        assert!(sample_period > 0.0, "sample period must be positive");
        Self {
            samples,
            sample_period,
            t0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// A view of `len` samples starting at `start`, with `t0` adjusted.
    pub fn slice(&self, start: usize, len: usize) -> Waveform {
        let end = (start + len).min(self.samples.len());
        Waveform::new(
            self.samples[start..end].to_vec(),
            self.sample_period,
            self.t0 + start as f64 * self.sample_period,
        )
    }
}

/// Pulse-shaping parameters shared by transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    /// Symbol period `T_c` in seconds (inverse of the signal bandwidth).
    pub symbol_period: f64,
    /// Roll-off factor in (0, 1].
    pub roll_off: f64,
    /// Oversampling factor `u_f`; the sample period is `T_c / u_f`.
    pub oversampling: u32,
    /// Pulse truncation half-length in symbols.
    pub span: u32,
}

impl PulseConfig {
    pub fn sample_period(&self) -> f64 {
        self.symbol_period / self.oversampling as f64
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.symbol_period > 0.0) {
            return Err(SignalError::InvalidPulse("symbol_period must be positive"));
        }
        if !(self.roll_off > 0.0 && self.roll_off <= 1.0) {
            return Err(SignalError::InvalidPulse("roll_off must be in (0, 1]"));
        }
        if self.oversampling < 1 {
            return Err(SignalError::InvalidPulse("oversampling must be >= 1"));
        }
        if self.span < 8 {
            return Err(SignalError::InvalidPulse("span must be >= 8 symbols"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("CAZAC length must be even and positive, got {0}")]
    BadCazacLength(usize),
    #[error("invalid pulse configuration: {0}")]
    InvalidPulse(&'static str),
    #[error("synthesis window too short: edge energy fraction {0:.2e} exceeds 1e-3")]
    WindowTooShort(f64),
    #[error("empty symbol sequence")]
    EmptySymbols,
}

/// CAZAC pilot sequence `x_n = exp(j pi n (n+1) / N)`, `N` even.
pub fn cazac(n: usize) -> Result<Vec<Complex64>, SignalError> {
    if n == 0 || n % 2 != 0 {
        return Err(SignalError::BadCazacLength(n));
    }
    Ok((0..n)
        .map(|k| {
            let phase = PI * (k as f64) * (k as f64 + 1.0) / n as f64;
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

// Taylor coefficients of the raised cosine around t = 0:
// q~(u) = 1 + A u^2 + B u^4 + O(u^6), u = t / T_c.
fn rc_taylor_a(beta: f64) -> f64 {
    -PI * PI / 6.0 - (PI * beta).powi(2) / 2.0 + 4.0 * beta * beta
}

fn rc_taylor_b(beta: f64) -> f64 {
    let pb = PI * beta;
    PI.powi(4) / 120.0 + pb.powi(4) / 24.0 + 16.0 * beta.powi(4) + PI.powi(4) * beta * beta / 12.0
        - 2.0 * PI * PI * beta * beta / 3.0
        - 2.0 * PI * PI * beta.powi(4)
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-9 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

// First three derivatives of sinc(u) = sin(pi u) / (pi u), valid away from 0.
fn sinc_d1(u: f64) -> f64 {
    let w = PI * u;
    PI * (w * w.cos() - w.sin()) / (w * w)
}

// Around the pole u* = 1/(2 beta) the raised cosine factors as
// sinc(u) * (pi/4) * w(v) with v = u - u* and
// w(v) = sin(pi beta v) / (pi beta v) * 1 / (1 + beta v),
// both removable. w and w' are evaluated from one shared power series so
// the function and its derivative stay mutually consistent to rounding
// level (the angle/range Fisher cross-term is sensitive to exactly that).
const RC_POLE_TERMS: usize = 11;

fn rc_pole_poly(beta: f64) -> [f64; RC_POLE_TERMS] {
    let p = PI * beta;
    // sin(p v)/(p v) = sum_m (-1)^m p^{2m} v^{2m} / (2m+1)!
    let mut a = [0.0; RC_POLE_TERMS];
    let mut term = 1.0;
    let mut m = 0;
    while 2 * m < RC_POLE_TERMS {
        a[2 * m] = term;
        term *= -(p * p) / ((2 * m + 2) as f64 * (2 * m + 3) as f64);
        m += 1;
    }
    // 1/(1 + beta v) = sum_j (-beta)^j v^j, folded into the product.
    let mut c = [0.0; RC_POLE_TERMS];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, aj) in a.iter().enumerate().take(k + 1) {
            acc += aj * (-beta).powi((k - j) as i32);
        }
        *ck = acc;
    }
    c
}

fn horner(c: &[f64], v: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * v + ck)
}

fn horner_derivative(c: &[f64], v: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * v + k as f64 * ck)
}

const RC_ZERO_BRANCH: f64 = 1e-6;
const RC_POLE_BRANCH: f64 = 2e-2;

/// Raised cosine `q~(t)`: the matched-filter cascade of the unit-energy SRRC
/// pulse, normalized to `q~(0) = 1` and ISI-free at symbol spacing.
pub fn raised_cosine(t: f64, cfg: &PulseConfig) -> f64 {
    let beta = cfg.roll_off;
    let u = (t / cfg.symbol_period).abs();

    if u < RC_ZERO_BRANCH {
        return 1.0 + rc_taylor_a(beta) * u * u + rc_taylor_b(beta) * u.powi(4);
    }

    if beta > 0.0 {
        let ustar = 1.0 / (2.0 * beta);
        let v = u - ustar;
        if v.abs() < RC_POLE_BRANCH {
            let c = rc_pole_poly(beta);
            return sinc(u) * (PI / 4.0) * horner(&c, v);
        }
    }

    let denom = 1.0 - (2.0 * beta * u).powi(2);
    sinc(u) * (PI * beta * u).cos() / denom
}

/// Derivative of [`raised_cosine`] with respect to time, 1/seconds.
pub fn raised_cosine_derivative(t: f64, cfg: &PulseConfig) -> f64 {
    let beta = cfg.roll_off;
    let tc = cfg.symbol_period;
    let u = (t / tc).abs();
    let sign = if t < 0.0 { -1.0 } else { 1.0 };

    if u < RC_ZERO_BRANCH {
        let du = 2.0 * rc_taylor_a(beta) * u + 4.0 * rc_taylor_b(beta) * u.powi(3);
        return sign * du / tc;
    }

    if beta > 0.0 {
        let ustar = 1.0 / (2.0 * beta);
        let v = u - ustar;
        if v.abs() < RC_POLE_BRANCH {
            let c = rc_pole_poly(beta);
            let du = sinc_d1(u) * (PI / 4.0) * horner(&c, v)
                + sinc(u) * (PI / 4.0) * horner_derivative(&c, v);
            return sign * du / tc;
        }
    }

    let s = sinc(u);
    let sp = sinc_d1(u);
    let c = (PI * beta * u).cos();
    let cp = -PI * beta * (PI * beta * u).sin();
    let m = 1.0 / (1.0 - (2.0 * beta * u).powi(2));
    let mp = 8.0 * beta * beta * u * m * m;
    sign * (sp * c * m + s * cp * m + s * c * mp) / tc
}

// Unit-energy square-root raised cosine evaluated at time t.
fn srrc(t: f64, cfg: &PulseConfig) -> f64 {
    let beta = cfg.roll_off;
    let tc = cfg.symbol_period;
    let u = (t / tc).abs();
    let scale = 1.0 / tc.sqrt();

    if u < 1e-8 {
        return scale * (1.0 - beta + 4.0 * beta / PI);
    }
    if beta > 0.0 && (u - 1.0 / (4.0 * beta)).abs() < 1e-6 {
        let a = PI / (4.0 * beta);
        return scale * (beta / 2.0f64.sqrt())
            * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * u * (1.0 - beta)).sin() + 4.0 * beta * u * (PI * u * (1.0 + beta)).cos();
    let den = PI * u * (1.0 - (4.0 * beta * u).powi(2));
    scale * num / den
}

/// SRRC filter taps sampled at the oversampled period, normalized so that
/// the discrete matched-filter cascade peaks at exactly 1.
pub fn srrc_pulse(cfg: &PulseConfig) -> Waveform {
    let ts = cfg.sample_period();
    let half = (cfg.span * cfg.oversampling) as i64;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| srrc(i as f64 * ts, cfg) * ts.sqrt())
        .collect();
    let norm: f64 = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    for t in &mut taps {
        *t /= norm;
    }
    Waveform::new(
        taps.into_iter().map(|t| Complex64::new(t, 0.0)).collect(),
        ts,
        -(cfg.span as f64) * cfg.symbol_period,
    )
}

// Evaluates sum_n symbols[n] * pulse(t_i - n T_c - delay) on the sample grid
// t_i = (k_start + i) * T_s. `reach` limits which symbols contribute per
// sample (pulse-span pruning); `None` sums every symbol.
fn synth_on_grid(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
    k_start: i64,
    len: usize,
    reach: Option<i64>,
    pulse: impl Fn(f64) -> f64,
) -> Vec<Complex64> {
    let ts = cfg.sample_period();
    let tc = cfg.symbol_period;
    let n = symbols.len() as i64;
    let mut out = Vec::with_capacity(len);
    for i in 0..len as i64 {
        let t = (k_start + i) as f64 * ts;
        let rel = t - delay;
        let (lo, hi) = match reach {
            Some(r) => {
                let mc = (rel / tc).round() as i64;
                ((mc - r).max(0), (mc + r).min(n - 1))
            }
            None => (0, n - 1),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let mut m = lo;
        while m <= hi {
            acc += symbols[m as usize] * pulse(rel - m as f64 * tc);
            m += 1;
        }
        out.push(acc);
    }
    out
}

/// Synthesizes the matched-filtered burst on an explicit grid window
/// `[k_start, k_start + len)` of the receiver clock, pruning pulse tails
/// beyond the configured span.
pub fn modulate_onto_grid(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
    k_start: i64,
    len: usize,
) -> Vec<Complex64> {
    let reach = Some(cfg.span as i64 + 1);
    synth_on_grid(symbols, cfg, delay, k_start, len, reach, |t| {
        raised_cosine(t, cfg)
    })
}

/// Time derivative of [`modulate_onto_grid`] with respect to the sample time.
pub fn modulate_derivative_onto_grid(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
    k_start: i64,
    len: usize,
) -> Vec<Complex64> {
    let reach = Some(cfg.span as i64 + 1);
    synth_on_grid(symbols, cfg, delay, k_start, len, reach, |t| {
        raised_cosine_derivative(t, cfg)
    })
}

/// [`modulate_onto_grid`] without tail pruning: every symbol contributes to
/// every sample. Slower, but smooth in `delay` to machine precision; used
/// where derivatives of the mean signal matter.
pub fn modulate_dense_onto_grid(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
    k_start: i64,
    len: usize,
) -> Vec<Complex64> {
    synth_on_grid(symbols, cfg, delay, k_start, len, None, |t| {
        raised_cosine(t, cfg)
    })
}

/// Dense counterpart of [`modulate_derivative_onto_grid`].
pub fn modulate_derivative_dense_onto_grid(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
    k_start: i64,
    len: usize,
) -> Vec<Complex64> {
    synth_on_grid(symbols, cfg, delay, k_start, len, None, |t| {
        raised_cosine_derivative(t, cfg)
    })
}

fn default_window(symbols: &[Complex64], cfg: &PulseConfig, delay: f64) -> (i64, usize) {
    let ts = cfg.sample_period();
    let lead = cfg.span as f64 * cfg.symbol_period;
    let k_start = ((delay - lead) / ts).floor() as i64;
    let len = (symbols.len() + 2 * cfg.span as usize) * cfg.oversampling as usize + 1;
    (k_start, len)
}

/// Synthesizes the received burst `sum_n x_n q~(i T_s - n T_c - delay)` on a
/// grid-aligned window that captures all significant pulse energy.
///
/// Fails if the truncated pulse span leaves more than 1e-3 of the total
/// energy at the window edges.
pub fn modulate(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
) -> Result<Waveform, SignalError> {
    if symbols.is_empty() {
        return Err(SignalError::EmptySymbols);
    }
    let (k_start, len) = default_window(symbols, cfg, delay);
    let samples = modulate_onto_grid(symbols, cfg, delay, k_start, len);

    let uf = cfg.oversampling as usize;
    let total: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
    if total > 0.0 {
        let edge: f64 = samples[..uf]
            .iter()
            .chain(&samples[len - uf..])
            .map(|z| z.norm_sqr())
            .sum();
        if edge > 1e-3 * total {
            return Err(SignalError::WindowTooShort(edge / total));
        }
    }
    let ts = cfg.sample_period();
    Ok(Waveform::new(samples, ts, k_start as f64 * ts))
}

/// Derivative counterpart of [`modulate`], used for Fisher-information terms.
pub fn modulate_derivative(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay: f64,
) -> Result<Waveform, SignalError> {
    if symbols.is_empty() {
        return Err(SignalError::EmptySymbols);
    }
    let (k_start, len) = default_window(symbols, cfg, delay);
    let samples = modulate_derivative_onto_grid(symbols, cfg, delay, k_start, len);
    let ts = cfg.sample_period();
    Ok(Waveform::new(samples, ts, k_start as f64 * ts))
}

fn conv_complex_real(sig: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let out_len = sig.len() + taps.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (i, s) in sig.iter().enumerate() {
        if s.norm_sqr() == 0.0 {
            continue;
        }
        for (k, t) in taps.iter().enumerate() {
            out[i + k] += s * t;
        }
    }
    out
}

/// Discrete-convolution synthesis path: upsampled impulses through the SRRC
/// filter twice. Only integer-sample delays are representable; used to
/// cross-validate the analytic path.
pub fn modulate_discrete(
    symbols: &[Complex64],
    cfg: &PulseConfig,
    delay_samples: i64,
) -> Result<Waveform, SignalError> {
    if symbols.is_empty() {
        return Err(SignalError::EmptySymbols);
    }
    let uf = cfg.oversampling as usize;
    let ts = cfg.sample_period();
    let taps: Vec<f64> = srrc_pulse(cfg).samples.iter().map(|z| z.re).collect();

    let mut impulses = vec![Complex64::new(0.0, 0.0); (symbols.len() - 1) * uf + 1];
    for (n, x) in symbols.iter().enumerate() {
        impulses[n * uf] = *x;
    }
    let shaped = conv_complex_real(&impulses, &taps);
    let cascade = conv_complex_real(&shaped, &taps);

    let t0 = delay_samples as f64 * ts - 2.0 * cfg.span as f64 * cfg.symbol_period;
    Ok(Waveform::new(cascade, ts, t0))
}

/// Adds circularly symmetric complex Gaussian noise of the given variance
/// per sample. `variance = 0` returns the input unchanged.
pub fn add_awgn<R: Rng>(w: &Waveform, variance: f64, rng: &mut R) -> Waveform {
    assert!(variance >= 0.0, "noise variance must be nonnegative");
    if variance == 0.0 {
        return w.clone();
    }
    let samples = w
        .samples
        .iter()
        .map(|s| {
            // Polar Box-Muller: Rayleigh amplitude, uniform phase.
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let amp = (-variance * u1.ln()).sqrt();
            s + Complex64::from_polar(amp, 2.0 * PI * u2)
        })
        .collect();
    Waveform::new(samples, w.sample_period, w.t0)
}

// Raised-cosine power spectrum of the unit-energy SRRC pulse (|Q(f)|^2),
// unnormalized.
fn rc_spectrum(f: f64, cfg: &PulseConfig) -> f64 {
    let tc = cfg.symbol_period;
    let beta = cfg.roll_off;
    let f = f.abs();
    let f1 = (1.0 - beta) / (2.0 * tc);
    let f2 = (1.0 + beta) / (2.0 * tc);
    if f <= f1 {
        tc
    } else if f < f2 {
        let arg = PI * tc / (2.0 * beta) * (f - f1);
        tc * arg.cos().powi(2)
    } else {
        0.0
    }
}

/// Root-mean-square bandwidth `B_2` of the SRRC pulse in hertz:
/// `B_2^2 = int f^2 |Q(f)|^2 df / int |Q(f)|^2 df`, by Simpson quadrature
/// over the raised-cosine spectrum.
pub fn rms_bandwidth(cfg: &PulseConfig) -> f64 {
    let f_max = (1.0 + cfg.roll_off) / (2.0 * cfg.symbol_period);
    let n = 1 << 15; // intervals, even
    let h = f_max / n as f64;
    let mut m0 = 0.0;
    let mut m2 = 0.0;
    for k in 0..=n {
        let f = k as f64 * h;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let s = rc_spectrum(f, cfg);
        m0 += w * s;
        m2 += w * f * f * s;
    }
    (m2 / m0).sqrt()
}
