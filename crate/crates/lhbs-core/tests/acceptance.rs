//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).
//!
//! The Monte Carlo criteria share two 500-trial sweeps (pilot lengths 100
//! and 150) over the default -10..30 dB grid with sub-sample interpolation
//! off, which reproduces the saturation behavior of the ranging estimator.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lhbs_core::channel::{downlink_gain, hris_profile_tx1, hris_profile_tx2, steering_vector};
use lhbs_core::config::{SimConfig, SweepSettings};
use lhbs_core::crlb::fim_alpha;
use lhbs_core::geometry::Scenario;
use lhbs_core::harness::{run_sweep, SweepResult, SweepSpec};
use lhbs_core::protocol::{run_trial, EpsilonPolicy, ProtocolConfig};
use lhbs_core::signals::{
    cazac, modulate_dense_onto_grid, modulate_derivative_dense_onto_grid, raised_cosine,
    raised_cosine_derivative, rms_bandwidth, PulseConfig,
};
use lhbs_core::SPEED_OF_LIGHT;

const TRIALS: usize = 500;
const MASTER_SEED: u64 = 1;

fn scenario() -> Scenario {
    SimConfig::default().scenario
}

fn sweep_fixture(seq_len: usize, cell: &OnceLock<SweepResult>) -> &SweepResult {
    cell.get_or_init(|| {
        let spec = SweepSpec {
            snr_grid_db: SweepSettings::default().grid(),
            trials_per_point: TRIALS,
            cfg: ProtocolConfig {
                seq_len,
                ..ProtocolConfig::default()
            },
            scenario: scenario(),
            master_seed: MASTER_SEED,
        };
        run_sweep(&spec).expect("sweep must run")
    })
}

fn sweep_100() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    sweep_fixture(100, &CELL)
}

fn sweep_150() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    sweep_fixture(150, &CELL)
}

// 95% confidence half-width of an RMSE estimate, relative.
fn rmse_rel_ci(n: usize) -> f64 {
    1.96 / (2.0 * n.max(1) as f64).sqrt()
}

#[test]
fn acceptance_01_noiseless_end_to_end() {
    let cfg = ProtocolConfig {
        snr_db: f64::INFINITY,
        interp: true,
        ..ProtocolConfig::default()
    };
    let started = Instant::now();
    let result = run_trial(&scenario(), &cfg, 42).unwrap().unwrap();
    let elapsed = started.elapsed();

    let pos_err = result.p_hat.distance_to(&scenario().ue_pos);
    let phi_err = (result.phi_demod - result.truth.phi_hu).abs();
    assert!(
        pos_err < 0.01,
        "criterion 1: FAIL - noiseless position error {pos_err:.3e} m >= 1 cm"
    );
    assert!(
        phi_err < 1e-6,
        "criterion 1: FAIL - noiseless angle error {phi_err:.3e} rad >= 1e-6"
    );
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "criterion 1: FAIL - trial took {elapsed:?}"
    );
    println!(
        "criterion 1 (noiseless end-to-end): PASS - position error {pos_err:.2e} m, \
         angle error {phi_err:.2e} rad, {elapsed:?}"
    );
}

#[test]
fn acceptance_02_crlb_ordering() {
    let started = Instant::now();
    let sweep = sweep_100();
    let elapsed = started.elapsed();

    println!("criterion 2 sweep ({TRIALS} trials/point, interpolation off, {elapsed:?}):");
    println!("  snr_db  rmse_r    crlb_r    ratio   rmse_phi  crlb_phi  ratio   fail");
    for p in &sweep.points {
        println!(
            "  {:>6.1}  {:.3e} {:.3e} {:>6.2}  {:.3e} {:.3e} {:>6.2}  {}",
            p.snr_db,
            p.rmse_range,
            p.sqrt_crlb_range,
            p.rmse_range / p.sqrt_crlb_range,
            p.rmse_aoa,
            p.sqrt_crlb_aoa,
            p.rmse_aoa / p.sqrt_crlb_aoa,
            p.failures
        );
    }

    let mut failures: Vec<String> = Vec::new();

    for p in &sweep.points {
        let ok = p.trials - p.failures;
        let slack = 1.0 - rmse_rel_ci(ok);
        if !(p.rmse_aoa >= p.sqrt_crlb_aoa * slack) {
            failures.push(format!(
                "angle RMSE below bound at {} dB: {:.3e} < {:.3e}",
                p.snr_db, p.rmse_aoa, p.sqrt_crlb_aoa
            ));
        }
        if !(p.rmse_range >= p.sqrt_crlb_range * slack) {
            failures.push(format!(
                "range RMSE below bound at {} dB: {:.3e} < {:.3e} (ratio {:.2})",
                p.snr_db,
                p.rmse_range,
                p.sqrt_crlb_range,
                p.rmse_range / p.sqrt_crlb_range
            ));
        }
    }

    // Top three points before the quantization floor: the highest SNR grid
    // points whose bound still exceeds the measured saturation level.
    let floor = sweep.points.last().unwrap().rmse_range;
    let pre_floor: Vec<_> = sweep
        .points
        .iter()
        .filter(|p| p.sqrt_crlb_range >= floor)
        .collect();
    for p in pre_floor.iter().rev().take(3) {
        let ratio = p.rmse_range / p.sqrt_crlb_range;
        if !(0.5..=2.0).contains(&ratio) {
            failures.push(format!(
                "pre-floor point {} dB not within a factor of 2 of the bound: ratio {:.2}",
                p.snr_db, ratio
            ));
        }
    }

    if elapsed.as_secs_f64() >= 600.0 {
        failures.push(format!("sweep runtime {elapsed:?} exceeds 10 min"));
    }

    assert!(
        failures.is_empty(),
        "criterion 2: FAIL -\n  {}",
        failures.join("\n  ")
    );
    println!("criterion 2 (CRLB ordering): PASS");
}

#[test]
fn acceptance_03_magnitude_anchors() {
    let sweep = sweep_100();
    let top3 = &sweep.points[sweep.points.len() - 3..];
    for p in top3 {
        assert!(
            p.rmse_range > 0.05 && p.rmse_range < 1.0,
            "criterion 3: FAIL - range RMSE {:.3} m at {} dB outside the \
             tens-of-centimeters regime",
            p.rmse_range,
            p.snr_db
        );
        assert!(
            p.rmse_pos > 0.1 && p.rmse_pos < 10.0,
            "criterion 3: FAIL - position RMSE {:.3} m at {} dB outside the meter regime",
            p.rmse_pos,
            p.snr_db
        );
    }
    println!(
        "criterion 3 (magnitude anchors): PASS - at 30 dB range RMSE {:.3} m, \
         position RMSE {:.3} m",
        top3[2].rmse_range, top3[2].rmse_pos
    );
}

#[test]
fn acceptance_04_sequence_length_ordering() {
    let s100 = sweep_100();
    let s150 = sweep_150();
    for (a, b) in s100.points.iter().zip(&s150.points) {
        assert_eq!(a.snr_db, b.snr_db);
        if a.rmse_range.is_nan() || b.rmse_range.is_nan() {
            continue; // all-failure points carry no RMSE to compare
        }
        let ci = rmse_rel_ci(a.trials - a.failures) + rmse_rel_ci(b.trials - b.failures);
        assert!(
            b.rmse_range <= a.rmse_range * (1.0 + 1.96 * 0.0 + ci),
            "criterion 4: FAIL - N=150 range RMSE {:.3e} above N=100 {:.3e} at {} dB",
            b.rmse_range,
            a.rmse_range,
            a.snr_db
        );
    }
    println!("criterion 4 (sequence-length ordering): PASS - N=150 at-or-below N=100");
}

#[test]
fn acceptance_05_quantization_floor() {
    let s100 = sweep_100();
    let n = s100.points.len();
    let top = &s100.points[n - 1];
    let prev = &s100.points[n - 2];

    // Saturation: the bound keeps dropping but the RMSE no longer follows.
    assert!(
        top.rmse_range / top.sqrt_crlb_range > 3.0,
        "criterion 5: FAIL - no saturation: ratio {:.2} at {} dB",
        top.rmse_range / top.sqrt_crlb_range,
        top.snr_db
    );
    assert!(
        (top.rmse_range - prev.rmse_range).abs() / top.rmse_range < 0.25,
        "criterion 5: FAIL - RMSE still moving at the top of the grid: {:.3e} vs {:.3e}",
        prev.rmse_range,
        top.rmse_range
    );
    let floor_10 = top.rmse_range;

    // Doubling the oversampling factor lowers the floor.
    let spec = SweepSpec {
        snr_grid_db: vec![25.0, 27.5, 30.0],
        trials_per_point: TRIALS,
        cfg: ProtocolConfig {
            oversampling: 20,
            ..ProtocolConfig::default()
        },
        scenario: scenario(),
        master_seed: MASTER_SEED,
    };
    let s20 = run_sweep(&spec).unwrap();
    let floor_20 = s20.points.last().unwrap().rmse_range;
    assert!(
        floor_20 < floor_10,
        "criterion 5: FAIL - floor(u_f=20) {floor_20:.3e} not below floor(u_f=10) {floor_10:.3e}"
    );
    println!(
        "criterion 5 (quantization floor): PASS - floor {floor_10:.3} m at u_f=10, \
         {floor_20:.3} m at u_f=20"
    );
}

#[test]
fn acceptance_06_fisher_derivative_checks() {
    // Cross-term of the Fisher matrix against a five-point finite
    // difference of the mean burst over the range, on 20 random scenarios.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = ProtocolConfig::default();
    let pulse = cfg.pulse();
    let pilot = cazac(cfg.seq_len).unwrap();
    let ts = pulse.sample_period();
    let sigma2_u = 1e-18;
    let mut worst_alpha: f64 = 0.0;
    for _ in 0..20 {
        let r_hu: f64 = rng.random_range(30.0..300.0);
        let t_arr = cfg.turnaround + 2.0 * r_hu / SPEED_OF_LIGHT;
        let lead = cfg.span as f64 * pulse.symbol_period;
        let k0 = ((t_arr - lead) / ts).floor() as i64;
        let len = (cfg.seq_len + 2 * cfg.span as usize) * cfg.oversampling as usize + 1;

        let s = modulate_dense_onto_grid(&pilot, &pulse, t_arr, k0, len);
        let s_dot: Vec<Complex64> =
            modulate_derivative_dense_onto_grid(&pilot, &pulse, t_arr, k0, len)
                .into_iter()
                .map(|v| v * (-2.0 / SPEED_OF_LIGHT))
                .collect();
        let alpha = fim_alpha(&s, &s_dot, sigma2_u).unwrap();

        let dr = 0.05;
        let dt = 2.0 * dr / SPEED_OF_LIGHT;
        let sp = modulate_dense_onto_grid(&pilot, &pulse, t_arr + dt, k0, len);
        let sm = modulate_dense_onto_grid(&pilot, &pulse, t_arr - dt, k0, len);
        let sp2 = modulate_dense_onto_grid(&pilot, &pulse, t_arr + 2.0 * dt, k0, len);
        let sm2 = modulate_dense_onto_grid(&pilot, &pulse, t_arr - 2.0 * dt, k0, len);
        let fd: Vec<Complex64> = (0..len)
            .map(|i| (-sp2[i] + 8.0 * sp[i] - 8.0 * sm[i] + sm2[i]) / (12.0 * dr))
            .collect();
        let alpha_fd = fim_alpha(&s, &fd, sigma2_u).unwrap();
        let rel = ((alpha - alpha_fd) / alpha_fd).abs();
        worst_alpha = worst_alpha.max(rel);
        assert!(
            rel < 1e-3,
            "criterion 6: FAIL - alpha {alpha:.6e} vs finite difference {alpha_fd:.6e} \
             (rel {rel:.2e}) at r = {r_hu:.2} m"
        );
    }

    // Raised-cosine derivative against central differences, everywhere
    // including the singular neighborhoods.
    let pc = PulseConfig {
        symbol_period: 50e-9,
        roll_off: 0.8,
        oversampling: 10,
        span: 16,
    };
    let h = 1e-4 * pc.symbol_period;
    let ustar = 1.0 / (2.0 * pc.roll_off);
    let mut points: Vec<f64> = (-1800..=1800).map(|k| k as f64 * 0.01).collect();
    for &eps in &[1e-3, -1e-3, 5e-4, -5e-4, 1e-4, -1e-4] {
        points.push(ustar + eps);
        points.push(-ustar + eps);
        points.push(eps);
    }
    let mut worst_rc: f64 = 0.0;
    for &u in &points {
        let t = u * pc.symbol_period;
        let fd = (raised_cosine(t + h, &pc) - raised_cosine(t - h, &pc)) / (2.0 * h);
        let an = raised_cosine_derivative(t, &pc);
        let rel = (an - fd).abs() / fd.abs().max(1e-3 / pc.symbol_period);
        worst_rc = worst_rc.max(rel);
        assert!(
            rel < 1e-4,
            "criterion 6: FAIL - pulse derivative off at u={u}: {an:.6e} vs {fd:.6e}"
        );
    }
    println!(
        "criterion 6 (Fisher/derivative oracles): PASS - worst alpha rel {worst_alpha:.1e}, \
         worst pulse-derivative rel {worst_rc:.1e}"
    );
}

#[test]
fn acceptance_07_analytic_identities() {
    // Constant amplitude and ideal circular autocorrelation of the pilot
    // (the even-length sequence is antiperiodic, so its circular extension
    // carries a sign flip on wraparound).
    let n = 100;
    let x = cazac(n).unwrap();
    for v in &x {
        assert!(
            (v.norm() - 1.0).abs() < 1e-12,
            "criterion 7: FAIL - pilot amplitude"
        );
    }
    let ext = |k: usize| if k < n { x[k] } else { -x[k - n] };
    for lag in 1..n {
        let acc: Complex64 = (0..n).map(|k| x[k] * ext(k + lag).conj()).sum();
        assert!(
            acc.norm() < 1e-10 * n as f64,
            "criterion 7: FAIL - pilot autocorrelation at lag {lag}: {:.2e}",
            acc.norm()
        );
    }

    // Steering vector norm.
    let cfg = ProtocolConfig::default();
    let hris = cfg.hris_array();
    for &theta in &[0.0, 0.3, -0.9, 1.4] {
        let a = steering_vector(&hris, theta);
        let norm_sq: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        assert!(
            (norm_sq - hris.num_elements as f64).abs() < 1e-9,
            "criterion 7: FAIL - steering norm at {theta}"
        );
    }

    // Full coherent cascade gain through both reflection profiles.
    let bs = cfg.bs_array();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let phi_hu: f64 = rng.random_range(-1.2..1.2);
        let theta_bh: f64 = rng.random_range(-1.5..1.5);
        let phi_bh: f64 = rng.random_range(-1.5..1.5);
        let xi_bh = Complex64::from_polar(1e-5, rng.random_range(0.0..std::f64::consts::TAU));
        let xi_uh = Complex64::from_polar(3e-6, rng.random_range(0.0..std::f64::consts::TAU));
        let r = hris.num_elements as f64;

        let g2 = downlink_gain(
            &bs,
            &hris,
            xi_bh,
            xi_uh,
            phi_hu,
            theta_bh,
            phi_bh,
            &hris_profile_tx2(&hris, phi_hu, theta_bh),
        );
        let want2 = xi_bh * xi_uh * r;
        assert!(
            (g2 - want2).norm() / want2.norm() < 1e-9,
            "criterion 7: FAIL - steering-only cascade gain"
        );

        let g1 = downlink_gain(
            &bs,
            &hris,
            xi_bh,
            xi_uh,
            phi_hu,
            theta_bh,
            phi_bh,
            &hris_profile_tx1(&hris, phi_hu, theta_bh),
        );
        let want1 = want2 * Complex64::from_polar(1.0, phi_hu);
        assert!(
            (g1 - want1).norm() / want1.norm() < 1e-9,
            "criterion 7: FAIL - message-bearing cascade gain"
        );
    }

    // RMS bandwidth against the closed-form spectral moment.
    for &beta in &[0.2, 0.5, 0.8, 1.0] {
        let pc = PulseConfig {
            symbol_period: 50e-9,
            roll_off: beta,
            oversampling: 10,
            span: 16,
        };
        let b2 = rms_bandwidth(&pc);
        let closed = ((1.0 / 12.0
            + beta * beta * (0.25 - 2.0 / (std::f64::consts::PI * std::f64::consts::PI)))
            / (pc.symbol_period * pc.symbol_period))
            .sqrt();
        assert!(
            ((b2 - closed) / closed).abs() < 1e-6,
            "criterion 7: FAIL - RMS bandwidth at beta {beta}: {b2} vs {closed}"
        );
    }
    println!("criterion 7 (analytic identities): PASS");
}

#[test]
fn acceptance_08_clock_offset_immunity() {
    let mk = |eps: f64| ProtocolConfig {
        snr_db: f64::INFINITY,
        epsilon: EpsilonPolicy::Fixed(eps),
        ..ProtocolConfig::default()
    };
    let base = run_trial(&scenario(), &mk(0.0), 5).unwrap().unwrap();
    let mut failures = Vec::new();
    for eps in [std::f64::consts::PI / 3.0, 1.7 * std::f64::consts::PI] {
        let t = run_trial(&scenario(), &mk(eps), 5).unwrap().unwrap();
        if t.r_hat.to_bits() != base.r_hat.to_bits() {
            failures.push(format!(
                "range not bitwise-invariant at eps {eps}: {} vs {}",
                t.r_hat, base.r_hat
            ));
        }
        if t.p_hat.x.to_bits() != base.p_hat.x.to_bits()
            || t.p_hat.y.to_bits() != base.p_hat.y.to_bits()
        {
            failures.push(format!(
                "position not bitwise-invariant at eps {eps}: ({:.17e}, {:.17e}) vs \
                 ({:.17e}, {:.17e}); offset enters the demodulated angle at the last \
                 rounding bit (|dphi| = {:.2e} rad)",
                t.p_hat.x,
                t.p_hat.y,
                base.p_hat.x,
                base.p_hat.y,
                (t.phi_demod - base.phi_demod).abs()
            ));
        }
        // The physical claim itself: the offset does not leak into the
        // estimates beyond numerical rounding.
        assert!(
            (t.phi_demod - base.phi_demod).abs() < 1e-12
                && t.p_hat.distance_to(&base.p_hat) < 1e-10,
            "criterion 8: FAIL - clock offset materially changed the estimates"
        );
    }
    assert!(
        failures.is_empty(),
        "criterion 8: FAIL -\n  {}",
        failures.join("\n  ")
    );
    println!("criterion 8 (clock-offset immunity): PASS - range and position bitwise-invariant");
}

#[test]
fn acceptance_09_deterministic_sweep_output() {
    let bin = env!("CARGO_BIN_EXE_lhbs");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("det.cfg");
    std::fs::write(
        &cfg_path,
        "trials_per_point = 25\nsnr_start_db = 0\nsnr_stop_db = 10\nsnr_step_db = 5\nmaster_seed = 99\n",
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args([
                "sweep",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.csv"));
    let b = run(&dir.path().join("b.csv"));
    assert_eq!(
        a, b,
        "criterion 9: FAIL - identical seeds produced different CSV bytes"
    );

    // Replaying the emitted manifest reproduces the bytes too.
    let manifest = dir.path().join("a.manifest.cfg");
    let status = std::process::Command::new(bin)
        .args([
            "sweep",
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            dir.path().join("c.csv").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let c = std::fs::read(dir.path().join("c.csv")).unwrap();
    assert_eq!(
        a, c,
        "criterion 9: FAIL - manifest replay produced different CSV bytes"
    );
    println!("criterion 9 (deterministic sweeps): PASS - byte-identical CSVs across reruns and replay");
}
