//! Command-line front end: single trials, Monte Carlo SNR sweeps, and CRLB
//! tables, driven by flat key-value config files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lhbs_core::config::{ConfigError, SimConfig};
use lhbs_core::crlb;
use lhbs_core::geometry::derive_polar;
use lhbs_core::harness::{run_sweep, SweepResult, SweepSpec};
use lhbs_core::protocol::{ProtocolConfig, TrialContext};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "lhbs", version, about = "HRIS-assisted localization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded protocol round and report truth vs estimates.
    Trial {
        #[command(flatten)]
        common: CommonArgs,
        /// Append a JSON-lines record to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo RMSE-vs-SNR sweep and write a CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV path.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Ranging figure preset: sweeps both pilot lengths (100, 150).
        #[arg(long, conflicts_with_all = ["paper_fig4", "paper_fig5"])]
        paper_fig3: bool,
        /// Angle figure preset: sweeps both pilot lengths (100, 150).
        #[arg(long, conflicts_with_all = ["paper_fig3", "paper_fig5"])]
        paper_fig4: bool,
        /// Position figure preset: sweeps both pilot lengths (100, 150).
        #[arg(long, conflicts_with_all = ["paper_fig3", "paper_fig4"])]
        paper_fig5: bool,
        /// Also write a gnuplot script next to the CSV.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Print the square-root CRLB table over the SNR grid (no Monte Carlo).
    Crlb {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero the off-diagonal Fisher coefficient.
        #[arg(long)]
        zero_alpha: bool,
    },
}

#[derive(Serialize)]
struct TrialRecord {
    seed: u64,
    snr_db: f64,
    epsilon_rad: f64,
    phi_hat_hris_rad: f64,
    phi_demod_rad: f64,
    r_hat_m: f64,
    p_hat_m: [f64; 2],
    true_phi_rad: f64,
    true_r_m: f64,
    true_p_m: [f64; 2],
    pos_error_m: f64,
    t_rx1_s: f64,
    t_rx2_s: f64,
    failed: Option<String>,
}

fn load_config(common: &CommonArgs) -> Result<SimConfig, (u8, String)> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::from_file(path).map_err(|e| match e {
            ConfigError::Io { .. } => (EXIT_IO, e.to_string()),
            _ => (EXIT_VALIDATION, e.to_string()),
        })?,
        None => SimConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()
        .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    Ok(cfg)
}

fn manifest_comments(cfg: &SimConfig) -> Vec<String> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    vec![
        format!("lhbs {} run manifest", env!("CARGO_PKG_VERSION")),
        format!("created_unix = {stamp}"),
        format!("master_seed = {}", cfg.master_seed),
        "replay: lhbs sweep --config <this file>".to_string(),
    ]
}

fn write_file(path: &Path, contents: &str) -> Result<(), (u8, String)> {
    std::fs::write(path, contents)
        .map_err(|e| (EXIT_IO, format!("could not write {}: {e}", path.display())))
}

fn cmd_trial(common: &CommonArgs, out: Option<&Path>) -> Result<(), (u8, String)> {
    let cfg = load_config(common)?;
    let ctx = TrialContext::build(&cfg.scenario, &cfg.protocol)
        .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    let polar = derive_polar(&cfg.scenario).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    let seed = cfg.master_seed;
    let outcome = ctx.run(seed);

    println!("seed            : {seed}");
    println!("snr             : {} dB", cfg.protocol.snr_db);
    println!(
        "truth           : phi = {:+.9} rad, r = {:.6} m, p = ({:.6}, {:.6}) m",
        polar.phi_hu, polar.r_hu, cfg.scenario.ue_pos.x, cfg.scenario.ue_pos.y
    );
    let record = match &outcome {
        Ok(t) => {
            let pos_err = t.p_hat.distance_to(&cfg.scenario.ue_pos);
            println!(
                "phase 1         : phi_hat = {:+.9} rad (err {:+.3e})",
                t.phi_hat_hris,
                t.phi_hat_hris - polar.phi_hu
            );
            println!(
                "phase 3 angle   : phi_demod = {:+.9} rad (err {:+.3e})",
                t.phi_demod,
                t.phi_demod - polar.phi_hu
            );
            println!(
                "phase 3 range   : r_hat = {:.6} m (err {:+.3e}), t_rx = {:.9e} / {:.9e} s",
                t.r_hat,
                t.r_hat - polar.r_hu,
                t.t_rx1,
                t.t_rx2
            );
            println!(
                "position        : p_hat = ({:.6}, {:.6}) m, error = {:.6e} m",
                t.p_hat.x, t.p_hat.y, pos_err
            );
            TrialRecord {
                seed,
                snr_db: cfg.protocol.snr_db,
                epsilon_rad: t.epsilon,
                phi_hat_hris_rad: t.phi_hat_hris,
                phi_demod_rad: t.phi_demod,
                r_hat_m: t.r_hat,
                p_hat_m: [t.p_hat.x, t.p_hat.y],
                true_phi_rad: polar.phi_hu,
                true_r_m: polar.r_hu,
                true_p_m: [cfg.scenario.ue_pos.x, cfg.scenario.ue_pos.y],
                pos_error_m: pos_err,
                t_rx1_s: t.t_rx1,
                t_rx2_s: t.t_rx2,
                failed: None,
            }
        }
        Err(failure) => {
            println!("trial flagged   : {failure}");
            TrialRecord {
                seed,
                snr_db: cfg.protocol.snr_db,
                epsilon_rad: f64::NAN,
                phi_hat_hris_rad: f64::NAN,
                phi_demod_rad: f64::NAN,
                r_hat_m: f64::NAN,
                p_hat_m: [f64::NAN, f64::NAN],
                true_phi_rad: polar.phi_hu,
                true_r_m: polar.r_hu,
                true_p_m: [cfg.scenario.ue_pos.x, cfg.scenario.ue_pos.y],
                pos_error_m: f64::NAN,
                t_rx1_s: f64::NAN,
                t_rx2_s: f64::NAN,
                failed: Some(failure.to_string()),
            }
        }
    };

    if let Some(path) = out {
        let mut line = serde_json::to_string(&record)
            .map_err(|e| (EXIT_IO, format!("serialization failed: {e}")))?;
        line.push('\n');
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| (EXIT_IO, format!("could not open {}: {e}", path.display())))?;
        f.write_all(line.as_bytes())
            .map_err(|e| (EXIT_IO, format!("could not write {}: {e}", path.display())))?;
        write_file(
            &path.with_extension("manifest.cfg"),
            &cfg.to_manifest(&manifest_comments(&cfg)),
        )?;
    }
    Ok(())
}

fn sweep_once(cfg: &SimConfig, protocol: ProtocolConfig) -> Result<SweepResult, (u8, String)> {
    let spec = SweepSpec {
        snr_grid_db: cfg.sweep.grid(),
        trials_per_point: cfg.sweep.trials_per_point,
        cfg: protocol,
        scenario: cfg.scenario,
        master_seed: cfg.master_seed,
    };
    run_sweep(&spec).map_err(|e| (EXIT_VALIDATION, e.to_string()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn plot_script_text(fig: u8, files: &[(usize, PathBuf)]) -> String {
    let (ycols, ylabel) = match fig {
        4 => ("3:6", "angle RMSE and sqrt CRLB [rad]"),
        5 => ("4:7", "position RMSE and sqrt CRLB [m]"),
        _ => ("2:5", "range RMSE and sqrt CRLB [m]"),
    };
    let (est_col, crlb_col) = ycols.split_once(':').unwrap();
    let mut plots = Vec::new();
    for (n, path) in files {
        let f = path.display();
        plots.push(format!(
            "'{f}' using 1:{est_col} with linespoints title 'RMSE N={n}'"
        ));
        plots.push(format!(
            "'{f}' using 1:{crlb_col} with lines dashtype 2 title 'sqrt CRLB N={n}'"
        ));
    }
    format!(
        "set datafile separator ','\n\
         set key top right\n\
         set logscale y\n\
         set xlabel 'SNR [dB]'\n\
         set ylabel '{ylabel}'\n\
         plot {}\n",
        plots.join(", \\\n     ")
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    common: &CommonArgs,
    out: &Path,
    fig3: bool,
    fig4: bool,
    fig5: bool,
    plot_script: Option<&Path>,
) -> Result<(), (u8, String)> {
    let cfg = load_config(common)?;
    let preset = fig3 || fig4 || fig5;

    let mut outputs: Vec<(usize, PathBuf)> = Vec::new();
    if preset {
        for n in [100usize, 150] {
            let protocol = ProtocolConfig {
                seq_len: n,
                ..cfg.protocol
            };
            let result = sweep_once(&cfg, protocol)?;
            let path = with_suffix(out, &format!("_n{n}"));
            write_file(&path, &result.to_csv())?;
            let mut mcfg = cfg.clone();
            mcfg.protocol.seq_len = n;
            write_file(
                &path.with_extension("manifest.cfg"),
                &mcfg.to_manifest(&manifest_comments(&mcfg)),
            )?;
            println!("wrote {}", path.display());
            outputs.push((n, path));
        }
    } else {
        let result = sweep_once(&cfg, cfg.protocol)?;
        write_file(out, &result.to_csv())?;
        write_file(
            &out.with_extension("manifest.cfg"),
            &cfg.to_manifest(&manifest_comments(&cfg)),
        )?;
        println!("wrote {}", out.display());
        outputs.push((cfg.protocol.seq_len, out.to_path_buf()));
    }

    if let Some(script) = plot_script {
        let fig = if fig4 {
            4
        } else if fig5 {
            5
        } else {
            3
        };
        write_file(script, &plot_script_text(fig, &outputs))?;
        println!("wrote {}", script.display());
    }
    Ok(())
}

fn cmd_crlb(common: &CommonArgs, out: Option<&Path>, zero_alpha: bool) -> Result<(), (u8, String)> {
    let cfg = load_config(common)?;
    let polar = derive_polar(&cfg.scenario).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    let jac = lhbs_core::geometry::position_jacobian(polar.phi_hu, polar.r_hu);

    let mut csv =
        String::from("snr_db,sqrt_crlb_r,sqrt_crlb_phi,sqrt_crlb_pos,alpha\n");
    println!("snr_db  sqrt_crlb_r[m]  sqrt_crlb_phi[rad]  sqrt_crlb_pos[m]");
    for snr_db in cfg.sweep.grid() {
        match crlb::report(&cfg.scenario, &cfg.protocol, snr_db) {
            Ok(mut rep) => {
                if zero_alpha {
                    rep.alpha = 0.0;
                    match crlb::crlb_position(rep.crlb_phi, rep.crlb_r, 0.0, &jac) {
                        Ok(pos) => rep.crlb_pos = pos,
                        Err(e) => {
                            println!("{snr_db:>6.2}  bound unavailable: {e}");
                            continue;
                        }
                    }
                }
                println!(
                    "{snr_db:>6.2}  {:<15.6e} {:<19.6e} {:<.6e}",
                    rep.crlb_r.sqrt(),
                    rep.crlb_phi.sqrt(),
                    rep.crlb_pos.sqrt()
                );
                csv.push_str(&format!(
                    "{:.2},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                    snr_db,
                    rep.crlb_r.sqrt(),
                    rep.crlb_phi.sqrt(),
                    rep.crlb_pos.sqrt(),
                    rep.alpha
                ));
            }
            Err(e) => {
                // One bad point must not take down the rest of the table.
                println!("{snr_db:>6.2}  bound unavailable: {e}");
            }
        }
    }
    if let Some(path) = out {
        write_file(path, &csv)?;
        write_file(
            &path.with_extension("manifest.cfg"),
            &cfg.to_manifest(&manifest_comments(&cfg)),
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(workers) = std::env::var("LHBS_WORKERS") {
        if let Ok(n) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Trial { common, out } => cmd_trial(common, out.as_deref()),
        Command::Sweep {
            common,
            out,
            paper_fig3,
            paper_fig4,
            paper_fig5,
            plot_script,
        } => cmd_sweep(
            common,
            out,
            *paper_fig3,
            *paper_fig4,
            *paper_fig5,
            plot_script.as_deref(),
        ),
        Command::Crlb {
            common,
            out,
            zero_alpha,
        } => cmd_crlb(common, out.as_deref(), *zero_alpha),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
