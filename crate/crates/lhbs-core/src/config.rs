//! Flat key-value configuration files, fully-resolved run manifests, and
//! validation with field-level messages.
//!
//! The format is line oriented: `key = value`, `#` starts a comment. Keys
//! carry their unit as a suffix. A manifest is just a config file with
//! every default materialized, so replaying one reproduces a run exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Point2, Scenario};
use crate::protocol::{EpsilonPolicy, HrisAoaMode, ProtocolConfig, SynthesisPath};

/// Sweep grid and trial-count settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub trials_per_point: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            snr_start_db: -10.0,
            snr_stop_db: 30.0,
            snr_step_db: 2.5,
            trials_per_point: 500,
        }
    }
}

impl SweepSettings {
    pub fn grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut v = self.snr_start_db;
        let mut k = 0;
        while v <= self.snr_stop_db + 1e-9 {
            out.push(v);
            k += 1;
            v = self.snr_start_db + k as f64 * self.snr_step_db;
        }
        out
    }
}

/// Everything a run needs: scenario, protocol knobs, sweep grid and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub protocol: ProtocolConfig,
    pub sweep: SweepSettings,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::new(
                Point2::new(-60.0, 80.0),
                Point2::new(26.60254037844387, 130.0),
            ),
            protocol: ProtocolConfig::default(),
            sweep: SweepSettings::default(),
            master_seed: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: {message}")]
    BadValue { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    match value {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => value.parse::<f64>().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            message: format!("expected a number, got `{value}`"),
        }),
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse::<usize>().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        message: format!("expected a nonnegative integer, got `{value}`"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            message: format!("expected true/false, got `{value}`"),
        }),
    }
}

impl SimConfig {
    /// Applies one `key = value` assignment.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "hris_x_m" => self.scenario.hris_pos.x = parse_f64(key, value)?,
            "hris_y_m" => self.scenario.hris_pos.y = parse_f64(key, value)?,
            "ue_x_m" => self.scenario.ue_pos.x = parse_f64(key, value)?,
            "ue_y_m" => self.scenario.ue_pos.y = parse_f64(key, value)?,
            "carrier_hz" => self.protocol.carrier_hz = parse_f64(key, value)?,
            "bandwidth_hz" => self.protocol.bandwidth = parse_f64(key, value)?,
            "roll_off" => self.protocol.roll_off = parse_f64(key, value)?,
            "oversampling" => self.protocol.oversampling = parse_usize(key, value)? as u32,
            "seq_len" => self.protocol.seq_len = parse_usize(key, value)?,
            "turnaround_s" => self.protocol.turnaround = parse_f64(key, value)?,
            "epsilon_rad" => {
                self.protocol.epsilon = if value == "random" {
                    EpsilonPolicy::RandomPerTrial
                } else {
                    EpsilonPolicy::Fixed(parse_f64(key, value)?)
                }
            }
            "snr_db" => self.protocol.snr_db = parse_f64(key, value)?,
            "hris_aoa_mode" => {
                self.protocol.hris_aoa_mode = match value {
                    "perfect" => HrisAoaMode::Perfect,
                    "music" => HrisAoaMode::Music,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            message: format!("expected perfect|music, got `{value}`"),
                        })
                    }
                }
            }
            "toa_interp" => self.protocol.interp = parse_bool(key, value)?,
            "pulse_span_symbols" => self.protocol.span = parse_usize(key, value)? as u32,
            "bs_antennas" => self.protocol.bs_antennas = parse_usize(key, value)?,
            "hris_elements" => self.protocol.hris_elements = parse_usize(key, value)?,
            "spacing_wavelengths" => {
                self.protocol.spacing_wavelengths = parse_f64(key, value)?
            }
            "music_grid_deg" => self.protocol.music_grid_step_deg = parse_f64(key, value)?,
            "search_margin_symbols" => {
                self.protocol.search_margin_symbols = parse_usize(key, value)? as u32
            }
            "phase1_noise_scale" => self.protocol.phase1_noise_scale = parse_f64(key, value)?,
            "synthesis" => {
                self.protocol.synthesis = match value {
                    "analytic" => SynthesisPath::Analytic,
                    "discrete" => SynthesisPath::DiscreteConvolution,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            message: format!("expected analytic|discrete, got `{value}`"),
                        })
                    }
                }
            }
            "snr_start_db" => self.sweep.snr_start_db = parse_f64(key, value)?,
            "snr_stop_db" => self.sweep.snr_stop_db = parse_f64(key, value)?,
            "snr_step_db" => self.sweep.snr_step_db = parse_f64(key, value)?,
            "trials_per_point" => self.sweep.trials_per_point = parse_usize(key, value)?,
            "master_seed" => {
                self.master_seed = value.parse::<u64>().map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    message: format!("expected an unsigned integer, got `{value}`"),
                })?
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses a config from text, applying assignments over the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            cfg.apply_kv(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Validates the assembled configuration, naming the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.snr_step_db <= 0.0 {
            return Err(ConfigError::Invalid(
                "snr_step_db: must be positive".to_string(),
            ));
        }
        if self.sweep.snr_stop_db < self.sweep.snr_start_db {
            return Err(ConfigError::Invalid(
                "snr_stop_db: must be at least snr_start_db".to_string(),
            ));
        }
        if self.sweep.trials_per_point == 0 {
            return Err(ConfigError::Invalid(
                "trials_per_point: must be at least 1".to_string(),
            ));
        }
        self.protocol
            .validate(&self.scenario)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Serializes the fully resolved configuration. The output parses back
    /// into an identical `SimConfig`.
    pub fn to_manifest(&self, header_comments: &[String]) -> String {
        let mut out = String::new();
        for c in header_comments {
            let _ = writeln!(out, "# {c}");
        }
        let p = &self.protocol;
        let _ = writeln!(out, "hris_x_m = {:?}", self.scenario.hris_pos.x);
        let _ = writeln!(out, "hris_y_m = {:?}", self.scenario.hris_pos.y);
        let _ = writeln!(out, "ue_x_m = {:?}", self.scenario.ue_pos.x);
        let _ = writeln!(out, "ue_y_m = {:?}", self.scenario.ue_pos.y);
        let _ = writeln!(out, "carrier_hz = {:?}", p.carrier_hz);
        let _ = writeln!(out, "bandwidth_hz = {:?}", p.bandwidth);
        let _ = writeln!(out, "roll_off = {:?}", p.roll_off);
        let _ = writeln!(out, "oversampling = {}", p.oversampling);
        let _ = writeln!(out, "seq_len = {}", p.seq_len);
        let _ = writeln!(out, "turnaround_s = {:?}", p.turnaround);
        match p.epsilon {
            EpsilonPolicy::RandomPerTrial => {
                let _ = writeln!(out, "epsilon_rad = random");
            }
            EpsilonPolicy::Fixed(e) => {
                let _ = writeln!(out, "epsilon_rad = {e:?}");
            }
        }
        let _ = writeln!(out, "snr_db = {:?}", p.snr_db);
        let mode = match p.hris_aoa_mode {
            HrisAoaMode::Perfect => "perfect",
            HrisAoaMode::Music => "music",
        };
        let _ = writeln!(out, "hris_aoa_mode = {mode}");
        let _ = writeln!(out, "toa_interp = {}", p.interp);
        let _ = writeln!(out, "pulse_span_symbols = {}", p.span);
        let _ = writeln!(out, "bs_antennas = {}", p.bs_antennas);
        let _ = writeln!(out, "hris_elements = {}", p.hris_elements);
        let _ = writeln!(out, "spacing_wavelengths = {:?}", p.spacing_wavelengths);
        let _ = writeln!(out, "music_grid_deg = {:?}", p.music_grid_step_deg);
        let _ = writeln!(out, "search_margin_symbols = {}", p.search_margin_symbols);
        let _ = writeln!(out, "phase1_noise_scale = {:?}", p.phase1_noise_scale);
        let synth = match p.synthesis {
            SynthesisPath::Analytic => "analytic",
            SynthesisPath::DiscreteConvolution => "discrete",
        };
        let _ = writeln!(out, "synthesis = {synth}");
        let _ = writeln!(out, "snr_start_db = {:?}", self.sweep.snr_start_db);
        let _ = writeln!(out, "snr_stop_db = {:?}", self.sweep.snr_stop_db);
        let _ = writeln!(out, "snr_step_db = {:?}", self.sweep.snr_step_db);
        let _ = writeln!(out, "trials_per_point = {}", self.sweep.trials_per_point);
        let _ = writeln!(out, "master_seed = {}", self.master_seed);
        out
    }
}
