//! Baseband Monte Carlo simulator of a three-phase UE self-localization
//! protocol assisted by a hybrid reconfigurable intelligent surface (HRIS).
//!
//! The simulated link works in three phases:
//!
//! 1. The single-antenna UE transmits a CAZAC pilot. The HRIS, in full
//!    absorption mode, estimates the angle of arrival with MUSIC.
//! 2. After a pre-agreed turnaround time the BS transmits two pilot bursts
//!    through the fully reflective HRIS. The surface steers the beam toward
//!    the UE and backscatter-modulates the estimated angle onto the first
//!    burst as a common phase.
//! 3. The UE demodulates the angle differentially from the two bursts,
//!    estimates the round-trip time of flight by correlation, and fixes its
//!    2-D position from the known HRIS location.
//!
//! The crate also evaluates the Cramér-Rao lower bounds on the angle, range
//! and position estimates so that Monte Carlo RMSE sweeps can be compared
//! against them. All randomness is caller-seeded; identical seeds reproduce
//! identical results byte for byte.

pub mod channel;
pub mod config;
pub mod crlb;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod protocol;
pub mod signals;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use geometry::{derive_polar, position_from_polar, position_jacobian, Point2, PolarParams, Scenario};
pub use protocol::{run_trial, ProtocolConfig, TrialResult};
