//! 2-D scenario geometry: node positions, the polar link parameters derived
//! from them, and the inverse map the UE applies for its final position fix.
//!
//! Angle convention: the angle of a target seen from an array at `a` is
//! `atan2(-(t_y - a_y), t_x - a_x)`, fixed so that the position fix
//! `p = q + [r cos(phi), -r sin(phi)]` inverts it exactly. The BS-side angle
//! `theta_bh` is measured with the opposite rotational orientation (the BS
//! illuminates the reflective face from the mirrored side), which is what
//! makes the reflection profiles in [`crate::channel`] combine coherently.

use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// A point in the 2-D scenario plane, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to another point.
    pub fn distance_to(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Node placement. The BS is pinned to the origin; only the HRIS and UE move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    /// HRIS position `q`, meters.
    pub hris_pos: Point2,
    /// UE position `p`, meters.
    pub ue_pos: Point2,
}

impl Scenario {
    pub fn new(hris_pos: Point2, ue_pos: Point2) -> Self {
        Self { hris_pos, ue_pos }
    }

    /// BS position: the origin, by definition of the coordinate frame.
    pub fn bs_pos(&self) -> Point2 {
        Point2::new(0.0, 0.0)
    }
}

/// Polar link parameters implied by a [`Scenario`]: angles, ranges and times
/// of flight for the two hops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarParams {
    /// Angle of departure from the HRIS toward the UE, radians.
    pub phi_hu: f64,
    /// Angle of arrival at the HRIS from the BS, radians (mirrored
    /// orientation, see module docs).
    pub theta_bh: f64,
    /// Angle of departure from the BS toward the HRIS, radians.
    pub phi_bh: f64,
    /// HRIS-UE range, meters.
    pub r_hu: f64,
    /// BS-HRIS range, meters.
    pub r_bh: f64,
    /// HRIS-UE time of flight, seconds.
    pub tau_hu: f64,
    /// BS-HRIS time of flight, seconds.
    pub tau_bh: f64,
    /// Total downlink path length BS -> HRIS -> UE, meters.
    pub d_tot: f64,
    /// Total downlink time of flight, seconds.
    pub tau: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("positions {0} and {1} coincide; ranges must be strictly positive")]
    CoincidentPositions(&'static str, &'static str),
    #[error("range must be strictly positive, got {0}")]
    NonPositiveRange(f64),
}

const MIN_RANGE: f64 = 1e-9;

/// Derives the polar link parameters from node positions.
pub fn derive_polar(scenario: &Scenario) -> Result<PolarParams, GeometryError> {
    let bs = scenario.bs_pos();
    let q = scenario.hris_pos;
    let p = scenario.ue_pos;

    let r_hu = q.distance_to(&p);
    let r_bh = bs.distance_to(&q);
    if r_hu < MIN_RANGE {
        return Err(GeometryError::CoincidentPositions("hris", "ue"));
    }
    if r_bh < MIN_RANGE {
        return Err(GeometryError::CoincidentPositions("bs", "hris"));
    }

    // UE seen from the HRIS, in the convention inverted by position_from_polar.
    let phi_hu = f64::atan2(-(p.y - q.y), p.x - q.x);
    // BS seen from the HRIS, mirrored orientation (reflective-face side).
    let theta_bh = f64::atan2(bs.y - q.y, bs.x - q.x);
    // HRIS seen from the BS.
    let phi_bh = f64::atan2(-(q.y - bs.y), q.x - bs.x);

    let tau_hu = r_hu / SPEED_OF_LIGHT;
    let tau_bh = r_bh / SPEED_OF_LIGHT;
    let d_tot = r_hu + r_bh;

    Ok(PolarParams {
        phi_hu,
        theta_bh,
        phi_bh,
        r_hu,
        r_bh,
        tau_hu,
        tau_bh,
        d_tot,
        tau: d_tot / SPEED_OF_LIGHT,
    })
}

/// Position fix: maps the HRIS position plus estimated angle/range to the UE
/// position, `p = q + [r cos(phi), -r sin(phi)]`.
pub fn position_from_polar(q: Point2, phi: f64, r: f64) -> Point2 {
    Point2::new(q.x + r * phi.cos(), q.y - r * phi.sin())
}

/// Jacobian of [`position_from_polar`] with respect to `[phi, r]`.
///
/// Column 1 is `d p / d phi`, column 2 is `d p / d r`; row-major 2x2.
pub fn position_jacobian(phi: f64, r: f64) -> [[f64; 2]; 2] {
    [
        [-r * phi.sin(), phi.cos()],
        [-r * phi.cos(), -phi.sin()],
    ]
}
