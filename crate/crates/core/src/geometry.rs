//! Measurement model: source/anchor geometry to (distance, azimuth, elevation) and back.
//!
//! Azimuth is measured in the x-y plane from the +x axis with the two-argument
//! arctangent; elevation is the polar angle from +z, `acos(z / d)`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// One source-anchor observation: range (m), azimuth (rad) and elevation (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasurementTriple {
    pub d: f64,
    /// In `(-pi, pi]`.
    pub phi: f64,
    /// In `[0, pi]`.
    pub theta: f64,
}

impl MeasurementTriple {
    pub const fn new(d: f64, phi: f64, theta: f64) -> Self {
        Self { d, phi, theta }
    }

    /// True when the line of sight is vertical, which leaves the azimuth undefined
    /// (it is reported as 0).
    pub fn is_polar(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }

    /// Unit line-of-sight direction `(sin t cos p, sin t sin p, cos t)`.
    pub fn direction(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(st * cp, st * sp, ct)
    }
}

/// Source minus anchor, with the full and horizontal distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeCoords {
    pub xt: f64,
    pub yt: f64,
    pub zt: f64,
    pub d: f64,
    pub d2: f64,
}

impl RelativeCoords {
    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.xt, self.yt, self.zt)
    }

    /// Rejects geometries where the azimuth or its derivatives are undefined.
    pub fn ensure_regular(&self) -> Result<()> {
        if self.d.is_nan() || self.d <= 0.0 {
            return Err(Error::DegenerateGeometry("source coincides with anchor"));
        }
        if self.d2.is_nan() || self.d2 <= 0.0 {
            return Err(Error::DegenerateGeometry("source directly above or below anchor"));
        }
        Ok(())
    }
}

pub fn relative_coords(source: Vec3, anchor: Vec3) -> RelativeCoords {
    let xt = source.x - anchor.x;
    let yt = source.y - anchor.y;
    let zt = source.z - anchor.z;
    let d2 = xt.hypot(yt);
    let d = (xt * xt + yt * yt + zt * zt).sqrt();
    // Rounding can leave d a hair below d2 when zt is negligible.
    RelativeCoords { xt, yt, zt, d: d.max(d2), d2 }
}

/// Noise-free triple observed from `anchor` looking at `source`.
pub fn true_measurement(source: Vec3, anchor: Vec3) -> Result<MeasurementTriple> {
    source.ensure_finite("source position")?;
    anchor.ensure_finite("anchor position")?;
    measurement_from_relative(&relative_coords(source, anchor))
}

pub fn measurement_from_relative(r: &RelativeCoords) -> Result<MeasurementTriple> {
    if r.d.is_nan() || r.d <= 0.0 {
        return Err(Error::DegenerateGeometry("source coincides with anchor"));
    }
    let phi = if r.d2 == 0.0 { 0.0 } else { wrap_angle(r.yt.atan2(r.xt)) };
    let theta = (r.zt / r.d).clamp(-1.0, 1.0).acos();
    Ok(MeasurementTriple { d: r.d, phi, theta })
}

/// Single-anchor position fix, the exact inverse of [`true_measurement`].
pub fn spherical_fix(anchor: Vec3, m: &MeasurementTriple) -> Vec3 {
    anchor + m.direction() * m.d
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else if r == 0.0 && a.is_sign_negative() {
        0.0
    } else {
        r
    }
}
