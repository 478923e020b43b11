//! Measurement noise, anchor drift, and the measurement perturbation that drift induces.
//!
//! Drift is the displacement `delta = true anchor - assumed anchor`. To first
//! order it perturbs each observed triple by a term linear in `delta`; the
//! covariance of that term is what the uncertain-anchor Fisher information uses.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, MeasurementTriple, RelativeCoords};
use crate::linalg::{Mat3, Vec3};

/// Standard deviations of the ranging/angle noise and of the per-axis anchor drift.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    /// Range, meters.
    pub sigma_d: f64,
    /// Azimuth, radians.
    pub sigma_phi: f64,
    /// Elevation, radians.
    pub sigma_theta: f64,
    pub sigma_dx: f64,
    pub sigma_dy: f64,
    pub sigma_dz: f64,
}

impl NoiseModel {
    pub fn new(sigma_d: f64, sigma_angle: f64, sigma_drift: f64) -> Self {
        Self {
            sigma_d,
            sigma_phi: sigma_angle,
            sigma_theta: sigma_angle,
            sigma_dx: sigma_drift,
            sigma_dy: sigma_drift,
            sigma_dz: sigma_drift,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma_d, self.sigma_phi, self.sigma_theta, self.sigma_dx, self.sigma_dy, self.sigma_dz];
        if all.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidNoise("standard deviations must be finite and non-negative"))
        }
    }

    /// Fails unless every measurement standard deviation is strictly positive.
    pub fn ensure_measurement_noise(&self) -> Result<()> {
        self.validate()?;
        if self.sigma_d > 0.0 && self.sigma_phi > 0.0 && self.sigma_theta > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidNoise("measurement standard deviations must be positive"))
        }
    }

    /// `diag(sigma_d^2, sigma_phi^2, sigma_theta^2)`.
    pub fn measurement_covariance(&self) -> Mat3 {
        Mat3::diag(self.sigma_d.powi(2), self.sigma_phi.powi(2), self.sigma_theta.powi(2))
    }

    /// `diag(sigma_dx^2, sigma_dy^2, sigma_dz^2)`.
    pub fn drift_covariance(&self) -> Mat3 {
        Mat3::diag(self.sigma_dx.powi(2), self.sigma_dy.powi(2), self.sigma_dz.powi(2))
    }

    pub fn has_drift(&self) -> bool {
        self.sigma_dx > 0.0 || self.sigma_dy > 0.0 || self.sigma_dz > 0.0
    }

    /// Measurement deviations divided by `sqrt(weight)`; drift is untouched.
    pub fn with_measurement_weight(&self, weight: f64) -> NoiseModel {
        let s = weight.sqrt().recip();
        NoiseModel {
            sigma_d: self.sigma_d * s,
            sigma_phi: self.sigma_phi * s,
            sigma_theta: self.sigma_theta * s,
            ..*self
        }
    }
}

/// Which range/angle values were forced back into their domain after noise was added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Clamping {
    pub range: bool,
    pub elevation: bool,
}

impl Clamping {
    pub fn any(&self) -> bool {
        self.range || self.elevation
    }
}

/// Adds zero-mean Gaussian noise to a triple, then restores the domain
/// (`d >= 0`, azimuth wrapped, elevation clamped to `[0, pi]`).
pub fn sample_measurement<R: Rng + ?Sized>(
    true_m: &MeasurementTriple,
    n: &NoiseModel,
    rng: &mut R,
) -> (MeasurementTriple, Clamping) {
    let e_d: f64 = rng.sample(StandardNormal);
    let e_phi: f64 = rng.sample(StandardNormal);
    let e_theta: f64 = rng.sample(StandardNormal);

    let d = true_m.d + n.sigma_d * e_d;
    let phi = true_m.phi + n.sigma_phi * e_phi;
    let theta = true_m.theta + n.sigma_theta * e_theta;

    let clamping = Clamping { range: d < 0.0, elevation: !(0.0..=PI).contains(&theta) };
    let m = MeasurementTriple {
        d: d.max(0.0),
        phi: if n.sigma_phi == 0.0 { true_m.phi } else { wrap_angle(phi) },
        theta: theta.clamp(0.0, PI),
    };
    (m, clamping)
}

/// Independent zero-mean Gaussian drift per axis.
pub fn sample_anchor_drift<R: Rng + ?Sized>(n: &NoiseModel, rng: &mut R) -> Vec3 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(n.sigma_dx * x, n.sigma_dy * y, n.sigma_dz * z)
}

/// First-order perturbation of (range, azimuth, elevation) caused by anchor drift.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InducedNoise {
    pub eta_d: f64,
    pub eta_phi: f64,
    pub eta_theta: f64,
}

impl InducedNoise {
    pub fn to_vec(self) -> Vec3 {
        Vec3::new(self.eta_d, self.eta_phi, self.eta_theta)
    }
}

/// Rows map a drift vector to (eta_d, eta_phi, eta_theta).
fn induced_noise_map(r: &RelativeCoords, m: &MeasurementTriple) -> Result<Mat3> {
    if r.d.is_nan() || r.d <= 0.0 {
        return Err(Error::DegenerateGeometry("source coincides with anchor"));
    }
    let (sp, cp) = m.phi.sin_cos();
    let az_den = cp * r.xt + sp * r.yt;
    if az_den == 0.0 {
        return Err(Error::DegenerateGeometry("azimuth perturbation denominator is zero"));
    }
    let st = m.theta.sin();
    if st == 0.0 || m.is_polar() {
        return Err(Error::DegenerateGeometry("elevation perturbation undefined at the poles"));
    }
    Ok(Mat3([[r.xt / r.d, r.yt / r.d, r.zt / r.d], [-sp / az_den, cp / az_den, 0.0], [0.0, 0.0, -1.0 / (r.d * st)]]))
}

/// Range, azimuth and elevation perturbations for drift `delta`.
///
/// The elevation term keeps only the vertical drift component, so it is exact to
/// first order only for horizontal lines of sight.
pub fn induced_noise(r: &RelativeCoords, m: &MeasurementTriple, delta: Vec3) -> Result<InducedNoise> {
    let v = induced_noise_map(r, m)?.mul_vec(delta);
    Ok(InducedNoise { eta_d: v.x, eta_phi: v.y, eta_theta: v.z })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceVariant {
    /// Entry formulas as published, including the `+sin(phi)` term in the
    /// range/azimuth cross entry.
    #[default]
    PaperFormulas,
    /// Direct expectation of the induced-noise outer product.
    DerivedFormulas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCovariance {
    pub c: Mat3,
    pub variant: CovarianceVariant,
}

pub fn uncertainty_covariance(
    r: &RelativeCoords,
    m: &MeasurementTriple,
    n: &NoiseModel,
    variant: CovarianceVariant,
) -> Result<UncertaintyCovariance> {
    r.ensure_regular()?;
    n.validate()?;
    induced_noise_map(r, m)?;
    let (sx2, sy2, sz2) = (n.sigma_dx.powi(2), n.sigma_dy.powi(2), n.sigma_dz.powi(2));
    let (sp, cp) = m.phi.sin_cos();
    let st = m.theta.sin();
    let az_den = r.xt * cp + r.yt * sp;
    let d2 = r.d * r.d;
    // The two variants differ only in the sign of the x-drift term of the
    // range/azimuth entry.
    let x_sign = match variant {
        CovarianceVariant::PaperFormulas => 1.0,
        CovarianceVariant::DerivedFormulas => -1.0,
    };
    let mut c = Mat3::ZERO;
    c[(0, 0)] = (sx2 * r.xt * r.xt + sy2 * r.yt * r.yt + sz2 * r.zt * r.zt) / d2;
    c[(0, 1)] = (x_sign * sp * sx2 * r.xt + cp * sy2 * r.yt) / (az_den * r.d);
    c[(0, 2)] = -r.zt * sz2 / (st * d2);
    c[(1, 1)] = (sp * sp * sx2 + cp * cp * sy2) / (az_den * az_den);
    c[(1, 2)] = 0.0;
    c[(2, 2)] = (n.sigma_dz / (st * r.d)).powi(2);
    c.symmetrize_upper();
    Ok(UncertaintyCovariance { c, variant })
}
