//! Underwater optical channel factors entering the Fisher information.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in water, m/s.
pub const SPEED_OF_LIGHT_WATER: f64 = 2.55e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttenuationMode {
    /// `exp(-c)`, independent of range.
    #[default]
    ConstantExponent,
    /// Beer-Lambert `exp(-c * d)`.
    DistanceDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FimWeighting {
    /// Per-anchor weight `3 * k_j * mu_j`.
    #[default]
    PaperPrefactor,
    /// Weight 1: the plain Gaussian-likelihood information.
    UnitPrefactor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaterType {
    PureOcean,
    TurbidHarbor,
    Custom(f64),
}

impl WaterType {
    /// Extinction coefficient `c(lambda)` in 1/m at blue-green wavelengths.
    pub fn extinction_coeff(&self) -> f64 {
        match *self {
            WaterType::PureOcean => 0.056,
            WaterType::TurbidHarbor => 2.17,
            WaterType::Custom(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Transmit power in watts.
    pub transmit_power: f64,
    /// Receiver aperture area in m^2.
    pub aperture_area: f64,
    /// Angle between the beam trajectory and the receiver normal, radians.
    pub trajectory_angle: f64,
    /// Beam divergence half-angle, radians, in `(0, pi)`.
    pub divergence_angle: f64,
    /// Extinction coefficient in 1/m.
    pub extinction_coeff: f64,
    pub attenuation_mode: AttenuationMode,
    pub fim_weighting: FimWeighting,
}

impl Default for ChannelParams {
    /// Pure ocean water, 30 degree divergence. Power and aperture put the pure-ocean
    /// prefactor `3 k mu` close to one.
    fn default() -> Self {
        Self {
            transmit_power: 1.0,
            aperture_area: 0.3,
            trajectory_angle: 0.0,
            divergence_angle: PI / 6.0,
            extinction_coeff: WaterType::PureOcean.extinction_coeff(),
            attenuation_mode: AttenuationMode::ConstantExponent,
            fim_weighting: FimWeighting::PaperPrefactor,
        }
    }
}

impl ChannelParams {
    pub fn with_water(mut self, water: WaterType) -> Self {
        self.extinction_coeff = water.extinction_coeff();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.divergence_angle > 0.0 && self.divergence_angle < PI) {
            return Err(Error::InvalidChannel("divergence angle must lie in (0, pi)"));
        }
        if !(self.transmit_power.is_finite() && self.transmit_power >= 0.0) {
            return Err(Error::InvalidChannel("transmit power must be finite and non-negative"));
        }
        if !(self.aperture_area.is_finite() && self.aperture_area >= 0.0) {
            return Err(Error::InvalidChannel("aperture area must be finite and non-negative"));
        }
        if !(self.extinction_coeff.is_finite() && self.extinction_coeff >= 0.0) {
            return Err(Error::InvalidChannel("extinction coefficient must be finite and non-negative"));
        }
        if !self.trajectory_angle.is_finite() {
            return Err(Error::InvalidChannel("trajectory angle must be finite"));
        }
        Ok(())
    }
}

/// Geometric optical gain `k = P A cos(trajectory) / (2 pi (1 - cos(divergence)))`.
pub fn gain_factor(p: &ChannelParams) -> Result<f64> {
    p.validate()?;
    let spread = 2.0 * PI * (1.0 - p.divergence_angle.cos());
    Ok(p.transmit_power * p.aperture_area * p.trajectory_angle.cos() / spread)
}

/// Attenuation factor `mu` at range `d` (ignored in constant-exponent mode).
pub fn attenuation(p: &ChannelParams, d: f64) -> f64 {
    match p.attenuation_mode {
        AttenuationMode::ConstantExponent => (-p.extinction_coeff).exp(),
        AttenuationMode::DistanceDependent => (-p.extinction_coeff * d).exp(),
    }
}

/// Per-anchor Fisher weight at range `d`.
pub fn fim_weight(p: &ChannelParams, d: f64) -> Result<f64> {
    match p.fim_weighting {
        FimWeighting::UnitPrefactor => Ok(1.0),
        FimWeighting::PaperPrefactor => Ok(3.0 * gain_factor(p)? * attenuation(p, d)),
    }
}

/// Like [`fim_weight`] but rejects non-positive weights, which would make the
/// effective measurement variance `sigma^2 / w` meaningless.
pub fn positive_fim_weight(p: &ChannelParams, d: f64) -> Result<f64> {
    let w = fim_weight(p, d)?;
    if w > 0.0 && w.is_finite() {
        Ok(w)
    } else {
        Err(Error::InvalidChannel("Fisher weight 3*k*mu must be positive"))
    }
}

pub fn toa_to_distance(t: f64) -> f64 {
    SPEED_OF_LIGHT_WATER * t
}
