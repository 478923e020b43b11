//! Fisher information and Cramér-Rao bounds for joint range/azimuth/elevation localization.
//!
//! Two information models are provided:
//!
//! * known anchors: independent Gaussian errors on every range and angle, summed
//!   per anchor in closed form;
//! * uncertain anchors: each anchor contributes `G C^-1 G^T`, where `G` is the
//!   measurement gradient and `C` the covariance that anchor drift induces on
//!   the triple (see [`crate::uncertainty`]).
//!
//! Every per-anchor term is scaled by the channel weight from
//! [`crate::channel::fim_weight`]. The weight is read as an SNR factor on the
//! measurement variances, which is how the simulation harness applies it as well.

use crate::channel::{positive_fim_weight, ChannelParams, FimWeighting};
use crate::error::{Error, Result};
use crate::geometry::{measurement_from_relative, relative_coords, RelativeCoords};
use crate::linalg::{Mat3, Vec3, MAX_CONDITION};
use crate::uncertainty::{uncertainty_covariance, CovarianceVariant, NoiseModel};

/// Selects between the analytically consistent expressions and the ones as printed.
///
/// `PaperLiteral` flips the sign of the azimuth-vs-y and elevation-vs-z gradient
/// entries and leaves the range term of the zz Fisher entry unsquared. Neither
/// form is a valid derivative/information; they exist to reproduce published numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    #[default]
    Analytic,
    PaperLiteral,
}

/// Noise model behind the uncertain-anchor bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApuNoiseMode {
    /// Drift-induced covariance only, scaled by the channel weight.
    DriftOnly,
    /// Drift-induced covariance plus the measurement noise; reduces to the
    /// known-anchor bound when drift vanishes.
    #[default]
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ApuOptions {
    pub covariance: CovarianceVariant,
    pub noise_mode: ApuNoiseMode,
    pub formulation: Formulation,
}

/// Symmetric 3x3 Fisher information for the source position, in 1/m^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub j: Mat3,
}

impl FisherMatrix {
    pub fn is_psd(&self) -> bool {
        self.j.is_psd(1e-10)
    }
}

/// Per-axis variance bounds in m^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    pub var_x: f64,
    pub var_y: f64,
    pub var_z: f64,
    pub total: f64,
}

impl CrlbResult {
    /// Root of the total variance bound, i.e. the RMSE floor in meters.
    pub fn rmse_bound(&self) -> f64 {
        self.total.sqrt()
    }
}

/// Gradient of one anchor's (d, phi, theta) with respect to the source position.
///
/// Row `a` holds `d(d, phi, theta)/d a` for `a` in `x, y, z`.
pub fn measurement_gradient(r: &RelativeCoords, formulation: Formulation) -> Result<Mat3> {
    r.ensure_regular()?;
    let RelativeCoords { xt, yt, zt, d, d2 } = *r;
    let dd = d * d;
    let h2 = d2 * d2;
    let (phi_y, theta_z) = match formulation {
        Formulation::Analytic => (xt / h2, -d2 / dd),
        Formulation::PaperLiteral => (-xt / h2, d2 / dd),
    };
    Ok(Mat3([[xt / d, -yt / h2, xt * zt / (dd * d2)], [yt / d, phi_y, yt * zt / (dd * d2)], [zt / d, 0.0, theta_z]]))
}

fn ensure_anchors(anchors: &[Vec3]) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::EmptyInput("at least one anchor is required"));
    }
    anchors.iter().try_for_each(|a| a.ensure_finite("anchor position"))
}

fn anchor_weight(ch: &ChannelParams, d: f64) -> Result<f64> {
    match ch.fim_weighting {
        FimWeighting::UnitPrefactor => Ok(1.0),
        FimWeighting::PaperPrefactor => positive_fim_weight(ch, d),
    }
}

/// Closed-form information of one anchor with unit weight.
fn known_anchor_term(r: &RelativeCoords, n: &NoiseModel, formulation: Formulation) -> Mat3 {
    let RelativeCoords { xt, yt, zt, d, d2 } = *r;
    let (sd, sp, st) = (n.sigma_d, n.sigma_phi, n.sigma_theta);
    let dd = d * d;
    let h2 = d2 * d2;
    let elev = zt / (st * dd * d2);
    let radial_vs_elev = 1.0 / (sd * sd) - 1.0 / (st * st * dd);
    let range_z = match formulation {
        Formulation::Analytic => (zt / sd).powi(2),
        Formulation::PaperLiteral => zt / sd,
    };

    let mut j = Mat3::ZERO;
    j[(0, 0)] = (xt / (sd * d)).powi(2) + (yt / (sp * h2)).powi(2) + (xt * elev).powi(2);
    j[(0, 1)] = xt * yt * (1.0 / (sd * sd * dd) - 1.0 / (sp * sp * h2 * h2) + elev * elev);
    j[(0, 2)] = xt * zt / dd * radial_vs_elev;
    j[(1, 1)] = (yt / (sd * d)).powi(2) + (xt / (sp * h2)).powi(2) + (yt * elev).powi(2);
    j[(1, 2)] = yt * zt / dd * radial_vs_elev;
    j[(2, 2)] = (range_z + (d2 / (st * d)).powi(2)) / dd;
    j.symmetrize_upper();
    j
}

/// Fisher information with perfectly known anchors.
pub fn fim_known_anchors(source: Vec3, anchors: &[Vec3], n: &NoiseModel, ch: &ChannelParams) -> Result<FisherMatrix> {
    fim_known_anchors_with(source, anchors, n, ch, Formulation::Analytic)
}

pub fn fim_known_anchors_with(
    source: Vec3,
    anchors: &[Vec3],
    n: &NoiseModel,
    ch: &ChannelParams,
    formulation: Formulation,
) -> Result<FisherMatrix> {
    ensure_anchors(anchors)?;
    source.ensure_finite("source position")?;
    n.ensure_measurement_noise()?;
    let mut j = Mat3::ZERO;
    for &anchor in anchors {
        let r = relative_coords(source, anchor);
        r.ensure_regular()?;
        let w = anchor_weight(ch, r.d)?;
        j += known_anchor_term(&r, n, formulation).scale(w);
    }
    Ok(FisherMatrix { j })
}

/// Fisher information when the assumed anchor positions carry Gaussian drift.
pub fn fim_uncertain_anchors(
    source: Vec3,
    anchors: &[Vec3],
    n: &NoiseModel,
    ch: &ChannelParams,
    opts: &ApuOptions,
) -> Result<FisherMatrix> {
    ensure_anchors(anchors)?;
    source.ensure_finite("source position")?;
    match opts.noise_mode {
        ApuNoiseMode::Effective => n.ensure_measurement_noise()?,
        ApuNoiseMode::DriftOnly => n.validate()?,
    }
    let mut j = Mat3::ZERO;
    for (index, &anchor) in anchors.iter().enumerate() {
        let r = relative_coords(source, anchor);
        r.ensure_regular()?;
        let m = measurement_from_relative(&r)?;
        let g = measurement_gradient(&r, opts.formulation)?;
        let c = uncertainty_covariance(&r, &m, n, opts.covariance)?.c;
        let w = anchor_weight(ch, r.d)?;
        let (cov, outer) = match opts.noise_mode {
            ApuNoiseMode::DriftOnly => (c, w),
            ApuNoiseMode::Effective => (c + n.measurement_covariance().scale(1.0 / w), 1.0),
        };
        let inv =
            cov.try_inverse().ok_or(Error::SingularCovariance { anchor: index, condition: cov.condition_number() })?;
        let mut term = Mat3::congruence(&g.transpose(), &inv).scale(outer);
        term.symmetrize_upper();
        j += term;
    }
    Ok(FisherMatrix { j })
}

/// Per-axis bounds from the cofactors of the Fisher matrix.
pub fn crlb_from_fim(fim: &FisherMatrix) -> Result<CrlbResult> {
    let j = &fim.j;
    if !j.is_finite() {
        return Err(Error::SingularFim(f64::INFINITY));
    }
    let cond = j.condition_number();
    if cond > MAX_CONDITION {
        return Err(Error::SingularFim(cond));
    }
    let det = j.determinant();
    let var_x = (j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(1, 2)]) / det;
    let var_y = (j[(0, 0)] * j[(2, 2)] - j[(0, 2)] * j[(0, 2)]) / det;
    let var_z = (j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(0, 1)]) / det;
    Ok(CrlbResult { var_x, var_y, var_z, total: var_x + var_y + var_z })
}

pub fn crlb_known_anchors(source: Vec3, anchors: &[Vec3], n: &NoiseModel, ch: &ChannelParams) -> Result<CrlbResult> {
    crlb_from_fim(&fim_known_anchors(source, anchors, n, ch)?)
}

pub fn crlb_uncertain_anchors(
    source: Vec3,
    anchors: &[Vec3],
    n: &NoiseModel,
    ch: &ChannelParams,
    opts: &ApuOptions,
) -> Result<CrlbResult> {
    crlb_from_fim(&fim_uncertain_anchors(source, anchors, n, ch, opts)?)
}
