//! Run configuration: a flat JSON document with a fixed key set.
//!
//! Absent keys take the defaults below; unknown keys are rejected. Angles are in
//! degrees here and in radians everywhere past [`RunConfig`].

use std::fmt;

use serde::{Deserialize, Serialize};
use uowsn_core::{
    ApuNoiseMode, ApuOptions, AttenuationMode, ChannelParams, CovarianceVariant, FimWeighting, NoiseModel, Region,
    SweepSpec, SweptParameter, WaterType,
};

/// Tag written into every output file so readers can detect layout changes.
pub const FORMAT_VERSION: &str = "uowsn-csv/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaterTypeKey {
    PureOcean,
    TurbidHarbor,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttenuationKey {
    ConstantExponent,
    DistanceDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingKey {
    PaperPrefactor,
    UnitPrefactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKey {
    PaperFormulas,
    DerivedFormulas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApuModeKey {
    Effective,
    DriftOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKey {
    NumAnchors,
    RangeErrorStdM,
    SnrDb,
    AnchorDriftStdM,
}

impl From<ParameterKey> for SweptParameter {
    fn from(k: ParameterKey) -> Self {
        match k {
            ParameterKey::NumAnchors => SweptParameter::NumAnchors,
            ParameterKey::RangeErrorStdM => SweptParameter::RangeErrorStd,
            ParameterKey::SnrDb => SweptParameter::Snr,
            ParameterKey::AnchorDriftStdM => SweptParameter::AnchorDriftStd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDocument {
    pub parameter: ParameterKey,
    pub values: Vec<f64>,
}

/// The document as written, after defaults are filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDocument {
    pub seed: u64,
    pub num_anchors: usize,
    pub region_side_m: f64,
    pub trials: usize,
    pub sigma_toa_m: f64,
    pub sigma_aoa_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_drift_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_drift_x_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_drift_y_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_drift_z_m: Option<f64>,
    pub water_type: WaterTypeKey,
    /// Required with `water_type = custom`, rejected otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extinction_coeff_per_m: Option<f64>,
    /// Metadata only; the extinction coefficient carries the channel.
    pub wavelength_nm: f64,
    pub divergence_deg: f64,
    pub trajectory_deg: f64,
    pub transmit_power_w: f64,
    pub aperture_area_m2: f64,
    pub attenuation_mode: AttenuationKey,
    pub fim_weighting: WeightingKey,
    pub covariance_variant: CovarianceKey,
    pub apu_noise_mode: ApuModeKey,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDocument>,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        Self {
            seed: 1,
            num_anchors: 8,
            region_side_m: 100.0,
            trials: 1000,
            sigma_toa_m: 2.0,
            sigma_aoa_deg: 2.0,
            sigma_drift_m: None,
            sigma_drift_x_m: None,
            sigma_drift_y_m: None,
            sigma_drift_z_m: None,
            water_type: WaterTypeKey::PureOcean,
            extinction_coeff_per_m: None,
            wavelength_nm: 445.0,
            divergence_deg: 30.0,
            trajectory_deg: 0.0,
            transmit_power_w: 1.0,
            aperture_area_m2: 0.3,
            attenuation_mode: AttenuationKey::ConstantExponent,
            fim_weighting: WeightingKey::PaperPrefactor,
            covariance_variant: CovarianceKey::PaperFormulas,
            apu_noise_mode: ApuModeKey::Effective,
            sweep: None,
        }
    }
}

/// Drift used when no drift key is given, meters per axis.
pub const DEFAULT_DRIFT_M: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, column: usize, message: String },
    Validation { key: &'static str, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, column, message } => {
                write!(f, "config parse error at line {line}, column {column}: {message}")
            }
            ConfigError::Validation { key, message } => write!(f, "invalid config value for `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key, message: message.into() }
}

fn non_negative(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite and non-negative, got {v}")))
    }
}

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite and positive, got {v}")))
    }
}

/// A validated configuration and the experiment it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub document: ConfigDocument,
    pub spec: SweepSpec,
}

impl RunConfig {
    pub fn from_document(document: ConfigDocument) -> Result<Self, ConfigError> {
        let spec = build_spec(&document)?;
        Ok(RunConfig { document, spec })
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.spec.base_noise
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.spec.channel
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.document.seed = seed;
        self.spec.seed = seed;
        self
    }

    /// Pretty JSON that [`parse_config`] maps back to an equal `RunConfig`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document).expect("config document serializes")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let document: ConfigDocument = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    RunConfig::from_document(document)
}

fn drift_sigmas(doc: &ConfigDocument) -> Result<[f64; 3], ConfigError> {
    let axes = [doc.sigma_drift_x_m, doc.sigma_drift_y_m, doc.sigma_drift_z_m];
    let any_axis = axes.iter().any(Option::is_some);
    match (doc.sigma_drift_m, any_axis) {
        (Some(_), true) => Err(invalid("sigma_drift_m", "give either sigma_drift_m or the per-axis keys, not both")),
        (Some(s), false) => {
            let s = non_negative("sigma_drift_m", s)?;
            Ok([s; 3])
        }
        (None, true) => {
            let keys = ["sigma_drift_x_m", "sigma_drift_y_m", "sigma_drift_z_m"];
            let mut out = [0.0; 3];
            for ((slot, value), key) in out.iter_mut().zip(axes).zip(keys) {
                *slot = non_negative(
                    key,
                    value.ok_or_else(|| invalid(key, "all three per-axis drift keys are required"))?,
                )?;
            }
            Ok(out)
        }
        (None, false) => Ok([DEFAULT_DRIFT_M; 3]),
    }
}

fn extinction(doc: &ConfigDocument) -> Result<f64, ConfigError> {
    let key = "extinction_coeff_per_m";
    match (doc.water_type, doc.extinction_coeff_per_m) {
        (WaterTypeKey::Custom, Some(c)) => Ok(WaterType::Custom(non_negative(key, c)?).extinction_coeff()),
        (WaterTypeKey::Custom, None) => Err(invalid(key, "required when water_type is custom")),
        (_, Some(_)) => Err(invalid(key, "only allowed when water_type is custom")),
        (WaterTypeKey::PureOcean, None) => Ok(WaterType::PureOcean.extinction_coeff()),
        (WaterTypeKey::TurbidHarbor, None) => Ok(WaterType::TurbidHarbor.extinction_coeff()),
    }
}

fn build_spec(doc: &ConfigDocument) -> Result<SweepSpec, ConfigError> {
    if doc.num_anchors == 0 {
        return Err(invalid("num_anchors", "must be at least 1"));
    }
    if doc.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let side = positive("region_side_m", doc.region_side_m)?;
    let sigma_d = non_negative("sigma_toa_m", doc.sigma_toa_m)?;
    let sigma_angle = non_negative("sigma_aoa_deg", doc.sigma_aoa_deg)?.to_radians();
    let [dx, dy, dz] = drift_sigmas(doc)?;
    positive("wavelength_nm", doc.wavelength_nm)?;
    let divergence = positive("divergence_deg", doc.divergence_deg)?;
    if divergence >= 180.0 {
        return Err(invalid("divergence_deg", format!("must be below 180, got {divergence}")));
    }
    let trajectory = doc.trajectory_deg;
    if !trajectory.is_finite() {
        return Err(invalid("trajectory_deg", "must be finite"));
    }

    let base_noise = NoiseModel {
        sigma_d,
        sigma_phi: sigma_angle,
        sigma_theta: sigma_angle,
        sigma_dx: dx,
        sigma_dy: dy,
        sigma_dz: dz,
    };
    let channel = ChannelParams {
        transmit_power: non_negative("transmit_power_w", doc.transmit_power_w)?,
        aperture_area: non_negative("aperture_area_m2", doc.aperture_area_m2)?,
        trajectory_angle: trajectory.to_radians(),
        divergence_angle: divergence.to_radians(),
        extinction_coeff: extinction(doc)?,
        attenuation_mode: match doc.attenuation_mode {
            AttenuationKey::ConstantExponent => AttenuationMode::ConstantExponent,
            AttenuationKey::DistanceDependent => AttenuationMode::DistanceDependent,
        },
        fim_weighting: match doc.fim_weighting {
            WeightingKey::PaperPrefactor => FimWeighting::PaperPrefactor,
            WeightingKey::UnitPrefactor => FimWeighting::UnitPrefactor,
        },
    };
    let apu = ApuOptions {
        covariance: match doc.covariance_variant {
            CovarianceKey::PaperFormulas => CovarianceVariant::PaperFormulas,
            CovarianceKey::DerivedFormulas => CovarianceVariant::DerivedFormulas,
        },
        noise_mode: match doc.apu_noise_mode {
            ApuModeKey::Effective => ApuNoiseMode::Effective,
            ApuModeKey::DriftOnly => ApuNoiseMode::DriftOnly,
        },
        ..Default::default()
    };

    let (swept_parameter, values) = match &doc.sweep {
        Some(s) => (SweptParameter::from(s.parameter), s.values.clone()),
        None => (SweptParameter::NumAnchors, vec![doc.num_anchors as f64]),
    };
    let spec = SweepSpec {
        swept_parameter,
        values,
        trials_per_point: doc.trials,
        base_noise,
        channel,
        seed: doc.seed,
        num_anchors: doc.num_anchors,
        region: Region::cube(side),
        apu,
    };
    spec.validate().map_err(|e| invalid("sweep", e.to_string()))?;
    Ok(spec)
}
