//! Cramér-Rao bounds and least-squares baselines for 3D localization from joint
//! time-of-arrival and angle-of-arrival measurements in underwater optical
//! wireless networks, with and without anchor position uncertainty.
//!
//! Module map:
//!
//! * [`geometry`] - range/azimuth/elevation model and its inverse
//! * [`channel`] - optical gain, attenuation and water presets
//! * [`uncertainty`] - noise sampling and drift-induced measurement covariance
//! * [`crlb`] - Fisher information and cofactor bounds
//! * [`estimators`] - LLS / WLLS from per-anchor spherical fixes
//! * [`experiments`] - seeded Monte Carlo sweeps
//! * [`oracle`] - independent numerical checks of the closed forms

pub mod channel;
pub mod crlb;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod uncertainty;

pub use channel::{AttenuationMode, ChannelParams, FimWeighting, WaterType};
pub use crlb::{ApuNoiseMode, ApuOptions, CrlbResult, FisherMatrix, Formulation};
pub use error::{Error, Result};
pub use estimators::EstimateResult;
pub use experiments::{Region, Scenario, SweepRecord, SweepResult, SweepSpec, SweptParameter, TrialRecord};
pub use geometry::{MeasurementTriple, RelativeCoords};
pub use linalg::{Mat3, Vec3};
pub use uncertainty::{CovarianceVariant, InducedNoise, NoiseModel, UncertaintyCovariance};
