//! Deterministic Monte Carlo harness: scenario generation, trials, RMSE aggregation
//! and parameter sweeps.
//!
//! Every trial draws from its own ChaCha stream keyed by (seed, sweep point, trial
//! index), so results do not depend on thread count or execution order, and adding
//! trials leaves the existing ones untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{positive_fim_weight, ChannelParams, FimWeighting};
use crate::crlb::{crlb_known_anchors, crlb_uncertain_anchors, ApuNoiseMode, ApuOptions, CrlbResult};
use crate::error::{Error, Result};
use crate::estimators::{lls_estimate, wlls_estimate_per_anchor};
use crate::geometry::true_measurement;
use crate::linalg::Vec3;
use crate::uncertainty::{sample_anchor_drift, sample_measurement, NoiseModel};

/// Minimum source-anchor separation accepted by [`generate_scenario`], meters.
pub const MIN_ANCHOR_SEPARATION: f64 = 0.5;
const MAX_RETRIES: usize = 100;

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: Vec3,
    pub max: Vec3,
}

impl Region {
    /// Cube `[0, side]^3`.
    pub fn cube(side: f64) -> Self {
        Region { min: Vec3::ZERO, max: Vec3::new(side, side, side) }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    fn validate(&self) -> Result<()> {
        self.min.ensure_finite("region corner")?;
        self.max.ensure_finite("region corner")?;
        if (0..3).all(|i| self.max[i] > self.min[i]) {
            Ok(())
        } else {
            Err(Error::InvalidSweep("region must have positive extent on every axis"))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        Vec3::new(
            rng.random_range(self.min.x..self.max.x),
            rng.random_range(self.min.y..self.max.y),
            rng.random_range(self.min.z..self.max.z),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub source: Vec3,
    pub anchors_true: Vec<Vec3>,
    /// Positions the localizer believes in. Drift can push these outside the region.
    pub anchors_drifted: Vec<Vec3>,
    pub region: Region,
}

impl Scenario {
    pub fn mean_squared_distance(&self) -> f64 {
        let sum: f64 = self.anchors_true.iter().map(|a| (self.source - *a).norm_squared()).sum();
        sum / self.anchors_true.len() as f64
    }
}

/// Uniform source and anchors in `region`, then Gaussian drift on every anchor.
pub fn generate_scenario<R: Rng + ?Sized>(
    num_anchors: usize,
    region: &Region,
    n: &NoiseModel,
    rng: &mut R,
) -> Result<Scenario> {
    if num_anchors == 0 {
        return Err(Error::EmptyInput("at least one anchor is required"));
    }
    region.validate()?;
    n.validate()?;
    let source = region.sample(rng);
    let mut anchors_true = Vec::with_capacity(num_anchors);
    let mut retries = 0;
    while anchors_true.len() < num_anchors {
        let a = region.sample(rng);
        let dx = source.x - a.x;
        let dy = source.y - a.y;
        if source.distance_to(&a) >= MIN_ANCHOR_SEPARATION && dx.hypot(dy) > 0.0 {
            anchors_true.push(a);
        } else {
            retries += 1;
            if retries > MAX_RETRIES {
                return Err(Error::GenerationFailed(MAX_RETRIES));
            }
        }
    }
    let anchors_drifted = anchors_true.iter().map(|&a| a + sample_anchor_drift(n, rng)).collect();
    Ok(Scenario { source, anchors_true, anchors_drifted, region: *region })
}

/// Squared position errors of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialRecord {
    pub sq_err_lls: f64,
    pub sq_err_wlls: f64,
    pub sq_err_lls_apu: f64,
    pub sq_err_wlls_apu: f64,
    /// Range or elevation samples pushed back into their domain.
    pub clamp_events: usize,
    /// WLLS anchors whose weight fell back to isotropic.
    pub fallbacks: usize,
}

fn measurement_weight(ch: &ChannelParams, d: f64) -> Result<f64> {
    match ch.fim_weighting {
        FimWeighting::UnitPrefactor => Ok(1.0),
        FimWeighting::PaperPrefactor => positive_fim_weight(ch, d),
    }
}

/// Simulates one observation round on `s`.
///
/// Measurements come from the true anchor geometry, with the channel weight at
/// each anchor dividing the measurement variances. Both estimators then run twice:
/// with the true anchor positions and with the drifted ones.
pub fn run_trial<R: Rng + ?Sized>(
    s: &Scenario,
    n: &NoiseModel,
    ch: &ChannelParams,
    rng: &mut R,
) -> Result<TrialRecord> {
    n.validate()?;
    let mut measurements = Vec::with_capacity(s.anchors_true.len());
    let mut clamp_events = 0;
    for &anchor in &s.anchors_true {
        let truth = true_measurement(s.source, anchor)?;
        let noise = n.with_measurement_weight(measurement_weight(ch, truth.d)?);
        let (m, clamping) = sample_measurement(&truth, &noise, rng);
        clamp_events += clamping.any() as usize;
        measurements.push(m);
    }
    // The estimator only sees measured ranges when it evaluates the channel weight.
    let noises = measurements
        .iter()
        .map(|m| Ok(n.with_measurement_weight(measurement_weight(ch, m.d)?)))
        .collect::<Result<Vec<_>>>()?;

    let sq = |p: Vec3| (p - s.source).norm_squared();
    let lls = lls_estimate(&s.anchors_true, &measurements)?;
    let wlls = wlls_estimate_per_anchor(&s.anchors_true, &measurements, &noises, false)?;
    let lls_apu = lls_estimate(&s.anchors_drifted, &measurements)?;
    let wlls_apu = wlls_estimate_per_anchor(&s.anchors_drifted, &measurements, &noises, n.has_drift())?;

    Ok(TrialRecord {
        sq_err_lls: sq(lls.position),
        sq_err_wlls: sq(wlls.position),
        sq_err_lls_apu: sq(lls_apu.position),
        sq_err_wlls_apu: sq(wlls_apu.position),
        clamp_events,
        fallbacks: wlls.fallbacks + wlls_apu.fallbacks,
    })
}

/// Root mean of squared errors.
pub fn rmse(sq_errors: &[f64]) -> Result<f64> {
    if sq_errors.is_empty() {
        return Err(Error::EmptyInput("no errors to average"));
    }
    Ok((sq_errors.iter().sum::<f64>() / sq_errors.len() as f64).sqrt())
}

/// Standard error of an RMSE estimate by the delta method on the mean squared error.
pub fn rmse_standard_error(sq_errors: &[f64]) -> f64 {
    let n = sq_errors.len();
    if n < 2 {
        return 0.0;
    }
    let mean = sq_errors.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = sq_errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt() / (2.0 * mean.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    /// Anchor count per scenario.
    NumAnchors,
    /// Range standard deviation, meters.
    RangeErrorStd,
    /// Mean squared source-anchor distance over range variance, dB.
    Snr,
    /// Per-axis anchor drift standard deviation, meters.
    AnchorDriftStd,
}

impl SweptParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParameter::NumAnchors => "num_anchors",
            SweptParameter::RangeErrorStd => "range_error_std_m",
            SweptParameter::Snr => "snr_db",
            SweptParameter::AnchorDriftStd => "anchor_drift_std_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub swept_parameter: SweptParameter,
    pub values: Vec<f64>,
    pub trials_per_point: usize,
    pub base_noise: NoiseModel,
    pub channel: ChannelParams,
    pub seed: u64,
    /// Anchor count when it is not the swept parameter.
    pub num_anchors: usize,
    pub region: Region,
    pub apu: ApuOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("no sweep values"));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidSweep("trials per point must be at least 1"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSweep("sweep values must be finite"));
        }
        if self.num_anchors == 0 {
            return Err(Error::InvalidSweep("anchor count must be at least 1"));
        }
        match self.swept_parameter {
            SweptParameter::NumAnchors => {
                if self.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                    return Err(Error::InvalidSweep("anchor counts must be positive integers"));
                }
            }
            SweptParameter::RangeErrorStd | SweptParameter::AnchorDriftStd => {
                if self.values.iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidSweep("standard deviations must be non-negative"));
                }
            }
            SweptParameter::Snr => {}
        }
        self.base_noise.validate()?;
        self.channel.validate()?;
        self.region.validate()
    }

    fn anchors_at(&self, value: f64) -> usize {
        match self.swept_parameter {
            SweptParameter::NumAnchors => value as usize,
            _ => self.num_anchors,
        }
    }

    /// Noise model before any scenario-dependent adjustment.
    fn noise_at(&self, value: f64) -> NoiseModel {
        let mut n = self.base_noise;
        match self.swept_parameter {
            SweptParameter::RangeErrorStd => n.sigma_d = value,
            SweptParameter::AnchorDriftStd => {
                n.sigma_dx = value;
                n.sigma_dy = value;
                n.sigma_dz = value;
            }
            SweptParameter::NumAnchors | SweptParameter::Snr => {}
        }
        n
    }

    fn noise_for_scenario(&self, value: f64, s: &Scenario) -> NoiseModel {
        let mut n = self.noise_at(value);
        if self.swept_parameter == SweptParameter::Snr {
            let snr = 10f64.powf(value / 10.0);
            n.sigma_d = (s.mean_squared_distance() / snr).sqrt();
        }
        n
    }
}

/// Independent stream for trial `trial` of sweep point `point`.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&trial.to_le_bytes());
    key[24..].copy_from_slice(b"uowsn-mc");
    ChaCha8Rng::from_seed(key)
}

/// Trial record plus the bounds of the scenario it ran on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub crlb_known: CrlbResult,
    pub crlb_apu: CrlbResult,
    /// The APU bound under the other noise mode; `None` where it is undefined.
    pub crlb_apu_alt: Option<CrlbResult>,
}

fn alternate_mode(opts: &ApuOptions) -> ApuOptions {
    let noise_mode = match opts.noise_mode {
        ApuNoiseMode::Effective => ApuNoiseMode::DriftOnly,
        ApuNoiseMode::DriftOnly => ApuNoiseMode::Effective,
    };
    ApuOptions { noise_mode, ..*opts }
}

fn run_point_trial(spec: &SweepSpec, point: usize, value: f64, trial: usize) -> Result<TrialOutcome> {
    let mut rng = trial_rng(spec.seed, point as u64, trial as u64);
    let scenario = generate_scenario(spec.anchors_at(value), &spec.region, &spec.noise_at(value), &mut rng)?;
    let noise = spec.noise_for_scenario(value, &scenario);
    let record = run_trial(&scenario, &noise, &spec.channel, &mut rng)?;
    let crlb_known = crlb_known_anchors(scenario.source, &scenario.anchors_true, &noise, &spec.channel)?;
    let crlb_apu = crlb_uncertain_anchors(scenario.source, &scenario.anchors_true, &noise, &spec.channel, &spec.apu)?;
    let crlb_apu_alt = crlb_uncertain_anchors(
        scenario.source,
        &scenario.anchors_true,
        &noise,
        &spec.channel,
        &alternate_mode(&spec.apu),
    )
    .ok();
    Ok(TrialOutcome { record, crlb_known, crlb_apu, crlb_apu_alt })
}

/// Aggregated statistics of one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub value: f64,
    pub num_anchors: usize,
    pub rmse_lls: f64,
    pub rmse_wlls: f64,
    pub rmse_lls_apu: f64,
    pub rmse_wlls_apu: f64,
    /// `sqrt(mean CRLB)` over the trial scenarios, known anchors.
    pub sqrt_crlb_known: f64,
    /// Same for uncertain anchors under the configured noise mode.
    pub sqrt_crlb_apu: f64,
    /// Uncertain-anchor bound under the other noise mode; NaN if undefined anywhere.
    pub sqrt_crlb_apu_alt: f64,
    /// Standard error of `rmse_wlls`.
    pub rmse_stderr: f64,
    /// Standard errors of LLS, WLLS, LLS-APU, WLLS-APU.
    pub stderr_all: [f64; 4],
    pub trials: usize,
    pub failed_trials: usize,
    pub clamp_events: usize,
    pub fallbacks: usize,
    pub mean_crlb_known: CrlbResult,
    pub mean_crlb_apu: CrlbResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweptParameter,
    pub records: Vec<SweepRecord>,
}

fn mean_crlb(items: &[CrlbResult]) -> CrlbResult {
    let n = items.len() as f64;
    let sum = |f: fn(&CrlbResult) -> f64| items.iter().map(f).sum::<f64>() / n;
    CrlbResult { var_x: sum(|c| c.var_x), var_y: sum(|c| c.var_y), var_z: sum(|c| c.var_z), total: sum(|c| c.total) }
}

fn aggregate(value: f64, num_anchors: usize, outcomes: Vec<Result<TrialOutcome>>) -> Result<SweepRecord> {
    let total = outcomes.len();
    let ok: Vec<TrialOutcome> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    if ok.is_empty() {
        return Err(Error::InvalidSweep("every trial of a sweep point failed"));
    }
    let column = |f: fn(&TrialRecord) -> f64| ok.iter().map(|o| f(&o.record)).collect::<Vec<f64>>();
    let cols = [
        column(|r| r.sq_err_lls),
        column(|r| r.sq_err_wlls),
        column(|r| r.sq_err_lls_apu),
        column(|r| r.sq_err_wlls_apu),
    ];
    let rm: Vec<f64> = cols.iter().map(|c| rmse(c)).collect::<Result<_>>()?;
    let se: Vec<f64> = cols.iter().map(|c| rmse_standard_error(c)).collect();

    let known: Vec<CrlbResult> = ok.iter().map(|o| o.crlb_known).collect();
    let apu: Vec<CrlbResult> = ok.iter().map(|o| o.crlb_apu).collect();
    let alt: Option<Vec<CrlbResult>> = ok.iter().map(|o| o.crlb_apu_alt).collect();
    let mean_crlb_known = mean_crlb(&known);
    let mean_crlb_apu = mean_crlb(&apu);

    Ok(SweepRecord {
        value,
        num_anchors,
        rmse_lls: rm[0],
        rmse_wlls: rm[1],
        rmse_lls_apu: rm[2],
        rmse_wlls_apu: rm[3],
        sqrt_crlb_known: mean_crlb_known.total.sqrt(),
        sqrt_crlb_apu: mean_crlb_apu.total.sqrt(),
        sqrt_crlb_apu_alt: alt.map_or(f64::NAN, |a| mean_crlb(&a).total.sqrt()),
        rmse_stderr: se[1],
        stderr_all: [se[0], se[1], se[2], se[3]],
        trials: ok.len(),
        failed_trials: total - ok.len(),
        clamp_events: ok.iter().map(|o| o.record.clamp_events).sum(),
        fallbacks: ok.iter().map(|o| o.record.fallbacks).sum(),
        mean_crlb_known,
        mean_crlb_apu,
    })
}

/// Runs every trial of every sweep value. Parallel over trials on the current
/// rayon pool; aggregation order is fixed by trial index.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.values.len());
    for (point, &value) in spec.values.iter().enumerate() {
        let outcomes: Vec<Result<TrialOutcome>> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|trial| run_point_trial(spec, point, value, trial))
            .collect();
        if let Some(Err(e)) =
            outcomes.iter().find(|o| matches!(o, Err(Error::InvalidChannel(_) | Error::InvalidNoise(_))))
        {
            return Err(e.clone());
        }
        records.push(aggregate(value, spec.anchors_at(value), outcomes)?);
    }
    Ok(SweepResult { parameter: spec.swept_parameter, records })
}

/// Known-anchor and APU bounds of one sweep value, averaged over its scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRecord {
    pub value: f64,
    pub num_anchors: usize,
    pub known: CrlbResult,
    pub apu: CrlbResult,
}

/// Bounds only, on the scenarios [`run_sweep`] would draw. A scenario whose bound
/// is undefined fails the whole sweep rather than being skipped.
pub fn run_bound_sweep(spec: &SweepSpec) -> Result<Vec<BoundRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.values.len());
    for (point, &value) in spec.values.iter().enumerate() {
        let bounds: Vec<(CrlbResult, CrlbResult)> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|trial| {
                let s = sweep_scenario(spec, point, trial)?;
                let noise = spec.noise_for_scenario(value, &s);
                let known = crlb_known_anchors(s.source, &s.anchors_true, &noise, &spec.channel)?;
                let apu = crlb_uncertain_anchors(s.source, &s.anchors_true, &noise, &spec.channel, &spec.apu)?;
                Ok((known, apu))
            })
            .collect::<Result<_>>()?;
        let (known, apu): (Vec<CrlbResult>, Vec<CrlbResult>) = bounds.into_iter().unzip();
        out.push(BoundRecord {
            value,
            num_anchors: spec.anchors_at(value),
            known: mean_crlb(&known),
            apu: mean_crlb(&apu),
        });
    }
    Ok(out)
}

/// Outcome of trial `trial` at sweep point `point`, exactly as [`run_sweep`] computes it.
pub fn sweep_trial(spec: &SweepSpec, point: usize, trial: usize) -> Result<TrialOutcome> {
    spec.validate()?;
    let value = *spec.values.get(point).ok_or(Error::InvalidSweep("sweep point out of range"))?;
    run_point_trial(spec, point, value, trial)
}

/// Scenario of trial `trial` at sweep point `point`.
pub fn sweep_scenario(spec: &SweepSpec, point: usize, trial: usize) -> Result<Scenario> {
    let value = *spec.values.get(point).ok_or(Error::InvalidSweep("sweep point out of range"))?;
    let mut rng = trial_rng(spec.seed, point as u64, trial as u64);
    generate_scenario(spec.anchors_at(value), &spec.region, &spec.noise_at(value), &mut rng)
}

/// One scenario with the WLLS estimates from true and drifted anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSnapshot {
    pub scenario: Scenario,
    pub estimate_true_anchors: Vec3,
    pub estimate_drifted_anchors: Vec3,
}

pub fn scene_snapshot(
    num_anchors: usize,
    region: &Region,
    n: &NoiseModel,
    ch: &ChannelParams,
    seed: u64,
) -> Result<SceneSnapshot> {
    let mut rng = trial_rng(seed, u64::MAX, 0);
    let scenario = generate_scenario(num_anchors, region, n, &mut rng)?;
    let mut measurements = Vec::with_capacity(num_anchors);
    let mut noises = Vec::with_capacity(num_anchors);
    for &anchor in &scenario.anchors_true {
        let truth = true_measurement(scenario.source, anchor)?;
        let noise = n.with_measurement_weight(measurement_weight(ch, truth.d)?);
        let (m, _) = sample_measurement(&truth, &noise, &mut rng);
        noises.push(n.with_measurement_weight(measurement_weight(ch, m.d)?));
        measurements.push(m);
    }
    let known = wlls_estimate_per_anchor(&scenario.anchors_true, &measurements, &noises, false)?;
    let drifted = wlls_estimate_per_anchor(&scenario.anchors_drifted, &measurements, &noises, n.has_drift())?;
    Ok(SceneSnapshot { scenario, estimate_true_anchors: known.position, estimate_drifted_anchors: drifted.position })
}
