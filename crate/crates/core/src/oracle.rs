//! Independent numerical oracles for the closed forms in this crate.
//!
//! Nothing here reuses the analytic gradients, Fisher sums, covariance formulas or
//! the adjugate inverse: gradients come from central differences of the forward
//! model, Fisher information from sampled scores of the Gaussian likelihood,
//! covariances from sampled drift, and matrix inverses/eigenvalues from nalgebra.
//! [`run_all`] bundles them into the report printed by `uowsn validate`.

use std::fmt;
use std::time::Instant;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelParams, FimWeighting};
use crate::crlb::{
    crlb_from_fim, crlb_known_anchors, fim_known_anchors, fim_known_anchors_with, measurement_gradient, FisherMatrix,
    Formulation,
};
use crate::experiments::{generate_scenario, trial_rng, Region};
use crate::geometry::{measurement_from_relative, relative_coords, true_measurement, wrap_angle, MeasurementTriple};
use crate::linalg::{Mat3, Vec3};
use crate::uncertainty::{induced_noise, uncertainty_covariance, CovarianceVariant, NoiseModel};

fn to_na(m: &Mat3) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| m[(r, c)])
}

fn from_na(m: &Matrix3<f64>) -> Mat3 {
    let mut out = Mat3::ZERO;
    for r in 0..3 {
        for c in 0..3 {
            out[(r, c)] = m[(r, c)];
        }
    }
    out
}

/// Central-difference gradient of `true_measurement(source, anchor)` with respect to
/// the source position; row `a` is the derivative along axis `a`.
pub fn finite_difference_gradient(source: Vec3, anchor: Vec3, step: f64) -> Mat3 {
    let mut g = Mat3::ZERO;
    for axis in 0..3 {
        let mut e = [0.0; 3];
        e[axis] = step;
        let h = Vec3::from_array(e);
        let plus = true_measurement(source + h, anchor).expect("finite-difference probe hit the anchor");
        let minus = true_measurement(source - h, anchor).expect("finite-difference probe hit the anchor");
        g[(axis, 0)] = (plus.d - minus.d) / (2.0 * step);
        g[(axis, 1)] = wrap_angle(plus.phi - minus.phi) / (2.0 * step);
        g[(axis, 2)] = (plus.theta - minus.theta) / (2.0 * step);
    }
    g
}

/// Monte Carlo estimate of `E[s s^T]`, `s` the score of the independent-Gaussian
/// likelihood at the true source, with gradients from finite differences.
pub fn score_covariance_fim(
    source: Vec3,
    anchors: &[Vec3],
    n: &NoiseModel,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Mat3 {
    let sig = [n.sigma_d, n.sigma_phi, n.sigma_theta];
    let grads: Vec<Mat3> =
        anchors.iter().map(|&a| finite_difference_gradient(source, a, 1e-5 * source.distance_to(&a))).collect();
    let mut acc = Matrix3::<f64>::zeros();
    for _ in 0..samples {
        let mut score = nalgebra::Vector3::<f64>::zeros();
        for g in &grads {
            for (k, s) in sig.iter().enumerate() {
                // residual / sigma^2 with residual = sigma * e
                let e: f64 = rng.sample(StandardNormal);
                let scaled = e / s;
                for axis in 0..3 {
                    score[axis] += g[(axis, k)] * scaled;
                }
            }
        }
        acc += score * score.transpose();
    }
    from_na(&(acc / samples as f64))
}

/// Empirical covariance of the drift-induced measurement perturbation.
pub fn empirical_induced_covariance(
    r: &crate::geometry::RelativeCoords,
    m: &MeasurementTriple,
    n: &NoiseModel,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Mat3 {
    let mut mean = nalgebra::Vector3::<f64>::zeros();
    let mut outer = Matrix3::<f64>::zeros();
    for _ in 0..samples {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        let dz: f64 = rng.sample(StandardNormal);
        let delta = Vec3::new(dx * n.sigma_dx, dy * n.sigma_dy, dz * n.sigma_dz);
        let eta = induced_noise(r, m, delta).expect("oracle geometry must be regular");
        let v = nalgebra::Vector3::new(eta.eta_d, eta.eta_phi, eta.eta_theta);
        mean += v;
        outer += v * v.transpose();
    }
    let count = samples as f64;
    mean /= count;
    from_na(&(outer / count - mean * mean.transpose()))
}

/// Diagonal of the inverse by LU decomposition.
pub fn general_inverse_diagonal(j: &Mat3) -> Option<[f64; 3]> {
    let inv = to_na(j).lu().try_inverse()?;
    Some([inv[(0, 0)], inv[(1, 1)], inv[(2, 2)]])
}

/// PSD test by symmetric eigendecomposition.
pub fn is_psd(j: &Mat3, tol: f64) -> bool {
    let eig = to_na(j).symmetric_eigen().eigenvalues;
    let trace = j.trace().abs();
    eig.iter().all(|&e| e >= -tol * trace)
}

/// Random symmetric positive definite matrix `B B^T + 0.5 I`, `B` uniform in [-1, 1].
pub fn random_spd(rng: &mut ChaCha8Rng) -> Mat3 {
    let b = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    from_na(&(b * b.transpose() + Matrix3::identity() * 0.5))
}

fn random_point(rng: &mut ChaCha8Rng, side: f64) -> Vec3 {
    Vec3::new(rng.random_range(0.0..side), rng.random_range(0.0..side), rng.random_range(0.0..side))
}

fn unit_channel() -> ChannelParams {
    ChannelParams { fim_weighting: FimWeighting::UnitPrefactor, ..Default::default() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Expected mismatch with a published formula, confirmed.
    KnownDeviation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Largest deviation seen, in the units the check defines.
    pub deviation: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

impl OracleCheck {
    pub fn is_failure(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

impl fmt::Display for OracleCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::KnownDeviation => "KNOWN",
        };
        write!(
            f,
            "[{tag}] {:<28} deviation {:.3e} (tolerance {:.1e}, {:.2}s) {}",
            self.name, self.deviation, self.tolerance, self.seconds, self.detail
        )
    }
}

fn check(name: &'static str, deviation: f64, tolerance: f64, detail: String, started: Instant) -> OracleCheck {
    let status = if deviation <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
    OracleCheck { name, status, deviation, tolerance, detail, seconds: started.elapsed().as_secs_f64() }
}

/// Analytic gradient vs central differences on `count` random geometries.
/// Deviation is relative to the larger of the entry and its row norm.
pub fn gradient_check(count: usize, seed: u64) -> OracleCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let (s, a) = (random_point(&mut rng, 100.0), random_point(&mut rng, 100.0));
        let r = relative_coords(s, a);
        if r.d < 1.0 || r.d2 < 0.05 * r.d {
            continue;
        }
        done += 1;
        let analytic = measurement_gradient(&r, Formulation::Analytic).expect("regular geometry");
        let fd = finite_difference_gradient(s, a, 1e-5 * r.d);
        for axis in 0..3 {
            let row_norm = analytic.row(axis).norm();
            for k in 0..3 {
                let scale = analytic[(axis, k)].abs().max(row_norm);
                worst = worst.max((analytic[(axis, k)] - fd[(axis, k)]).abs() / scale);
            }
        }
    }
    check("gradient_finite_difference", worst, 1e-6, format!("{count} geometries"), started)
}

/// Known-anchor FIM vs sampled score covariance.
///
/// Deviation is the worst of the relative diagonal error over 0.05 and the
/// off-diagonal error over `0.05 sqrt(J_kk J_qq)`, so values below 1 pass.
pub fn score_fim_check(scenarios: usize, samples: usize, seed: u64) -> OracleCheck {
    let started = Instant::now();
    let n = NoiseModel::new(2.0, 2f64.to_radians(), 0.0);
    let mut worst_diag: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    for i in 0..scenarios {
        let mut rng = trial_rng(seed, 0, i as u64);
        let s = generate_scenario(8, &Region::cube(100.0), &n, &mut rng).expect("scenario");
        let analytic = fim_known_anchors(s.source, &s.anchors_true, &n, &unit_channel()).expect("fim").j;
        let sampled = score_covariance_fim(s.source, &s.anchors_true, &n, samples, &mut rng);
        for k in 0..3 {
            worst_diag = worst_diag.max((sampled[(k, k)] / analytic[(k, k)] - 1.0).abs());
            for q in (k + 1)..3 {
                let scale = (analytic[(k, k)] * analytic[(q, q)]).sqrt();
                worst_off = worst_off.max((sampled[(k, q)] - analytic[(k, q)]).abs() / scale);
            }
        }
    }
    let deviation = (worst_diag / 0.05).max(worst_off / 0.05);
    let detail = format!(
        "{scenarios} scenarios x {samples} samples; diag rel {worst_diag:.3e} (<= 5%), off-diag {worst_off:.3e} (<= 0.05)"
    );
    check("score_covariance_fim", deviation, 1.0, detail, started)
}

/// Outcome of the drift-covariance sampling oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceOracleOutcome {
    /// Worst relative error of the derived entries (magnitude above 1e-6).
    pub derived_worst: f64,
    /// Worst error of the published range/azimuth entry, in sampling standard errors.
    pub paper_cross_z: f64,
    pub geometries: usize,
}

/// Random regular geometry whose drift covariance has well-resolved correlations.
fn covariance_geometry(rng: &mut ChaCha8Rng) -> (crate::geometry::RelativeCoords, MeasurementTriple, NoiseModel) {
    loop {
        let r = relative_coords(random_point(rng, 100.0), random_point(rng, 100.0));
        if r.d < 1.0 || r.d2 < 0.1 * r.d {
            continue;
        }
        let m = measurement_from_relative(&r).expect("regular");
        let n = NoiseModel {
            sigma_dx: rng.random_range(0.5..2.5),
            sigma_dy: rng.random_range(0.5..2.5),
            sigma_dz: rng.random_range(0.5..2.5),
            ..Default::default()
        };
        let c = uncertainty_covariance(&r, &m, &n, CovarianceVariant::DerivedFormulas).expect("regular").c;
        // A sampled covariance entry has standard error about sqrt(C_kk C_qq / N);
        // weakly correlated pairs cannot be resolved to 2% with 1e6 draws.
        let resolvable = [(0, 1), (0, 2)].iter().all(|&(k, q)| {
            let v = c[(k, q)].abs();
            v <= 1e-6 || v >= 0.25 * (c[(k, k)] * c[(q, q)]).sqrt()
        });
        if resolvable {
            return (r, m, n);
        }
    }
}

pub fn covariance_oracle(geometries: usize, samples: usize, seed: u64) -> CovarianceOracleOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut derived_worst: f64 = 0.0;
    let mut paper_cross_z: f64 = 0.0;
    for _ in 0..geometries {
        let (r, m, n) = covariance_geometry(&mut rng);
        let derived = uncertainty_covariance(&r, &m, &n, CovarianceVariant::DerivedFormulas).expect("regular").c;
        let paper = uncertainty_covariance(&r, &m, &n, CovarianceVariant::PaperFormulas).expect("regular").c;
        let empirical = empirical_induced_covariance(&r, &m, &n, samples, &mut rng);
        for k in 0..3 {
            for q in k..3 {
                if derived[(k, q)].abs() > 1e-6 {
                    derived_worst = derived_worst.max((empirical[(k, q)] / derived[(k, q)] - 1.0).abs());
                }
            }
        }
        let se = (empirical[(0, 0)] * empirical[(1, 1)] / samples as f64).sqrt();
        paper_cross_z = paper_cross_z.max((paper[(0, 1)] - empirical[(0, 1)]).abs() / se);
    }
    CovarianceOracleOutcome { derived_worst, paper_cross_z, geometries }
}

fn covariance_checks(geometries: usize, samples: usize, seed: u64) -> [OracleCheck; 2] {
    let started = Instant::now();
    let out = covariance_oracle(geometries, samples, seed);
    let derived = check(
        "covariance_sampling_derived",
        out.derived_worst,
        0.02,
        format!("{geometries} geometries x {samples} drift samples"),
        started,
    );
    // Ten standard errors: far outside sampling noise.
    let detected = out.paper_cross_z > 10.0;
    let paper = OracleCheck {
        name: "covariance_sampling_paper",
        status: if detected { CheckStatus::KnownDeviation } else { CheckStatus::Fail },
        deviation: out.paper_cross_z,
        tolerance: 10.0,
        detail: if detected {
            "known paper discrepancy: published range/azimuth entry has +sin(phi) on the x-drift term".into()
        } else {
            "expected discrepancy in the published range/azimuth entry was not observed".into()
        },
        seconds: started.elapsed().as_secs_f64(),
    };
    [derived, paper]
}

/// Cofactor bounds vs LU-inverse diagonal on random SPD matrices.
pub fn cofactor_check(count: usize, seed: u64) -> OracleCheck {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let j = random_spd(&mut rng);
        let c = crlb_from_fim(&FisherMatrix { j }).expect("well-conditioned");
        let diag = general_inverse_diagonal(&j).expect("invertible");
        for (got, want) in [c.var_x, c.var_y, c.var_z].into_iter().zip(diag) {
            worst = worst.max((got / want - 1.0).abs());
        }
    }
    check("cofactor_vs_inverse", worst, 1e-10, format!("{count} random SPD matrices"), started)
}

/// Every analytic FIM is PSD; the unsquared range term must be caught.
///
/// The fault only bites where the source sits below the anchor and range
/// information dominates elevation information, so the injected-fault probe
/// draws single-anchor geometries of that kind and expects every one flagged.
pub fn psd_checks(count: usize, seed: u64) -> [OracleCheck; 2] {
    let started = Instant::now();
    let n = NoiseModel::new(2.0, 2f64.to_radians(), 0.0);
    let mut analytic_bad = 0;
    for i in 0..count {
        let mut rng = trial_rng(seed, 1, i as u64);
        let s = generate_scenario(8, &Region::cube(100.0), &n, &mut rng).expect("scenario");
        let j = fim_known_anchors(s.source, &s.anchors_true, &n, &unit_channel()).expect("fim").j;
        analytic_bad += !is_psd(&j, 1e-10) as usize;
    }
    let analytic = check("fim_psd", analytic_bad as f64, 0.0, format!("{analytic_bad}/{count} not PSD"), started);

    let started = Instant::now();
    let range_dominated = NoiseModel::new(0.01, 1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut missed = 0;
    let mut probed = 0;
    while probed < count {
        let (s, a) = (random_point(&mut rng, 100.0), random_point(&mut rng, 100.0));
        let r = relative_coords(s, a);
        if r.zt > -1.0 || r.d2 < 0.05 * r.d {
            continue;
        }
        probed += 1;
        let lit = fim_known_anchors_with(s, &[a], &range_dominated, &unit_channel(), Formulation::PaperLiteral)
            .expect("fim")
            .j;
        missed += is_psd(&lit, 1e-10) as usize;
    }
    let injected = check(
        "fim_psd_injected_fault",
        missed as f64,
        0.0,
        format!("unsquared range term: {}/{count} corrupted matrices flagged non-PSD", count - missed),
        started,
    );
    [analytic, injected]
}

/// Known-anchor bound never grows when anchors are appended.
/// Deviation is the worst relative increase.
pub fn monotonicity_check(sequences: usize, seed: u64) -> OracleCheck {
    let started = Instant::now();
    let n = NoiseModel::new(2.0, 2f64.to_radians(), 0.0);
    let mut worst: f64 = 0.0;
    for i in 0..sequences {
        let mut rng = trial_rng(seed, 2, i as u64);
        let s = generate_scenario(12, &Region::cube(100.0), &n, &mut rng).expect("scenario");
        let mut prev = f64::INFINITY;
        for k in 3..=s.anchors_true.len() {
            let total = crlb_known_anchors(s.source, &s.anchors_true[..k], &n, &unit_channel()).expect("bound").total;
            if prev.is_finite() {
                worst = worst.max((total - prev) / prev);
            }
            prev = total;
        }
    }
    check(
        "crlb_anchor_monotonicity",
        worst.max(0.0),
        1e-12,
        format!("{sequences} nested sequences, 3..12 anchors"),
        started,
    )
}

/// Full oracle suite at fixed seeds.
pub fn run_all() -> Vec<OracleCheck> {
    let mut out = vec![gradient_check(10_000, 101), score_fim_check(20, 100_000, 102)];
    out.extend(covariance_checks(10, 1_000_000, 103));
    out.push(cofactor_check(1_000, 104));
    out.extend(psd_checks(200, 105));
    out.push(monotonicity_check(100, 106));
    out
}
