//! Linear and weighted linear least-squares position estimators.
//!
//! A joint range/azimuth/elevation observation pins the source down from a single
//! anchor, so each anchor yields a full 3D fix `anchor + d * u(phi, theta)`. The
//! stacked system `position = fix_j + e_j` is linear with an identity design, which
//! makes LLS the plain mean of the fixes and WLLS the information-weighted mean.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{spherical_fix, MeasurementTriple};
use crate::linalg::{Mat3, Vec3, MAX_CONDITION};
use crate::uncertainty::NoiseModel;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub position: Vec3,
    pub per_anchor_fixes: Vec<Vec3>,
    /// Weight applied to each fix; empty for LLS.
    pub weights_used: Vec<Mat3>,
    /// Set when at least one anchor's fix covariance was ill-conditioned.
    pub condition_flag: bool,
    /// Anchors whose weight fell back to an isotropic one.
    pub fallbacks: usize,
}

fn check_inputs(anchors: &[Vec3], measurements: &[MeasurementTriple]) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::EmptyInput("at least one anchor is required"));
    }
    if anchors.len() != measurements.len() {
        return Err(Error::LengthMismatch { anchors: anchors.len(), measurements: measurements.len() });
    }
    Ok(())
}

/// Anchor indices in a canonical order, so sums do not depend on input order.
fn canonical_order(anchors: &[Vec3], measurements: &[MeasurementTriple]) -> Vec<usize> {
    let key = |i: usize| {
        let (a, m) = (anchors[i], measurements[i]);
        [a.x, a.y, a.z, m.d, m.phi, m.theta]
    };
    let mut idx: Vec<usize> = (0..anchors.len()).collect();
    idx.sort_by(|&i, &j| {
        key(i)
            .iter()
            .zip(key(j).iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    idx
}

fn mean_of(points: impl Iterator<Item = Vec3>) -> Vec3 {
    let (sum, count) = points.fold((Vec3::ZERO, 0usize), |(s, c), p| (s + p, c + 1));
    sum * (1.0 / count as f64)
}

/// Unweighted mean of the per-anchor spherical fixes.
pub fn lls_estimate(anchors: &[Vec3], measurements: &[MeasurementTriple]) -> Result<EstimateResult> {
    check_inputs(anchors, measurements)?;
    let fixes: Vec<Vec3> = anchors.iter().zip(measurements).map(|(a, m)| spherical_fix(*a, m)).collect();
    let order = canonical_order(anchors, measurements);
    let position = mean_of(order.iter().map(|&i| fixes[i]));
    Ok(EstimateResult {
        position,
        per_anchor_fixes: fixes,
        weights_used: Vec::new(),
        condition_flag: false,
        fallbacks: 0,
    })
}

/// Covariance of one spherical fix by first-order propagation of the measurement
/// noise, optionally plus the anchor drift covariance.
pub fn fix_covariance(
    anchor: Vec3,
    m: &MeasurementTriple,
    n: &NoiseModel,
    use_anchor_uncertainty: bool,
) -> Result<Mat3> {
    anchor.ensure_finite("anchor position")?;
    if !(m.d.is_finite() && m.d >= 0.0) || !m.phi.is_finite() || !m.theta.is_finite() {
        return Err(Error::DegenerateGeometry("measurement outside its domain"));
    }
    n.validate()?;
    let (st, ct) = m.theta.sin_cos();
    let (sp, cp) = m.phi.sin_cos();
    let jac = Mat3::from_cols(
        Vec3::new(st * cp, st * sp, ct),
        Vec3::new(-st * sp, st * cp, 0.0) * m.d,
        Vec3::new(ct * cp, ct * sp, -st) * m.d,
    );
    let mut cov = Mat3::congruence(&jac.transpose(), &n.measurement_covariance());
    if use_anchor_uncertainty {
        cov += n.drift_covariance();
    }
    cov.symmetrize_upper();
    Ok(cov)
}

enum Weight {
    Full(Mat3),
    Fallback(Mat3),
    /// Zero covariance: the fix is exact.
    Exact,
}

fn weight_from_covariance(cov: &Mat3) -> Weight {
    if cov.condition_number() <= MAX_CONDITION {
        if let Some(inv) = cov.try_inverse() {
            return Weight::Full(inv);
        }
    }
    let tr = cov.trace();
    if tr > 0.0 && tr.is_finite() {
        Weight::Fallback(Mat3::IDENTITY.scale(3.0 / tr))
    } else {
        Weight::Exact
    }
}

/// `(sum W_j)^-1 sum W_j p_j` in the given summation order.
pub fn weighted_fix_mean(fixes: &[Vec3], weights: &[Mat3]) -> Result<Vec3> {
    if fixes.is_empty() {
        return Err(Error::EmptyInput("no fixes to combine"));
    }
    if fixes.len() != weights.len() {
        return Err(Error::LengthMismatch { anchors: weights.len(), measurements: fixes.len() });
    }
    if weights.iter().all(|w| *w == weights[0]) {
        return Ok(mean_of(fixes.iter().copied()));
    }
    let mut info = Mat3::ZERO;
    let mut rhs = Vec3::ZERO;
    for (p, w) in fixes.iter().zip(weights) {
        info += *w;
        rhs += w.mul_vec(*p);
    }
    let inv = info.try_inverse().ok_or(Error::AllWeightsSingular)?;
    Ok(inv.mul_vec(rhs))
}

/// WLLS with one noise model shared by all anchors.
pub fn wlls_estimate(
    anchors: &[Vec3],
    measurements: &[MeasurementTriple],
    n: &NoiseModel,
    use_anchor_uncertainty: bool,
) -> Result<EstimateResult> {
    check_inputs(anchors, measurements)?;
    let noises = vec![*n; anchors.len()];
    wlls_estimate_per_anchor(anchors, measurements, &noises, use_anchor_uncertainty)
}

/// WLLS where each anchor has its own (e.g. channel-scaled) noise model.
pub fn wlls_estimate_per_anchor(
    anchors: &[Vec3],
    measurements: &[MeasurementTriple],
    noises: &[NoiseModel],
    use_anchor_uncertainty: bool,
) -> Result<EstimateResult> {
    check_inputs(anchors, measurements)?;
    if noises.len() != anchors.len() {
        return Err(Error::LengthMismatch { anchors: anchors.len(), measurements: noises.len() });
    }
    let fixes: Vec<Vec3> = anchors.iter().zip(measurements).map(|(a, m)| spherical_fix(*a, m)).collect();
    let mut weights = Vec::with_capacity(anchors.len());
    for i in 0..anchors.len() {
        let cov = fix_covariance(anchors[i], &measurements[i], &noises[i], use_anchor_uncertainty)?;
        weights.push(weight_from_covariance(&cov));
    }

    let fallbacks = weights.iter().filter(|w| matches!(w, Weight::Fallback(_))).count();
    let any_exact = weights.iter().any(|w| matches!(w, Weight::Exact));
    let used: Vec<Mat3> = weights
        .iter()
        .map(|w| match (w, any_exact) {
            (Weight::Exact, _) => Mat3::IDENTITY,
            (_, true) => Mat3::ZERO,
            (Weight::Full(m) | Weight::Fallback(m), false) => *m,
        })
        .collect();

    let order: Vec<usize> = canonical_order(anchors, measurements)
        .into_iter()
        .filter(|&i| !any_exact || matches!(weights[i], Weight::Exact))
        .collect();
    let ordered_fixes: Vec<Vec3> = order.iter().map(|&i| fixes[i]).collect();
    let ordered_weights: Vec<Mat3> = order.iter().map(|&i| used[i]).collect();
    let position = weighted_fix_mean(&ordered_fixes, &ordered_weights)?;

    Ok(EstimateResult {
        position,
        per_anchor_fixes: fixes,
        weights_used: used,
        condition_flag: fallbacks > 0 || any_exact,
        fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::true_measurement;
    use crate::uncertainty::sample_measurement;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))
    }

    fn noiseless(source: Vec3, anchors: &[Vec3]) -> Vec<MeasurementTriple> {
        anchors.iter().map(|&a| true_measurement(source, a).unwrap()).collect()
    }

    #[test]
    fn lls_mean_of_two_fixes() {
        // Straight-up sight lines put the fixes at (1,1,1) and (3,3,3).
        let anchors = [Vec3::new(1.0, 1.0, 0.0), Vec3::new(3.0, 3.0, 0.0)];
        let meas = [MeasurementTriple::new(1.0, 0.0, 0.0), MeasurementTriple::new(3.0, 0.0, 0.0)];
        let est = lls_estimate(&anchors, &meas).unwrap();
        assert_eq!(est.position, Vec3::new(2.0, 2.0, 2.0));
        assert_eq!(est.per_anchor_fixes.len(), 2);
    }

    #[test]
    fn weighted_mean_arithmetic() {
        let p =
            weighted_fix_mean(&[Vec3::ZERO, Vec3::new(4.0, 4.0, 4.0)], &[Mat3::IDENTITY, Mat3::IDENTITY.scale(3.0)])
                .unwrap();
        assert_relative_eq!(p.x, 3.0, max_relative = 1e-15);
        assert_relative_eq!(p.y, 3.0, max_relative = 1e-15);
        assert_relative_eq!(p.z, 3.0, max_relative = 1e-15);
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for count in 1..=8 {
            let source = random_point(&mut rng);
            let anchors: Vec<Vec3> = (0..count).map(|_| random_point(&mut rng)).collect();
            let meas = noiseless(source, &anchors);
            let lls = lls_estimate(&anchors, &meas).unwrap();
            assert!((lls.position - source).norm() < 1e-9);
            for n in [NoiseModel::default(), NoiseModel::new(2.0, 0.035, 0.0)] {
                let w = wlls_estimate(&anchors, &meas, &n, false).unwrap();
                assert!((w.position - source).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn equal_weights_reproduce_lls_exactly() {
        let anchors = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0), Vec3::new(0.0, 10.0, 0.0)];
        let meas = [
            MeasurementTriple::new(5.0, 0.3, 1.0),
            MeasurementTriple::new(5.0, 0.3, 1.0),
            MeasurementTriple::new(5.0, 0.3, 1.0),
        ];
        let n = NoiseModel::new(1.0, 0.05, 0.0);
        let lls = lls_estimate(&anchors, &meas).unwrap();
        let wlls = wlls_estimate(&anchors, &meas, &n, false).unwrap();
        assert_eq!(lls.position, wlls.position);
    }

    #[test]
    fn fix_covariance_examples() {
        let m = MeasurementTriple::new(10.0, 0.0, PI / 2.0);
        let n = NoiseModel::new(1.0, 0.0, 0.0);
        let c = fix_covariance(Vec3::ZERO, &m, &n, false).unwrap();
        assert_relative_eq!(c[(0, 0)], 1.0, max_relative = 1e-15);
        for (k, q) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert!(c[(k, q)].abs() < 1e-15, "({k},{q}) = {}", c[(k, q)]);
        }

        let n = NoiseModel::new(0.0, 0.0, 1.0);
        let c = fix_covariance(Vec3::new(3.0, 1.0, 2.0), &MeasurementTriple::new(7.0, 1.0, 2.0), &n, true).unwrap();
        assert_eq!(c, Mat3::IDENTITY);
    }

    #[test]
    fn fix_covariance_matches_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let anchor = Vec3::new(5.0, -3.0, 12.0);
        let m = MeasurementTriple::new(42.0, 2.1, 1.2);
        let n = NoiseModel::new(0.01, 0.01, 0.01);
        let cov = fix_covariance(anchor, &m, &n, false).unwrap();
        let count = 1_000_000;
        let mut sum = Vec3::ZERO;
        let mut outer = Mat3::ZERO;
        for _ in 0..count {
            let (s, _) = sample_measurement(&m, &n, &mut rng);
            let p = spherical_fix(anchor, &s);
            sum += p;
            for k in 0..3 {
                for q in 0..3 {
                    outer[(k, q)] += p[k] * p[q];
                }
            }
        }
        let mean = sum * (1.0 / count as f64);
        for k in 0..3 {
            let emp = outer[(k, k)] / count as f64 - mean[k] * mean[k];
            assert!((emp / cov[(k, k)] - 1.0).abs() <= 0.03, "axis {k}: {emp} vs {}", cov[(k, k)]);
        }
    }

    #[test]
    fn singular_fix_covariance_falls_back() {
        // Range-only noise gives a rank-one covariance.
        let source = Vec3::new(30.0, 40.0, 50.0);
        let anchors = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(90.0, 10.0, 20.0)];
        let meas = noiseless(source, &anchors);
        let est = wlls_estimate(&anchors, &meas, &NoiseModel::new(1.0, 0.0, 0.0), false).unwrap();
        assert!(est.condition_flag);
        assert_eq!(est.fallbacks, 2);
        assert!((est.position - source).norm() < 1e-9);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(lls_estimate(&[], &[]), Err(Error::EmptyInput(_))));
        assert!(matches!(lls_estimate(&[Vec3::ZERO], &[]), Err(Error::LengthMismatch { anchors: 1, measurements: 0 })));
        assert!(matches!(wlls_estimate(&[], &[], &NoiseModel::default(), false), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let source = random_point(&mut rng);
        let anchors: Vec<Vec3> = (0..7).map(|_| random_point(&mut rng)).collect();
        let n = NoiseModel::new(2.0, 0.035, 1.5);
        let meas: Vec<MeasurementTriple> =
            noiseless(source, &anchors).iter().map(|m| sample_measurement(m, &n, &mut rng).0).collect();
        let lls = lls_estimate(&anchors, &meas).unwrap();
        let wlls = wlls_estimate(&anchors, &meas, &n, true).unwrap();
        let mut perm: Vec<usize> = (0..7).collect();
        perm.reverse();
        perm.swap(1, 4);
        let pa: Vec<Vec3> = perm.iter().map(|&i| anchors[i]).collect();
        let pm: Vec<MeasurementTriple> = perm.iter().map(|&i| meas[i]).collect();
        assert_eq!(lls_estimate(&pa, &pm).unwrap().position, lls.position);
        assert_eq!(wlls_estimate(&pa, &pm, &n, true).unwrap().position, wlls.position);
    }

    #[test]
    fn translation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let source = random_point(&mut rng);
        let anchors: Vec<Vec3> = (0..6).map(|_| random_point(&mut rng)).collect();
        let n = NoiseModel::new(2.0, 0.035, 0.0);
        let meas: Vec<MeasurementTriple> =
            noiseless(source, &anchors).iter().map(|m| sample_measurement(m, &n, &mut rng).0).collect();
        let t = Vec3::new(12.5, -300.0, 7.0);
        let moved: Vec<Vec3> = anchors.iter().map(|&a| a + t).collect();
        let a = lls_estimate(&anchors, &meas).unwrap().position;
        let b = lls_estimate(&moved, &meas).unwrap().position;
        assert!((b - a - t).norm() < 1e-9);
        let a = wlls_estimate(&anchors, &meas, &n, false).unwrap().position;
        let b = wlls_estimate(&moved, &meas, &n, false).unwrap().position;
        assert!((b - a - t).norm() < 1e-9);
    }
}
