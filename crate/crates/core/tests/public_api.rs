use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uowsn_core::crlb::{crlb_known_anchors, crlb_uncertain_anchors};
use uowsn_core::estimators::{lls_estimate, wlls_estimate};
use uowsn_core::experiments::{generate_scenario, run_sweep};
use uowsn_core::geometry::true_measurement;
use uowsn_core::uncertainty::sample_measurement;
use uowsn_core::{
    ApuOptions, ChannelParams, FimWeighting, NoiseModel, Region, SweepSpec, SweptParameter, Vec3, WaterType,
};

fn noise() -> NoiseModel {
    NoiseModel::new(2.0, 2f64.to_radians(), 1.5)
}

fn spec(seed: u64) -> SweepSpec {
    SweepSpec {
        swept_parameter: SweptParameter::AnchorDriftStd,
        values: vec![0.0, 1.5, 3.0],
        trials_per_point: 120,
        base_noise: noise(),
        channel: ChannelParams::default(),
        seed,
        num_anchors: 6,
        region: Region::cube(100.0),
        apu: ApuOptions::default(),
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| run_sweep(&spec(3)).unwrap());
    let many = pool(7).install(|| run_sweep(&spec(3)).unwrap());
    // The drift-only alternative is NaN at zero drift, so compare renderings.
    assert_eq!(format!("{one:?}"), format!("{many:?}"));
    assert_ne!(format!("{one:?}"), format!("{:?}", run_sweep(&spec(4)).unwrap()));
}

#[test]
fn zero_drift_point_matches_known_anchor_bound() {
    let r = run_sweep(&spec(5)).unwrap();
    let first = &r.records[0];
    assert_relative_eq!(first.sqrt_crlb_apu, first.sqrt_crlb_known, max_relative = 1e-12);
    assert_eq!(first.rmse_lls, first.rmse_lls_apu);
    assert!(r.records.windows(2).all(|w| w[1].sqrt_crlb_apu > w[0].sqrt_crlb_apu));
}

#[test]
fn turbid_water_loosens_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = generate_scenario(8, &Region::cube(100.0), &noise(), &mut rng).unwrap();
    let bound = |w| crlb_known_anchors(s.source, &s.anchors_true, &noise(), &ChannelParams::default().with_water(w));
    let (pure, turbid) = (bound(WaterType::PureOcean).unwrap(), bound(WaterType::TurbidHarbor).unwrap());
    // Constant-exponent attenuation scales every anchor's weight by the same factor.
    assert_relative_eq!(turbid.total / pure.total, (2.17f64 - 0.056).exp(), max_relative = 1e-12);
    let unit = ChannelParams { fim_weighting: FimWeighting::UnitPrefactor, ..Default::default() };
    let apu = crlb_uncertain_anchors(s.source, &s.anchors_true, &noise(), &unit, &ApuOptions::default()).unwrap();
    assert!(apu.total > crlb_known_anchors(s.source, &s.anchors_true, &noise(), &unit).unwrap().total);
}

fn point() -> impl Strategy<Value = Vec3> {
    (0.0..100.0f64, 0.0..100.0f64, 0.0..100.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn estimators_ignore_anchor_order(seed in 0u64..1_000, shift in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = generate_scenario(7, &Region::cube(100.0), &noise(), &mut rng).unwrap();
        let meas: Vec<_> = s
            .anchors_true
            .iter()
            .map(|&a| sample_measurement(&true_measurement(s.source, a).unwrap(), &noise(), &mut rng).0)
            .collect();
        let mut anchors = s.anchors_drifted.clone();
        let mut rotated = meas.clone();
        anchors.rotate_left(shift);
        rotated.rotate_left(shift);
        prop_assert_eq!(
            lls_estimate(&s.anchors_drifted, &meas).unwrap().position,
            lls_estimate(&anchors, &rotated).unwrap().position
        );
        prop_assert_eq!(
            wlls_estimate(&s.anchors_drifted, &meas, &noise(), true).unwrap().position,
            wlls_estimate(&anchors, &rotated, &noise(), true).unwrap().position
        );
    }

    #[test]
    fn bound_is_translation_invariant(source in point(), a in point(), b in point(), c in point(), t in point()) {
        let anchors = [a, b, c];
        prop_assume!(anchors.iter().all(|x| {
            let r = source - *x;
            r.x.hypot(r.y) > 1.0
        }));
        let ch = ChannelParams { fim_weighting: FimWeighting::UnitPrefactor, ..Default::default() };
        let moved: Vec<Vec3> = anchors.iter().map(|&x| x + t).collect();
        let (Ok(here), Ok(there)) =
            (crlb_known_anchors(source, &anchors, &noise(), &ch), crlb_known_anchors(source + t, &moved, &noise(), &ch))
        else {
            return Ok(());
        };
        prop_assert!((here.total / there.total - 1.0).abs() < 1e-8);
    }
}
