//! Shared fixtures for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uowsn_core::experiments::generate_scenario;
use uowsn_core::{ApuOptions, ChannelParams, NoiseModel, Region, Scenario, SweepSpec, SweptParameter};

/// Paper noise: 2 m range, 2 degree angles, 1.5 m drift per axis.
pub fn paper_noise() -> NoiseModel {
    NoiseModel::new(2.0, 2f64.to_radians(), 1.5)
}

/// Fixed scenario in the 100 m cube.
pub fn scenario(num_anchors: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_scenario(num_anchors, &Region::cube(100.0), &paper_noise(), &mut rng).expect("scenario")
}

/// Small anchor-count sweep for harness throughput.
pub fn small_sweep(trials: usize) -> SweepSpec {
    SweepSpec {
        swept_parameter: SweptParameter::NumAnchors,
        values: vec![4.0, 8.0],
        trials_per_point: trials,
        base_noise: paper_noise(),
        channel: ChannelParams::default(),
        seed: 1,
        num_anchors: 8,
        region: Region::cube(100.0),
        apu: ApuOptions::default(),
    }
}
