#![allow(dead_code)]

use dynsample::dataset::Dataset;
use dynsample::models::FnModel;
use dynsample::sampler::{run_campaign, CampaignConfig};
use dynsample::signal::{ControlBounds, FaprbsSegment};

/// First-order lag per channel: y = x, dx = u - x.
pub fn toy_model(n: usize) -> FnModel {
    let bounds = ControlBounds::new(vec![0.0; n], vec![1.0; n], vec![0.1; n]).unwrap();
    FnModel::new(
        format!("toy{n}"),
        vec![0.0; n],
        n,
        bounds,
        |x, u, _t, dx| {
            for i in 0..x.len() {
                dx[i] = u[i] - x[i];
            }
        },
        |x, _u, y| y.copy_from_slice(x),
    )
}

/// Short signals so a whole campaign takes milliseconds.
pub fn small_config(seed: u64) -> CampaignConfig {
    CampaignConfig {
        n_hss: 4,
        max_sims_phase2: 4,
        max_sims_phase3: 4,
        max_epochs: 2,
        rng_seed: seed,
        dt: 0.1,
        segments: vec![FaprbsSegment::new(0.5, 6), FaprbsSegment::new(1.0, 2)],
        ic_mc_samples: 2000,
        ..Default::default()
    }
}

pub fn toy_dataset(n: usize, seed: u64) -> Dataset {
    run_campaign(&small_config(seed), &toy_model(n)).unwrap()
}
