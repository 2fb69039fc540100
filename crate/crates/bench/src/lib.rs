//! Fixtures shared by the benchmarks.

use popsight_core::pipeline::{estimate_training_set, shareability_training_set};
use popsight_core::rng::splitmix64;
use popsight_core::synth::{
    generate, FeatureSpec, PopulationSpec, Schedule, ShareModel, SimConfig, SimWorld,
};
use popsight_core::{Dataset, EncounterMatrix};

/// A mid-sized world: five occasions, two features, moderate sharing.
pub fn world_config(seed: u64, photographers: usize) -> SimConfig {
    SimConfig {
        seed,
        occasions: (2014..2019).collect(),
        population: PopulationSpec::Dynamic {
            initial: 800,
            survival: 0.85,
            recruitment: 0.15,
        },
        n_photographers: Schedule::Constant(photographers),
        encounter_rate: 15.0,
        images_per_animal: 2.5,
        companion_prob: 0.1,
        empty_images: 1.0,
        features: vec![
            FeatureSpec {
                name: "quality".into(),
                mean: 0.0,
                animal_std: 1.0,
                collection_std: 0.5,
                noise_std: 1.0,
            },
            FeatureSpec {
                name: "clutter".into(),
                mean: 0.0,
                animal_std: 0.0,
                collection_std: 0.0,
                noise_std: 1.0,
            },
        ],
        share_model: ShareModel {
            intercept: -0.5,
            coefficients: [("quality".to_string(), 1.5)].into_iter().collect(),
        },
    }
}

pub fn world(seed: u64, photographers: usize) -> SimWorld {
    generate(&world_config(seed, photographers)).expect("bench world")
}

/// Image-level shareability data from a generated world.
pub fn image_dataset(seed: u64) -> Dataset {
    shareability_training_set(&world(seed, 20).records, None).expect("image dataset")
}

/// Collection-level share-fraction data from a generated world.
pub fn collection_dataset(seed: u64) -> Dataset {
    estimate_training_set(&world(seed, 60).records, None).expect("collection dataset")
}

/// Encounter matrix with independent cells of probability roughly `p`.
pub fn random_matrix(seed: u64, individuals: usize, occasions: usize, p: f64) -> EncounterMatrix {
    let threshold = (p * u64::MAX as f64) as u64;
    let mut state = seed;
    let histories = (0..individuals)
        .map(|i| {
            let row = (0..occasions)
                .map(|_| {
                    state = splitmix64(state);
                    state < threshold
                })
                .collect();
            (format!("a{i:05}"), row)
        })
        .collect();
    EncounterMatrix::from_histories((0..occasions as i32).collect(), histories).expect("matrix")
}
