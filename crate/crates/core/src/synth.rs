//! Synthetic worlds with known truth: an open population, photographers who
//! photograph random animals, and a logistic sharing rule over image
//! features.
//!
//! Every animal carries a persistent offset per feature (`animal_std`), so
//! feature-dependent sharing makes some animals consistently more likely to
//! be posted than others.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::compute_share_label;
use crate::data::{group_collections, write_jsonl, ImageRecord, Occasion};
use crate::models::linear::sigmoid;
use crate::rng::{stream_rng, Rng};

const STREAM_POPULATION: u64 = 1;
const STREAM_ENCOUNTERS: u64 = 2;
const STREAM_FEATURES: u64 = 3;
const STREAM_SHARING: u64 = 4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How the true population evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PopulationSpec {
    /// Bernoulli survival per animal plus Poisson(`recruitment`·N) recruits.
    Dynamic {
        initial: usize,
        survival: f64,
        recruitment: f64,
    },
    /// Fixed sizes per occasion. Survivors are drawn with `survival`, then
    /// trimmed at random or topped up with recruits to hit each size.
    Trajectory { sizes: Vec<usize>, survival: f64 },
}

/// A constant or one value per occasion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(usize),
    PerOccasion(Vec<usize>),
}

impl Schedule {
    fn at(&self, t: usize) -> usize {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PerOccasion(v) => v[t],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(default)]
    pub mean: f64,
    /// Std of the persistent per-animal offset.
    #[serde(default)]
    pub animal_std: f64,
    /// Std of a per-collection offset shared by all of a photographer's
    /// images (camera, habits).
    #[serde(default)]
    pub collection_std: f64,
    /// Std of the per-image noise.
    #[serde(default)]
    pub noise_std: f64,
}

/// P(share | image) = σ(intercept + Σ coefficient·feature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareModel {
    pub intercept: f64,
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub occasions: Vec<Occasion>,
    pub population: PopulationSpec,
    pub n_photographers: Schedule,
    /// Poisson mean of distinct animals per photographer.
    pub encounter_rate: f64,
    /// Poisson mean (≥ 1) of images per photographed animal.
    pub images_per_animal: f64,
    /// Chance that an image also shows another animal from the same set.
    #[serde(default)]
    pub companion_prob: f64,
    /// Poisson mean of animal-free images per collection.
    #[serde(default)]
    pub empty_images: f64,
    #[serde(default)]
    pub features: Vec<FeatureSpec>,
    pub share_model: ShareModel,
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(SimError::Config(message()))
    }
}

fn is_probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let config: SimConfig = serde_json::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let t_count = self.occasions.len();
        check(t_count >= 1, || "at least one occasion is required".into())?;
        check(self.occasions.windows(2).all(|w| w[0] < w[1]), || {
            "occasions must be strictly increasing".into()
        })?;
        match &self.population {
            PopulationSpec::Dynamic {
                survival,
                recruitment,
                ..
            } => {
                check(is_probability(*survival), || format!("survival {survival} is not a probability"))?;
                check(recruitment.is_finite() && *recruitment >= 0.0, || {
                    format!("recruitment {recruitment} must be a non-negative rate")
                })?;
            }
            PopulationSpec::Trajectory { sizes, survival } => {
                check(is_probability(*survival), || format!("survival {survival} is not a probability"))?;
                check(sizes.len() == t_count, || {
                    format!("trajectory has {} sizes for {t_count} occasions", sizes.len())
                })?;
            }
        }
        if let Schedule::PerOccasion(v) = &self.n_photographers {
            check(v.len() == t_count, || {
                format!("n_photographers has {} entries for {t_count} occasions", v.len())
            })?;
        }
        check(self.encounter_rate.is_finite() && self.encounter_rate >= 0.0, || {
            "encounter_rate must be a non-negative rate".into()
        })?;
        check(self.images_per_animal.is_finite() && self.images_per_animal >= 1.0, || {
            "images_per_animal must be at least 1".into()
        })?;
        check(is_probability(self.companion_prob), || "companion_prob is not a probability".into())?;
        check(self.empty_images.is_finite() && self.empty_images >= 0.0, || {
            "empty_images must be a non-negative rate".into()
        })?;
        let mut names = BTreeSet::new();
        for f in &self.features {
            check(names.insert(f.name.as_str()), || format!("duplicate feature '{}'", f.name))?;
            check(f.animal_std >= 0.0 && f.collection_std >= 0.0 && f.noise_std >= 0.0, || {
                format!("feature '{}' has a negative std", f.name)
            })?;
        }
        for name in self.share_model.coefficients.keys() {
            check(names.contains(name.as_str()), || {
                format!("share_model refers to unknown feature '{name}'")
            })?;
        }
        Ok(())
    }
}

/// Ground truth for one SD-card set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionTruth {
    pub collection_id: String,
    pub photographer_id: String,
    pub occasion: Occasion,
    /// Distinct animals photographed (N_i).
    pub n_photographed: usize,
    /// Distinct animals in shared images.
    pub n_shared: usize,
    /// True share fraction; `None` for a set without animals.
    pub s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub occasions: Vec<Occasion>,
    pub population: Vec<usize>,
    pub collections: Vec<CollectionTruth>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimWorld {
    pub config: SimConfig,
    /// Every photograph taken, labelled with `shared`.
    pub records: Vec<ImageRecord>,
    pub truth: Truth,
}

impl SimWorld {
    /// The posted images with labels stripped, as a social-media scrape
    /// would see them.
    pub fn shared_records(&self) -> Vec<ImageRecord> {
        self.records
            .iter()
            .filter(|r| r.shared == Some(true))
            .map(|r| ImageRecord {
                shared: None,
                ..r.clone()
            })
            .collect()
    }

    /// Write `sd_cards.jsonl`, `shared.jsonl`, `truth.json`, `census.csv`
    /// and `sim_config.json` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<(), SimError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SimError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io(&path))
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &self.records).expect("vec write");
        write("sd_cards.jsonl", &buf)?;
        buf.clear();
        write_jsonl(&mut buf, &self.shared_records()).expect("vec write");
        write("shared.jsonl", &buf)?;
        write("truth.json", serde_json::to_string_pretty(&self.truth)?.as_bytes())?;
        buf.clear();
        writeln!(buf, "year,official").expect("vec write");
        for (occ, n) in self.truth.occasions.iter().zip(&self.truth.population) {
            writeln!(buf, "{occ},{n}").expect("vec write");
        }
        write("census.csv", &buf)?;
        write("sim_config.json", serde_json::to_string_pretty(&self.config)?.as_bytes())?;
        Ok(())
    }
}

fn poisson(rng: &mut Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Alive animal indices per occasion; animals are numbered in birth order.
fn simulate_population(config: &SimConfig, rng: &mut Rng) -> (Vec<Vec<usize>>, usize) {
    let t_count = config.occasions.len();
    let mut next_id = 0usize;
    let mut born = |count: usize| {
        let ids: Vec<usize> = (next_id..next_id + count).collect();
        next_id += count;
        ids
    };
    let mut alive_per_occasion = Vec::with_capacity(t_count);
    match &config.population {
        PopulationSpec::Dynamic {
            initial,
            survival,
            recruitment,
        } => {
            let mut alive = born(*initial);
            alive_per_occasion.push(alive.clone());
            for _ in 1..t_count {
                let n = alive.len();
                alive.retain(|_| rng.random_bool(*survival));
                let recruits = poisson(rng, recruitment * n as f64);
                alive.extend(born(recruits));
                alive_per_occasion.push(alive.clone());
            }
        }
        PopulationSpec::Trajectory { sizes, survival } => {
            let mut alive = born(sizes[0]);
            alive_per_occasion.push(alive.clone());
            for &target in &sizes[1..] {
                alive.retain(|_| rng.random_bool(*survival));
                if alive.len() > target {
                    let mut keep: Vec<usize> = sample(rng, alive.len(), target).into_vec();
                    keep.sort_unstable();
                    alive = keep.into_iter().map(|i| alive[i]).collect();
                } else {
                    let recruits = target - alive.len();
                    alive.extend(born(recruits));
                }
                alive_per_occasion.push(alive.clone());
            }
        }
    }
    (alive_per_occasion, next_id)
}

fn animal_label(index: usize) -> String {
    format!("a{:05}", index + 1)
}

/// Generate a world. Fully determined by the config (including its seed).
pub fn generate(config: &SimConfig) -> Result<SimWorld, SimError> {
    config.validate()?;
    let mut pop_rng = stream_rng(config.seed, STREAM_POPULATION);
    let mut enc_rng = stream_rng(config.seed, STREAM_ENCOUNTERS);
    let mut feat_rng = stream_rng(config.seed, STREAM_FEATURES);
    let mut share_rng = stream_rng(config.seed, STREAM_SHARING);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let (alive_per_occasion, n_animals) = simulate_population(config, &mut pop_rng);
    // Persistent per-animal feature offsets.
    let offsets: Vec<Vec<f64>> = (0..n_animals)
        .map(|_| {
            config
                .features
                .iter()
                .map(|f| f.animal_std * normal.sample(&mut feat_rng))
                .collect()
        })
        .collect();

    let mut warnings = Vec::new();
    let mut records = Vec::new();
    let mut truths = Vec::new();
    for (t, &occasion) in config.occasions.iter().enumerate() {
        let alive = &alive_per_occasion[t];
        for j in 0..config.n_photographers.at(t) {
            let collection_id = format!("c{occasion}_{:03}", j + 1);
            let photographer_id = format!("p{:03}", j + 1);
            let mut count = poisson(&mut enc_rng, config.encounter_rate);
            if count > alive.len() {
                warnings.push(format!(
                    "{collection_id}: {count} encounters capped at population {}",
                    alive.len()
                ));
                count = alive.len();
            }
            let mut seen: Vec<usize> = sample(&mut enc_rng, alive.len(), count)
                .into_iter()
                .map(|i| alive[i])
                .collect();
            seen.sort_unstable();
            // Animal sets per image, before timestamps are assigned.
            let mut shots: Vec<Vec<usize>> = Vec::new();
            for &animal in &seen {
                let n_images = 1 + poisson(&mut enc_rng, config.images_per_animal - 1.0);
                for _ in 0..n_images {
                    let mut in_frame = vec![animal];
                    if seen.len() > 1 && enc_rng.random_bool(config.companion_prob) {
                        let other = loop {
                            let pick = seen[enc_rng.random_range(0..seen.len())];
                            if pick != animal {
                                break pick;
                            }
                        };
                        in_frame.push(other);
                    }
                    shots.push(in_frame);
                }
            }
            for _ in 0..poisson(&mut enc_rng, config.empty_images) {
                shots.push(Vec::new());
            }
            crate::rng::shuffle(&mut enc_rng, &mut shots);
            // Only features with collection-level variation draw an offset.
            let style: Vec<f64> = config
                .features
                .iter()
                .map(|f| {
                    if f.collection_std > 0.0 {
                        f.collection_std * normal.sample(&mut feat_rng)
                    } else {
                        0.0
                    }
                })
                .collect();
            let base_time = occasion as i64 * 1_000_000;
            let mut clock = 0i64;
            let mut collection_records = Vec::with_capacity(shots.len());
            for (k, frame) in shots.iter().enumerate() {
                clock += 1 + poisson(&mut enc_rng, 30.0) as i64;
                let raw_features: BTreeMap<String, f64> = config
                    .features
                    .iter()
                    .enumerate()
                    .map(|(f, spec)| {
                        let animal_effect = if frame.is_empty() {
                            0.0
                        } else {
                            frame.iter().map(|&a| offsets[a][f]).sum::<f64>() / frame.len() as f64
                        };
                        let noise = spec.noise_std * normal.sample(&mut feat_rng);
                        (spec.name.clone(), spec.mean + style[f] + animal_effect + noise)
                    })
                    .collect();
                let logit = config.share_model.intercept
                    + config
                        .share_model
                        .coefficients
                        .iter()
                        .map(|(name, c)| c * raw_features[name])
                        .sum::<f64>();
                let shared = share_rng.random_bool(sigmoid(logit));
                collection_records.push(ImageRecord {
                    image_id: format!("{collection_id}_i{:04}", k + 1),
                    collection_id: collection_id.clone(),
                    photographer_id: photographer_id.clone(),
                    occasion,
                    timestamp: Some(base_time + clock),
                    individual_ids: frame.iter().map(|&a| animal_label(a)).collect(),
                    raw_features,
                    shared: Some(shared),
                });
            }
            if collection_records.is_empty() {
                continue;
            }
            let n_shared: BTreeSet<&String> = collection_records
                .iter()
                .filter(|r| r.shared == Some(true))
                .flat_map(|r| r.individual_ids.iter())
                .collect();
            truths.push(CollectionTruth {
                collection_id: collection_id.clone(),
                photographer_id,
                occasion,
                n_photographed: seen.len(),
                n_shared: n_shared.len(),
                s: (!seen.is_empty()).then(|| n_shared.len() as f64 / seen.len() as f64),
            });
            records.extend(collection_records);
        }
    }
    Ok(SimWorld {
        config: config.clone(),
        records,
        truth: Truth {
            occasions: config.occasions.clone(),
            population: alive_per_occasion.iter().map(Vec::len).collect(),
            collections: truths,
            warnings,
        },
    })
}

/// Share fraction of every SD set, recomputed from the labelled records.
pub fn true_share_fractions(world: &SimWorld) -> BTreeMap<String, Option<f64>> {
    let collections = group_collections(&world.records).expect("generated records are consistent");
    collections
        .iter()
        .map(|c| {
            let shared: Vec<ImageRecord> = c
                .images
                .iter()
                .filter(|img| img.shared == Some(true))
                .cloned()
                .collect();
            let s = compute_share_label(c, &shared).expect("subset by construction");
            (c.collection_id.clone(), s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn config(seed: u64) -> SimConfig {
        SimConfig {
            seed,
            occasions: vec![2011, 2012, 2013],
            population: PopulationSpec::Dynamic {
                initial: 200,
                survival: 0.8,
                recruitment: 0.2,
            },
            n_photographers: Schedule::Constant(6),
            encounter_rate: 15.0,
            images_per_animal: 2.0,
            companion_prob: 0.1,
            empty_images: 1.0,
            features: vec![FeatureSpec {
                name: "quality".into(),
                mean: 0.0,
                animal_std: 1.0,
                collection_std: 0.0,
                noise_std: 0.5,
            }],
            share_model: ShareModel {
                intercept: 0.0,
                coefficients: [("quality".to_string(), 1.5)].into_iter().collect(),
            },
        }
    }

    #[test]
    fn same_seed_same_world() {
        let a = generate(&config(7)).unwrap();
        let b = generate(&config(7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records, generate(&config(8)).unwrap().records);
    }

    #[test]
    fn saturated_sharing() {
        let mut c = config(3);
        c.share_model = ShareModel {
            intercept: 50.0,
            coefficients: BTreeMap::new(),
        };
        let world = generate(&c).unwrap();
        assert!(world.records.iter().all(|r| r.shared == Some(true)));
        for t in &world.truth.collections {
            assert_eq!(t.s, Some(1.0));
        }
    }

    #[test]
    fn closed_population_stays_fixed() {
        let mut c = config(4);
        c.population = PopulationSpec::Dynamic {
            initial: 150,
            survival: 1.0,
            recruitment: 0.0,
        };
        assert_eq!(generate(&c).unwrap().truth.population, vec![150, 150, 150]);
    }

    #[test]
    fn trajectory_sizes_are_hit() {
        let mut c = config(5);
        c.population = PopulationSpec::Trajectory {
            sizes: vec![100, 40, 120],
            survival: 0.9,
        };
        assert_eq!(generate(&c).unwrap().truth.population, vec![100, 40, 120]);
    }

    #[test]
    fn stored_truth_matches_recomputation() {
        let world = generate(&config(11)).unwrap();
        let recomputed = true_share_fractions(&world);
        for t in &world.truth.collections {
            assert_eq!(recomputed[&t.collection_id], t.s);
        }
    }

    #[test]
    fn encounter_cap_warns() {
        let mut c = config(6);
        c.encounter_rate = 10_000.0;
        let world = generate(&c).unwrap();
        assert!(!world.truth.warnings.is_empty());
        for t in &world.truth.collections {
            let occ = world.truth.occasions.iter().position(|&o| o == t.occasion).unwrap();
            assert_eq!(t.n_photographed, world.truth.population[occ]);
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut c = config(1);
        c.images_per_animal = 0.5;
        assert!(generate(&c).is_err());
        let mut c = config(1);
        c.share_model.coefficients.insert("missing".into(), 1.0);
        assert!(generate(&c).is_err());
        let mut c = config(1);
        c.occasions = vec![2012, 2011];
        assert!(generate(&c).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = config(9);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(SimConfig::from_json(&json).unwrap(), c);
    }
}
