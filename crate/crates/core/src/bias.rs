//! Share fractions, bias coefficients and corrected counts.
//!
//! A collection's share fraction `s` is the share of its photographed
//! individuals that appear in posted images. The bias coefficient is
//! `k = 1/ŝ` and the corrected count of photographed animals is `k·n`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Collection, ImageRecord, Occasion};
use crate::features::FeatureVector;
use crate::models::{Model, ModelError};

/// Default lower clamp for predicted share fractions (k ≤ 20).
pub const DEFAULT_SHARE_FLOOR: f64 = 0.05;

#[derive(Debug, Error)]
pub enum BiasError {
    #[error("share floor must lie in (0, 1], got {0}")]
    BadFloor(f64),
    #[error("no share estimates fall in occasions {0}..={1}")]
    NoContributors(Occasion, Occasion),
    #[error("images {} are not part of collection '{collection_id}'", .missing.join(", "))]
    NotSubset {
        collection_id: String,
        missing: Vec<String>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Per-collection correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareEstimate {
    pub collection_id: String,
    pub occasion: Occasion,
    /// Distinct individuals observed in the shared collection.
    pub n_i: usize,
    pub s_hat: f64,
    pub k_i: f64,
    pub n_hat: f64,
}

impl ShareEstimate {
    pub fn new(collection_id: &str, occasion: Occasion, n_i: usize, s_hat: f64) -> Self {
        let k_i = coefficient(s_hat);
        ShareEstimate {
            collection_id: collection_id.to_string(),
            occasion,
            n_i,
            s_hat,
            k_i,
            n_hat: corrected_count(k_i, n_i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledCoefficient {
    pub year_m: Occasion,
    pub year_n: Occasion,
    pub k_rec: f64,
    pub contributing: usize,
}

/// Clamp a raw share prediction into `[floor, 1]`.
pub fn clamp_share(raw: f64, floor: f64) -> Result<f64, BiasError> {
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(BiasError::BadFloor(floor));
    }
    Ok(if raw.is_nan() { floor } else { raw.clamp(floor, 1.0) })
}

/// Predicted share fraction for one collection feature vector.
pub fn predict_share_fraction(
    model: &Model,
    features: &FeatureVector,
    floor: f64,
) -> Result<f64, BiasError> {
    let raw = model.predict_vectors(std::slice::from_ref(features))?[0];
    clamp_share(raw, floor)
}

pub fn coefficient(s_hat: f64) -> f64 {
    1.0 / s_hat
}

pub fn corrected_count(k: f64, n_i: usize) -> f64 {
    k * n_i as f64
}

/// Mean `k_i` over estimates whose occasion is `year_m` or `year_n`.
pub fn pool_coefficient(
    estimates: &[ShareEstimate],
    year_m: Occasion,
    year_n: Occasion,
) -> Result<PooledCoefficient, BiasError> {
    let mut ks: Vec<f64> = estimates
        .iter()
        .filter(|e| e.occasion == year_m || e.occasion == year_n)
        .map(|e| e.k_i)
        .collect();
    if ks.is_empty() {
        return Err(BiasError::NoContributors(year_m, year_n));
    }
    // Sorted summation keeps the mean independent of input order.
    ks.sort_by(f64::total_cmp);
    Ok(PooledCoefficient {
        year_m,
        year_n,
        k_rec: ks.iter().sum::<f64>() / ks.len() as f64,
        contributing: ks.len(),
    })
}

/// Training label for the estimate problem: distinct individuals in the
/// shared images over distinct individuals in the whole source set.
/// `Ok(None)` signals a source set with no individuals (excluded).
pub fn compute_share_label(
    source: &Collection,
    shared: &[ImageRecord],
) -> Result<Option<f64>, BiasError> {
    let ids: BTreeSet<&str> = source.images.iter().map(|i| i.image_id.as_str()).collect();
    let missing: Vec<String> = shared
        .iter()
        .filter(|img| !ids.contains(img.image_id.as_str()))
        .map(|img| img.image_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(BiasError::NotSubset {
            collection_id: source.collection_id.clone(),
            missing,
        });
    }
    if source.distinct_individuals.is_empty() {
        return Ok(None);
    }
    let seen: BTreeSet<&str> = shared
        .iter()
        .flat_map(|img| img.individual_ids.iter().map(String::as_str))
        .collect();
    Ok(Some(seen.len() as f64 / source.distinct_individuals.len() as f64))
}

/// Label from a collection's own `shared` flags.
pub fn share_label_from_flags(source: &Collection) -> Option<f64> {
    let shared: Vec<ImageRecord> = source
        .images
        .iter()
        .filter(|img| img.shared == Some(true))
        .cloned()
        .collect();
    compute_share_label(source, &shared).expect("subset by construction")
}

pub const SHARE_ESTIMATE_HEADER: [&str; 6] = ["collection_id", "occasion", "n_i", "s_hat", "k_i", "n_hat"];

pub fn write_share_estimates<W: std::io::Write>(
    writer: W,
    estimates: &[ShareEstimate],
) -> Result<(), BiasError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SHARE_ESTIMATE_HEADER)?;
    for e in estimates {
        w.write_record([
            e.collection_id.clone(),
            e.occasion.to_string(),
            e.n_i.to_string(),
            e.s_hat.to_string(),
            e.k_i.to_string(),
            e.n_hat.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
