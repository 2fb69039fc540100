//! Feature extraction for images and collections.
//!
//! Two kinds of columns exist. *Raw* columns are passed through from
//! [`ImageRecord::raw_features`] (aesthetic and biological scores supplied by
//! upstream tooling); *structural* columns are computed here from the shape
//! of the source collection. A [`FeatureSchema`] fixes column order for a
//! run and is serialized next to trained models so prediction-time inputs
//! line up with training columns.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Collection, ImageRecord};
use crate::dataset::{Dataset, Matrix};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("image '{image_id}' is not part of collection '{collection_id}'")]
    ImageNotInCollection {
        image_id: String,
        collection_id: String,
    },
    #[error("collection '{0}' is empty")]
    EmptyCollection(String),
    #[error("feature vectors were built under different schemas")]
    SchemaMismatch,
    #[error("got {vectors} feature vectors but {labels} labels")]
    CountMismatch { vectors: usize, labels: usize },
    #[error("feature '{0}' is missing in every row")]
    AllMissing(String),
    #[error("cannot assemble an empty dataset")]
    Empty,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema is for {found:?}-level features, expected {expected:?}")]
    WrongLevel {
        expected: FeatureLevel,
        found: FeatureLevel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Raw,
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureLevel {
    Image,
    Collection,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub source: FeatureSource,
}

pub const COLLECTION_SIZE: &str = "collection_size";
pub const IMAGE_RANK: &str = "image_rank";
pub const ANIMALS_IN_IMAGE: &str = "animals_in_image";
pub const ANIMAL_DUPLICATION: &str = "animal_duplication";
pub const DISTINCT_INDIVIDUALS_IN_COLLECTION: &str = "distinct_individuals_in_collection";
pub const TIME_GAP_PREV: &str = "time_gap_prev";

pub const IMAGE_STRUCTURAL: [&str; 6] = [
    COLLECTION_SIZE,
    IMAGE_RANK,
    ANIMALS_IN_IMAGE,
    ANIMAL_DUPLICATION,
    DISTINCT_INDIVIDUALS_IN_COLLECTION,
    TIME_GAP_PREV,
];

pub const N_INDIVIDUALS: &str = "n_individuals";
pub const IMAGE_COUNT: &str = "image_count";
pub const ANIMAL_FRACTION: &str = "animal_fraction";

pub const COLLECTION_STRUCTURAL: [&str; 3] = [N_INDIVIDUALS, IMAGE_COUNT, ANIMAL_FRACTION];

const MEAN_PREFIX: &str = "mean:";
const MAX_PREFIX: &str = "max:";

/// Ordered column list. Column `i` of every matrix built under this schema
/// holds feature `columns[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub level: FeatureLevel,
    pub columns: Vec<FeatureColumn>,
}

impl FeatureSchema {
    /// Raw columns (in the given order) followed by the six structural ones.
    pub fn image<S: AsRef<str>>(raw_names: &[S]) -> Self {
        let mut columns: Vec<FeatureColumn> = raw_names
            .iter()
            .map(|n| FeatureColumn {
                name: n.as_ref().to_string(),
                source: FeatureSource::Raw,
            })
            .collect();
        columns.extend(IMAGE_STRUCTURAL.iter().map(|n| FeatureColumn {
            name: n.to_string(),
            source: FeatureSource::Structural,
        }));
        FeatureSchema {
            level: FeatureLevel::Image,
            columns,
        }
    }

    /// Structural columns, then `mean:<raw>` and `max:<raw>` per raw name.
    pub fn collection<S: AsRef<str>>(raw_names: &[S]) -> Self {
        let mut columns: Vec<FeatureColumn> = COLLECTION_STRUCTURAL
            .iter()
            .map(|n| FeatureColumn {
                name: n.to_string(),
                source: FeatureSource::Structural,
            })
            .collect();
        for name in raw_names {
            for prefix in [MEAN_PREFIX, MAX_PREFIX] {
                columns.push(FeatureColumn {
                    name: format!("{prefix}{}", name.as_ref()),
                    source: FeatureSource::Raw,
                });
            }
        }
        FeatureSchema {
            level: FeatureLevel::Collection,
            columns,
        }
    }

    /// Sorted union of raw feature names seen in `records`.
    pub fn raw_names_in(records: &[ImageRecord]) -> Vec<String> {
        records
            .iter()
            .flat_map(|r| r.raw_features.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Check name uniqueness and that every structural column is one this
    /// module knows how to compute.
    pub fn validate(&self) -> Result<(), FeatureError> {
        let mut seen = BTreeSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(FeatureError::InvalidSchema(format!(
                    "duplicate column '{}'",
                    col.name
                )));
            }
            let known = match (self.level, col.source) {
                (FeatureLevel::Image, FeatureSource::Structural) => {
                    IMAGE_STRUCTURAL.contains(&col.name.as_str())
                }
                (FeatureLevel::Collection, FeatureSource::Structural) => {
                    COLLECTION_STRUCTURAL.contains(&col.name.as_str())
                }
                (FeatureLevel::Collection, FeatureSource::Raw) => {
                    col.name.starts_with(MEAN_PREFIX) || col.name.starts_with(MAX_PREFIX)
                }
                (FeatureLevel::Image, FeatureSource::Raw) => true,
            };
            if !known {
                return Err(FeatureError::InvalidSchema(format!(
                    "unsupported {:?} column '{}' at {:?} level",
                    col.source, col.name, self.level
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FeatureError> {
        let schema: FeatureSchema =
            serde_json::from_str(s).map_err(|e| FeatureError::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }
}

/// One feature row; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: Arc<FeatureSchema>,
    pub values: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.schema
            .names()
            .position(|n| n == name)
            .and_then(|i| self.values[i])
    }

    /// Dense copy with missing entries replaced by `fill[i]`.
    pub fn impute(&self, fill: &[f64]) -> Vec<f64> {
        self.values
            .iter()
            .zip(fill)
            .map(|(v, f)| v.unwrap_or(*f))
            .collect()
    }
}

/// Per-image structural quantities for a whole collection.
struct CollectionShape {
    duplication: Vec<usize>,
}

impl CollectionShape {
    fn of(collection: &Collection) -> Self {
        let mut images_with: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, img) in collection.images.iter().enumerate() {
            for id in &img.individual_ids {
                images_with.entry(id.as_str()).or_default().push(i);
            }
        }
        let duplication = collection
            .images
            .iter()
            .enumerate()
            .map(|(i, img)| {
                img.individual_ids
                    .iter()
                    .flat_map(|id| images_with[id.as_str()].iter().copied())
                    .filter(|&j| j != i)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .collect();
        CollectionShape { duplication }
    }
}

fn expect_level(schema: &FeatureSchema, level: FeatureLevel) -> Result<(), FeatureError> {
    if schema.level != level {
        return Err(FeatureError::WrongLevel {
            expected: level,
            found: schema.level,
        });
    }
    Ok(())
}

fn image_vector(
    collection: &Collection,
    position: usize,
    duplication: usize,
    schema: &Arc<FeatureSchema>,
) -> FeatureVector {
    let image = &collection.images[position];
    let time_gap = match position {
        0 => 0.0,
        p => match (collection.images[p - 1].timestamp, image.timestamp) {
            (Some(prev), Some(cur)) => (cur - prev) as f64,
            _ => 0.0,
        },
    };
    let values = schema
        .columns
        .iter()
        .map(|col| match col.source {
            FeatureSource::Raw => image.raw_features.get(&col.name).copied(),
            FeatureSource::Structural => Some(match col.name.as_str() {
                COLLECTION_SIZE => collection.len() as f64,
                IMAGE_RANK => position as f64,
                ANIMALS_IN_IMAGE => image.individual_ids.len() as f64,
                ANIMAL_DUPLICATION => duplication as f64,
                DISTINCT_INDIVIDUALS_IN_COLLECTION => collection.distinct_individuals.len() as f64,
                TIME_GAP_PREV => time_gap,
                _ => unreachable!("schema validated"),
            }),
        })
        .collect();
    FeatureVector {
        schema: Arc::clone(schema),
        values,
    }
}

/// Features of one image in the context of its source collection.
pub fn featurize_image(
    image_id: &str,
    collection: &Collection,
    schema: &Arc<FeatureSchema>,
) -> Result<FeatureVector, FeatureError> {
    expect_level(schema, FeatureLevel::Image)?;
    schema.validate()?;
    let position =
        collection
            .position_of(image_id)
            .ok_or_else(|| FeatureError::ImageNotInCollection {
                image_id: image_id.to_string(),
                collection_id: collection.collection_id.clone(),
            })?;
    let shape = CollectionShape::of(collection);
    Ok(image_vector(
        collection,
        position,
        shape.duplication[position],
        schema,
    ))
}

/// Features for every image of `collection`, in the collection's image order.
pub fn featurize_images(
    collection: &Collection,
    schema: &Arc<FeatureSchema>,
) -> Result<Vec<FeatureVector>, FeatureError> {
    expect_level(schema, FeatureLevel::Image)?;
    schema.validate()?;
    let shape = CollectionShape::of(collection);
    Ok((0..collection.len())
        .map(|i| image_vector(collection, i, shape.duplication[i], schema))
        .collect())
}

/// Collection-level features: distinct individuals, image count, fraction of
/// images with animals, and mean/max of each raw feature.
pub fn featurize_collection(
    collection: &Collection,
    schema: &Arc<FeatureSchema>,
) -> Result<FeatureVector, FeatureError> {
    expect_level(schema, FeatureLevel::Collection)?;
    schema.validate()?;
    if collection.is_empty() {
        return Err(FeatureError::EmptyCollection(
            collection.collection_id.clone(),
        ));
    }
    let n_images = collection.len() as f64;
    let with_animals = collection
        .images
        .iter()
        .filter(|img| !img.individual_ids.is_empty())
        .count() as f64;
    let values = schema
        .columns
        .iter()
        .map(|col| match col.source {
            FeatureSource::Structural => Some(match col.name.as_str() {
                N_INDIVIDUALS => collection.distinct_individuals.len() as f64,
                IMAGE_COUNT => n_images,
                ANIMAL_FRACTION => with_animals / n_images,
                _ => unreachable!("schema validated"),
            }),
            FeatureSource::Raw => {
                let (raw, use_max) = match col.name.strip_prefix(MEAN_PREFIX) {
                    Some(raw) => (raw, false),
                    None => (
                        col.name.strip_prefix(MAX_PREFIX).expect("schema validated"),
                        true,
                    ),
                };
                let observed: Vec<f64> = collection
                    .images
                    .iter()
                    .filter_map(|img| img.raw_features.get(raw).copied())
                    .collect();
                if observed.is_empty() {
                    None
                } else if use_max {
                    Some(observed.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                } else {
                    Some(observed.iter().sum::<f64>() / observed.len() as f64)
                }
            }
        })
        .collect();
    Ok(FeatureVector {
        schema: Arc::clone(schema),
        values,
    })
}

/// Column means over non-missing entries, used to fill gaps.
pub fn imputation_means(vectors: &[FeatureVector]) -> Result<Vec<f64>, FeatureError> {
    let first = vectors.first().ok_or(FeatureError::Empty)?;
    let schema = &first.schema;
    let mut sums = vec![0.0; schema.len()];
    let mut counts = vec![0usize; schema.len()];
    for v in vectors {
        if v.schema != *schema {
            return Err(FeatureError::SchemaMismatch);
        }
        for (j, value) in v.values.iter().enumerate() {
            if let Some(x) = value {
                sums[j] += x;
                counts[j] += 1;
            }
        }
    }
    sums.iter()
        .zip(&counts)
        .zip(&schema.columns)
        .map(|((s, &c), col)| {
            if c == 0 {
                Err(FeatureError::AllMissing(col.name.clone()))
            } else {
                Ok(s / c as f64)
            }
        })
        .collect()
}

/// Stack feature vectors into a dense dataset, filling missing entries with
/// the column mean over this dataset's observed entries.
pub fn assemble_dataset(
    vectors: &[FeatureVector],
    labels: &[f64],
) -> Result<Dataset, FeatureError> {
    if vectors.len() != labels.len() {
        return Err(FeatureError::CountMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    let means = imputation_means(vectors)?;
    let schema = Arc::clone(&vectors[0].schema);
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.impute(&means)).collect();
    Ok(Dataset::new(Matrix::from_rows(&rows), labels.to_vec()).with_schema(schema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::group_collections;

    fn img(id: &str, ts: i64, ids: &[&str], beauty: Option<f64>) -> ImageRecord {
        ImageRecord {
            image_id: id.into(),
            collection_id: "c".into(),
            photographer_id: "p".into(),
            occasion: 2016,
            timestamp: Some(ts),
            individual_ids: ids.iter().map(|s| s.to_string()).collect(),
            raw_features: beauty.map(|b| ("beauty".to_string(), b)).into_iter().collect(),
            shared: None,
        }
    }

    fn three_images() -> Collection {
        group_collections(&[
            img("i1", 10, &["A"], Some(0.2)),
            img("i2", 25, &["A", "B"], Some(0.4)),
            img("i3", 40, &[], Some(0.6)),
        ])
        .unwrap()
        .remove(0)
    }

    #[test]
    fn image_structural_features() {
        let coll = three_images();
        let schema = Arc::new(FeatureSchema::image(&["beauty"]));
        let v = featurize_image("i2", &coll, &schema).unwrap();
        assert_eq!(v.get(ANIMAL_DUPLICATION), Some(1.0));
        assert_eq!(v.get(IMAGE_RANK), Some(1.0));
        assert_eq!(v.get(COLLECTION_SIZE), Some(3.0));
        assert_eq!(v.get(ANIMALS_IN_IMAGE), Some(2.0));
        assert_eq!(v.get(DISTINCT_INDIVIDUALS_IN_COLLECTION), Some(2.0));
        assert_eq!(v.get(TIME_GAP_PREV), Some(15.0));
        assert_eq!(v.get("beauty"), Some(0.4));

        let first = featurize_image("i1", &coll, &schema).unwrap();
        assert_eq!(first.get(TIME_GAP_PREV), Some(0.0));
        let empty = featurize_image("i3", &coll, &schema).unwrap();
        assert_eq!(empty.get(ANIMALS_IN_IMAGE), Some(0.0));
        assert_eq!(empty.get(ANIMAL_DUPLICATION), Some(0.0));
    }

    #[test]
    fn batch_matches_single_image_path() {
        let coll = three_images();
        let schema = Arc::new(FeatureSchema::image(&["beauty"]));
        let batch = featurize_images(&coll, &schema).unwrap();
        for (img, v) in coll.images.iter().zip(&batch) {
            assert_eq!(&featurize_image(&img.image_id, &coll, &schema).unwrap(), v);
        }
    }

    #[test]
    fn missing_raw_feature_is_marked() {
        let coll = group_collections(&[img("i1", 1, &["A"], None)]).unwrap().remove(0);
        let schema = Arc::new(FeatureSchema::image(&["beauty"]));
        let v = featurize_image("i1", &coll, &schema).unwrap();
        assert_eq!(v.values[0], None);
    }

    #[test]
    fn foreign_image_is_rejected() {
        let coll = three_images();
        let schema = Arc::new(FeatureSchema::image::<&str>(&[]));
        assert!(matches!(
            featurize_image("nope", &coll, &schema),
            Err(FeatureError::ImageNotInCollection { .. })
        ));
    }

    #[test]
    fn collection_features() {
        let coll = three_images();
        let schema = Arc::new(FeatureSchema::collection(&["beauty"]));
        let v = featurize_collection(&coll, &schema).unwrap();
        assert_eq!(v.get(N_INDIVIDUALS), Some(2.0));
        assert_eq!(v.get(IMAGE_COUNT), Some(3.0));
        assert!((v.get("mean:beauty").unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(v.get("max:beauty"), Some(0.6));
        assert!((v.get(ANIMAL_FRACTION).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let all = group_collections(&[img("a", 1, &["A"], None), img("b", 2, &["B"], None)])
            .unwrap()
            .remove(0);
        let v = featurize_collection(&all, &schema).unwrap();
        assert_eq!(v.get(ANIMAL_FRACTION), Some(1.0));
        assert_eq!(v.get("mean:beauty"), None);
    }

    #[test]
    fn assemble_imputes_column_mean() {
        let schema = Arc::new(FeatureSchema {
            level: FeatureLevel::Image,
            columns: vec![FeatureColumn {
                name: "beauty".into(),
                source: FeatureSource::Raw,
            }],
        });
        let vectors: Vec<FeatureVector> = [Some(1.0), None, Some(3.0)]
            .into_iter()
            .map(|v| FeatureVector {
                schema: Arc::clone(&schema),
                values: vec![v],
            })
            .collect();
        let ds = assemble_dataset(&vectors, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(ds.x.as_slice(), &[1.0, 2.0, 3.0]);

        let two = assemble_dataset(&vectors[..2], &[0.0, 1.0]).unwrap();
        assert_eq!(two.n_rows(), 2);

        let other = Arc::new(FeatureSchema::image(&["x"]));
        let mut mixed = vectors.clone();
        mixed.push(FeatureVector {
            values: vec![None; other.len()],
            schema: other,
        });
        assert!(matches!(
            assemble_dataset(&mixed, &[0.0; 4]),
            Err(FeatureError::SchemaMismatch)
        ));

        let none = vec![FeatureVector {
            schema: Arc::clone(&schema),
            values: vec![None],
        }];
        assert!(matches!(
            assemble_dataset(&none, &[0.0]),
            Err(FeatureError::AllMissing(ref n)) if n == "beauty"
        ));
    }

    #[test]
    fn schema_json_round_trip_and_validation() {
        let schema = FeatureSchema::collection(&["beauty", "sharpness"]);
        assert_eq!(FeatureSchema::from_json(&schema.to_json()).unwrap(), schema);
        let mut bad = FeatureSchema::image::<&str>(&[]);
        bad.columns.push(FeatureColumn {
            name: "made_up".into(),
            source: FeatureSource::Structural,
        });
        assert!(bad.validate().is_err());
    }
}
