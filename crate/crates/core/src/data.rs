//! Sighting records, photo collections and capture histories.
//!
//! Image records arrive either as JSONL (one object per line) or as a flat CSV
//! with semicolon-separated individual IDs. Records are grouped into
//! [`Collection`]s (one per `collection_id`), and collections are folded into
//! an [`EncounterMatrix`] over the sampling occasions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling occasion. One calendar year per occasion.
pub type Occasion = i32;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate image_id '{0}'")]
    DuplicateImage(String),
    #[error("collection '{collection_id}' mixes {field} values '{first}' and '{second}'")]
    InconsistentCollection {
        collection_id: String,
        field: &'static str,
        first: String,
        second: String,
    },
    #[error("collection '{collection_id}' has occasion {occasion}, which is not in the occasion list")]
    OccasionOutOfRange {
        collection_id: String,
        occasion: Occasion,
    },
    #[error("occasion list must be non-empty and strictly increasing")]
    BadOccasionList,
    #[error("survey labels reference unknown image ids: {}", .0.join(", "))]
    UnknownLabels(Vec<String>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Input encodings accepted by [`parse_image_records`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for RecordFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(RecordFormat::Jsonl),
            "csv" => Ok(RecordFormat::Csv),
            other => Err(format!("unknown record format '{other}' (expected jsonl or csv)")),
        }
    }
}

/// One photograph with its upstream annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub image_id: String,
    pub collection_id: String,
    pub photographer_id: String,
    pub occasion: Occasion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    #[serde(default)]
    pub individual_ids: BTreeSet<String>,
    #[serde(default)]
    pub raw_features: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared: Option<bool>,
}

impl ImageRecord {
    fn sort_key(&self) -> (Option<i64>, &str) {
        (self.timestamp, self.image_id.as_str())
    }
}

/// Survey answer for one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyLabel {
    pub image_id: String,
    pub shared: bool,
}

/// Parse image records from `reader`.
///
/// Records are returned in file order. Unknown raw feature names are kept
/// verbatim. Line numbers in errors are 1-based and count the CSV header.
pub fn parse_image_records<R: Read>(
    reader: R,
    format: RecordFormat,
) -> Result<Vec<ImageRecord>, DataError> {
    let records = match format {
        RecordFormat::Jsonl => parse_jsonl(reader)?,
        RecordFormat::Csv => parse_csv(reader)?,
    };
    let mut seen = HashSet::with_capacity(records.len());
    for record in &records {
        if !seen.insert(record.image_id.as_str()) {
            return Err(DataError::DuplicateImage(record.image_id.clone()));
        }
    }
    Ok(records)
}

fn parse_jsonl<R: Read>(reader: R) -> Result<Vec<ImageRecord>, DataError> {
    let mut records = Vec::new();
    for (idx, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| DataError::Malformed {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ImageRecord =
            serde_json::from_str(&line).map_err(|e| DataError::Malformed {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

const CSV_FIXED_COLUMNS: [&str; 7] = [
    "image_id",
    "collection_id",
    "photographer_id",
    "occasion",
    "timestamp",
    "individual_ids",
    "shared",
];

/// CSV layout: the fixed columns above (timestamp, individual_ids and shared
/// may be empty), every other column is a raw feature. Empty feature cells
/// mean "absent".
fn parse_csv<R: Read>(reader: R) -> Result<Vec<ImageRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) if is_empty_input(&e) => return Ok(Vec::new()),
        Err(e) => {
            return Err(DataError::Malformed {
                line: 1,
                reason: e.to_string(),
            })
        }
    };
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let position = |name: &str| headers.iter().position(|h| h == name);
    let mut fixed = [None; 7];
    for (slot, name) in fixed.iter_mut().zip(CSV_FIXED_COLUMNS) {
        *slot = position(name);
    }
    for (name, slot) in CSV_FIXED_COLUMNS.iter().zip(&fixed).take(4) {
        if slot.is_none() {
            return Err(DataError::Malformed {
                line: 1,
                reason: format!("missing required column '{name}'"),
            });
        }
    }
    let feature_columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !CSV_FIXED_COLUMNS.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut records = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        let bad = |reason: String| DataError::Malformed { line, reason };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let cell = |slot: Option<usize>| slot.and_then(|i| row.get(i)).unwrap_or("").trim();

        let required = |slot: Option<usize>, name: &str| {
            let value = cell(slot);
            if value.is_empty() {
                Err(bad(format!("empty required field '{name}'")))
            } else {
                Ok(value.to_string())
            }
        };
        let image_id = required(fixed[0], "image_id")?;
        let collection_id = required(fixed[1], "collection_id")?;
        let photographer_id = required(fixed[2], "photographer_id")?;
        let occasion = required(fixed[3], "occasion")?
            .parse::<Occasion>()
            .map_err(|e| bad(format!("occasion: {e}")))?;
        let timestamp = match cell(fixed[4]) {
            "" => None,
            t => Some(t.parse::<i64>().map_err(|e| bad(format!("timestamp: {e}")))?),
        };
        let individual_ids = cell(fixed[5])
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let shared = match cell(fixed[6]) {
            "" => None,
            s => Some(parse_bool(s).map_err(bad)?),
        };
        let mut raw_features = BTreeMap::new();
        for (i, name) in &feature_columns {
            let value = row.get(*i).unwrap_or("").trim();
            if value.is_empty() {
                continue;
            }
            let value = value
                .parse::<f64>()
                .map_err(|e| bad(format!("feature '{name}': {e}")))?;
            raw_features.insert(name.clone(), value);
        }
        records.push(ImageRecord {
            image_id,
            collection_id,
            photographer_id,
            occasion,
            timestamp,
            individual_ids,
            raw_features,
            shared,
        });
    }
    Ok(records)
}

fn is_empty_input(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "1" | "true" | "TRUE" | "True" => Ok(true),
        "0" | "false" | "FALSE" | "False" => Ok(false),
        other => Err(format!("expected 0/1 boolean, got '{other}'")),
    }
}

/// Write records as JSONL in the canonical field order.
pub fn write_jsonl<W: std::io::Write>(
    mut writer: W,
    records: &[ImageRecord],
) -> Result<(), DataError> {
    for record in records {
        serde_json::to_writer(&mut writer, record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a survey label CSV with header `image_id,shared`.
pub fn parse_survey_labels<R: Read>(reader: R) -> Result<Vec<SurveyLabel>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) if is_empty_input(&e) => return Ok(Vec::new()),
        Err(e) => {
            return Err(DataError::Malformed {
                line: 1,
                reason: e.to_string(),
            })
        }
    };
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["image_id", "shared"] {
        return Err(DataError::Malformed {
            line: 1,
            reason: "expected header 'image_id,shared'".into(),
        });
    }
    let mut labels = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| DataError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        let image_id = row.get(0).unwrap_or("").trim().to_string();
        if image_id.is_empty() {
            return Err(DataError::Malformed {
                line,
                reason: "empty image_id".into(),
            });
        }
        let shared = parse_bool(row.get(1).unwrap_or("").trim())
            .map_err(|reason| DataError::Malformed { line, reason })?;
        labels.push(SurveyLabel { image_id, shared });
    }
    Ok(labels)
}

/// Set `shared` on every record that has a survey label.
pub fn join_survey_labels(
    mut records: Vec<ImageRecord>,
    labels: &[SurveyLabel],
) -> Result<Vec<ImageRecord>, DataError> {
    let index: BTreeMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.image_id.as_str(), i))
        .collect();
    let mut updates = Vec::with_capacity(labels.len());
    let mut missing = Vec::new();
    for label in labels {
        match index.get(label.image_id.as_str()) {
            Some(&i) => updates.push((i, label.shared)),
            None => missing.push(label.image_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(DataError::UnknownLabels(missing));
    }
    for (i, shared) in updates {
        records[i].shared = Some(shared);
    }
    Ok(records)
}

/// All images one photographer contributed under one `collection_id`.
///
/// For survey data this is the SD-card set; [`Collection::shared_view`] gives
/// the subset that was (or would be) posted.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub collection_id: String,
    pub photographer_id: String,
    pub occasion: Occasion,
    /// Sorted by (timestamp, image_id); records without timestamps sort first.
    pub images: Vec<ImageRecord>,
    pub distinct_individuals: BTreeSet<String>,
    /// Distinct individuals over shared images, or over all images when no
    /// image carries a label (the collection is itself a shared album).
    pub n_shared_individuals: usize,
}

impl Collection {
    fn from_images(mut images: Vec<ImageRecord>) -> Self {
        images.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let first = &images[0];
        let distinct_individuals: BTreeSet<String> = images
            .iter()
            .flat_map(|img| img.individual_ids.iter().cloned())
            .collect();
        let labelled = images.iter().any(|img| img.shared.is_some());
        let n_shared_individuals = if labelled {
            images
                .iter()
                .filter(|img| img.shared == Some(true))
                .flat_map(|img| img.individual_ids.iter())
                .collect::<BTreeSet<_>>()
                .len()
        } else {
            distinct_individuals.len()
        };
        Collection {
            collection_id: first.collection_id.clone(),
            photographer_id: first.photographer_id.clone(),
            occasion: first.occasion,
            images,
            distinct_individuals,
            n_shared_individuals,
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// True when at least one image carries a share label.
    pub fn is_labelled(&self) -> bool {
        self.images.iter().any(|img| img.shared.is_some())
    }

    /// The posted subset: images labelled shared, or every image when the
    /// collection is unlabelled. `None` when nothing was shared.
    pub fn shared_view(&self) -> Option<Collection> {
        if !self.is_labelled() {
            return Some(self.clone());
        }
        let images: Vec<ImageRecord> = self
            .images
            .iter()
            .filter(|img| img.shared == Some(true))
            .map(|img| ImageRecord {
                shared: None,
                ..img.clone()
            })
            .collect();
        (!images.is_empty()).then(|| Collection::from_images(images))
    }

    pub fn position_of(&self, image_id: &str) -> Option<usize> {
        self.images.iter().position(|img| img.image_id == image_id)
    }
}

/// Partition records by `collection_id`. Output is ordered by collection id.
pub fn group_collections(records: &[ImageRecord]) -> Result<Vec<Collection>, DataError> {
    let mut groups: BTreeMap<&str, Vec<ImageRecord>> = BTreeMap::new();
    for record in records {
        let group = groups.entry(record.collection_id.as_str()).or_default();
        if let Some(first) = group.first() {
            if first.photographer_id != record.photographer_id {
                return Err(DataError::InconsistentCollection {
                    collection_id: record.collection_id.clone(),
                    field: "photographer_id",
                    first: first.photographer_id.clone(),
                    second: record.photographer_id.clone(),
                });
            }
            if first.occasion != record.occasion {
                return Err(DataError::InconsistentCollection {
                    collection_id: record.collection_id.clone(),
                    field: "occasion",
                    first: first.occasion.to_string(),
                    second: record.occasion.to_string(),
                });
            }
        }
        group.push(record.clone());
    }
    Ok(groups.into_values().map(Collection::from_images).collect())
}

/// Binary individual × occasion capture histories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterMatrix {
    individuals: Vec<String>,
    occasions: Vec<Occasion>,
    cells: Vec<Vec<bool>>,
}

impl EncounterMatrix {
    /// Build directly from histories. Rows without any sighting are dropped.
    pub fn from_histories(
        occasions: Vec<Occasion>,
        histories: Vec<(String, Vec<bool>)>,
    ) -> Result<Self, DataError> {
        if occasions.is_empty() || occasions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::BadOccasionList);
        }
        let mut individuals = Vec::new();
        let mut cells = Vec::new();
        for (line, (id, row)) in histories.into_iter().enumerate() {
            if row.len() != occasions.len() {
                return Err(DataError::Malformed {
                    line: line + 1,
                    reason: format!(
                        "history for '{id}' has {} entries, expected {}",
                        row.len(),
                        occasions.len()
                    ),
                });
            }
            if row.iter().any(|&c| c) {
                individuals.push(id);
                cells.push(row);
            }
        }
        Ok(EncounterMatrix {
            individuals,
            occasions,
            cells,
        })
    }

    pub fn individuals(&self) -> &[String] {
        &self.individuals
    }

    pub fn occasions(&self) -> &[Occasion] {
        &self.occasions
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.cells
    }

    pub fn n_individuals(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_occasions(&self) -> usize {
        self.occasions.len()
    }

    pub fn get(&self, individual: usize, occasion: usize) -> bool {
        self.cells[individual][occasion]
    }
}

/// Fold collections into capture histories over `occasions`.
pub fn build_encounter_matrix(
    collections: &[Collection],
    occasions: &[Occasion],
) -> Result<EncounterMatrix, DataError> {
    if occasions.is_empty() || occasions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DataError::BadOccasionList);
    }
    let mut histories: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for collection in collections {
        let column = occasions
            .binary_search(&collection.occasion)
            .map_err(|_| DataError::OccasionOutOfRange {
                collection_id: collection.collection_id.clone(),
                occasion: collection.occasion,
            })?;
        for id in &collection.distinct_individuals {
            histories
                .entry(id.as_str())
                .or_insert_with(|| vec![false; occasions.len()])[column] = true;
        }
    }
    EncounterMatrix::from_histories(
        occasions.to_vec(),
        histories
            .into_iter()
            .map(|(id, row)| (id.to_string(), row))
            .collect(),
    )
}

/// Distinct occasions present in `collections`, ascending.
pub fn occasions_of(collections: &[Collection]) -> Vec<Occasion> {
    collections
        .iter()
        .map(|c| c.occasion)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, collection: &str, photographer: &str, occ: i32, ids: &[&str]) -> ImageRecord {
        ImageRecord {
            image_id: id.into(),
            collection_id: collection.into(),
            photographer_id: photographer.into(),
            occasion: occ,
            timestamp: None,
            individual_ids: ids.iter().map(|s| s.to_string()).collect(),
            raw_features: BTreeMap::new(),
            shared: None,
        }
    }

    #[test]
    fn empty_stream_parses_to_nothing() {
        assert!(parse_image_records(&b""[..], RecordFormat::Jsonl).unwrap().is_empty());
        assert!(parse_image_records(&b""[..], RecordFormat::Csv).unwrap().is_empty());
    }

    #[test]
    fn jsonl_line_maps_fields() {
        let line = br#"{"image_id":"img1","collection_id":"c1","photographer_id":"p1","occasion":2016,"individual_ids":["z01","z02"],"raw_features":{"beauty":0.7,"mystery_score":3.0}}"#;
        let records = parse_image_records(&line[..], RecordFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].image_id, "img1");
        assert_eq!(records[0].individual_ids.len(), 2);
        assert_eq!(records[0].raw_features["mystery_score"], 3.0);
        assert_eq!(records[0].shared, None);
    }

    #[test]
    fn duplicate_image_id_is_named() {
        let input = b"{\"image_id\":\"img1\",\"collection_id\":\"c\",\"photographer_id\":\"p\",\"occasion\":1}\n{\"image_id\":\"img1\",\"collection_id\":\"c\",\"photographer_id\":\"p\",\"occasion\":1}\n";
        let err = parse_image_records(&input[..], RecordFormat::Jsonl).unwrap_err();
        assert!(matches!(err, DataError::DuplicateImage(ref id) if id == "img1"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = b"{\"image_id\":\"a\",\"collection_id\":\"c\",\"photographer_id\":\"p\",\"occasion\":1}\n{\"image_id\":\"b\"}\n";
        match parse_image_records(&input[..], RecordFormat::Jsonl) {
            Err(DataError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rows_split_individuals_and_features() {
        let input = "image_id,collection_id,photographer_id,occasion,timestamp,individual_ids,shared,beauty\n\
                     i1,c1,p1,2011,100,z01;z02,1,0.5\n\
                     i2,c1,p1,2011,,,0,\n";
        let records = parse_image_records(input.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].individual_ids.len(), 2);
        assert_eq!(records[0].shared, Some(true));
        assert_eq!(records[0].raw_features["beauty"], 0.5);
        assert_eq!(records[1].timestamp, None);
        assert!(records[1].raw_features.is_empty());
        assert_eq!(records[1].shared, Some(false));
    }

    #[test]
    fn csv_bad_occasion_reports_line() {
        let input = "image_id,collection_id,photographer_id,occasion\ni1,c1,p1,20x1\n";
        match parse_image_records(input.as_bytes(), RecordFormat::Csv) {
            Err(DataError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grouping_unions_individuals() {
        let records = vec![
            record("1", "c1", "p1", 2011, &["A"]),
            record("2", "c1", "p1", 2011, &["B"]),
            record("3", "c1", "p1", 2011, &["A"]),
        ];
        let collections = group_collections(&records).unwrap();
        assert_eq!(collections.len(), 1);
        assert_eq!(
            collections[0].distinct_individuals,
            ["A", "B"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(collections[0].n_shared_individuals, 2);
    }

    #[test]
    fn grouping_two_collections() {
        let records = vec![
            record("1", "c1", "p1", 2011, &["A"]),
            record("2", "c2", "p1", 2011, &["B"]),
        ];
        assert_eq!(group_collections(&records).unwrap().len(), 2);
    }

    #[test]
    fn grouping_rejects_mixed_photographers() {
        let records = vec![
            record("1", "c1", "p1", 2011, &["A"]),
            record("2", "c1", "p2", 2011, &["B"]),
        ];
        assert!(matches!(
            group_collections(&records),
            Err(DataError::InconsistentCollection { field: "photographer_id", .. })
        ));
    }

    #[test]
    fn images_sort_by_timestamp_then_id() {
        let mut a = record("b", "c", "p", 1, &[]);
        a.timestamp = Some(5);
        let mut b = record("a", "c", "p", 1, &[]);
        b.timestamp = Some(9);
        let mut c = record("c", "c", "p", 1, &[]);
        c.timestamp = Some(5);
        let coll = &group_collections(&[b, c, a]).unwrap()[0];
        let order: Vec<&str> = coll.images.iter().map(|i| i.image_id.as_str()).collect();
        assert_eq!(order, ["b", "c", "a"]);
    }

    #[test]
    fn shared_count_uses_labels() {
        let mut r1 = record("1", "c", "p", 1, &["A", "B"]);
        r1.shared = Some(false);
        let mut r2 = record("2", "c", "p", 1, &["B"]);
        r2.shared = Some(true);
        let coll = &group_collections(&[r1, r2]).unwrap()[0];
        assert_eq!(coll.n_shared_individuals, 1);
        let view = coll.shared_view().unwrap();
        assert_eq!(view.len(), 1);
        assert!(!view.is_labelled());
    }

    #[test]
    fn encounter_rows_follow_sightings() {
        let records = vec![
            record("1", "c1", "p1", 2011, &["z01", "z02"]),
            record("2", "c2", "p2", 2011, &["z02"]),
            record("3", "c3", "p1", 2012, &["z01"]),
        ];
        let collections = group_collections(&records).unwrap();
        let m = build_encounter_matrix(&collections, &[2011, 2012, 2013]).unwrap();
        assert_eq!(m.individuals(), ["z01", "z02"]);
        assert_eq!(m.rows()[0], vec![true, true, false]);
        assert_eq!(m.rows()[1], vec![true, false, false]);
    }

    #[test]
    fn encounter_matrix_empty_and_out_of_range() {
        let m = build_encounter_matrix(&[], &[2011]).unwrap();
        assert_eq!(m.n_individuals(), 0);
        let collections = group_collections(&[record("1", "c", "p", 2020, &["A"])]).unwrap();
        assert!(matches!(
            build_encounter_matrix(&collections, &[2011, 2012]),
            Err(DataError::OccasionOutOfRange { occasion: 2020, .. })
        ));
    }

    #[test]
    fn survey_labels_join() {
        let records = vec![record("img1", "c", "p", 1, &[]), record("img2", "c", "p", 1, &[])];
        let labels = parse_survey_labels("image_id,shared\nimg1,1\n".as_bytes()).unwrap();
        let joined = join_survey_labels(records.clone(), &labels).unwrap();
        assert_eq!(joined[0].shared, Some(true));
        assert_eq!(joined[1].shared, None);
        assert_eq!(join_survey_labels(records.clone(), &[]).unwrap(), records);
        let err = join_survey_labels(
            records,
            &[SurveyLabel {
                image_id: "imgX".into(),
                shared: false,
            }],
        )
        .unwrap_err();
        assert!(err.to_string().contains("imgX"));
    }
}
