//! End-to-end estimation run: ingest, featurize, train, correct, estimate
//! and report.
//!
//! A run reads a JSON [`RunConfig`], trains the share-fraction regressor on
//! labelled SD-card sets, predicts `ŝ` for every observed shared album,
//! runs Jolly-Seber on the raw and the corrected capture counts, and writes
//! the outputs listed on [`run_estimate_pipeline`] into the output
//! directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::{self, PooledCoefficient, ShareEstimate, DEFAULT_SHARE_FLOOR};
use crate::data::{
    build_encounter_matrix, group_collections, join_survey_labels, occasions_of,
    parse_image_records, parse_survey_labels, ImageRecord, Occasion, RecordFormat,
};
use crate::dataset::Dataset;
use crate::evaluation::{cross_validate, CvPlan, EvalReport, Metric};
use crate::features::{
    assemble_dataset, featurize_collection, featurize_images, FeatureLevel, FeatureSchema,
};
use crate::jolly_seber::{
    jolly_seber_estimate, occasion_mean_coefficients, occasion_statistics, scale_statistics,
    write_population_csv, JsVariant, PopulationEstimate,
};
use crate::models::{self, LearnerKind, LearnerSpec, Model};
use crate::rng::derive_seed;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Featurize,
    Train,
    Evaluate,
    Bias,
    Estimate,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Bias => "bias",
            Stage::Estimate => "estimate",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    pub fn new<E>(stage: Stage, source: E) -> Self
    where
        E: Into<Box<dyn std::error::Error + Send + Sync>>,
    {
        PipelineError {
            stage,
            source: source.into(),
        }
    }
}

fn at<E>(stage: Stage) -> impl FnOnce(E) -> PipelineError
where
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    move |e| PipelineError::new(stage, e)
}

fn path_error(stage: Stage, path: &Path, e: impl fmt::Display) -> PipelineError {
    PipelineError::new(stage, format!("{}: {e}", path.display()))
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("RMSE needs at least one pair of values")]
    Empty,
    #[error("RMSE inputs differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("census line {line}: {reason}")]
    Census { line: usize, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Root-mean-square difference.
pub fn rmse(estimates: &[f64], references: &[f64]) -> Result<f64, ReportError> {
    if estimates.len() != references.len() {
        return Err(ReportError::LengthMismatch(estimates.len(), references.len()));
    }
    if estimates.is_empty() {
        return Err(ReportError::Empty);
    }
    let sum: f64 = estimates
        .iter()
        .zip(references)
        .map(|(e, r)| (e - r) * (e - r))
        .sum();
    Ok((sum / estimates.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub count: f64,
    /// The published figure is a lower bound ("2350+").
    pub lower_bound: bool,
}

impl fmt::Display for CensusEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count.fract() == 0.0 {
            write!(f, "{}", self.count as i64)?;
        } else {
            write!(f, "{:.2}", self.count)?;
        }
        if self.lower_bound {
            f.write_str("+")?;
        }
        Ok(())
    }
}

/// Official counts per occasion. Occasions with an empty cell are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCensus {
    pub entries: BTreeMap<Occasion, CensusEntry>,
}

impl ReferenceCensus {
    /// Parse CSV with header `year,official`. A trailing `+` marks a lower
    /// bound; an empty cell means no official figure.
    pub fn parse<R: std::io::Read>(reader: R) -> Result<Self, ReportError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["year", "official"] {
            return Err(ReportError::Census {
                line: 1,
                reason: "header must be 'year,official'".into(),
            });
        }
        let mut entries = BTreeMap::new();
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row?;
            let bad = |reason: String| ReportError::Census { line, reason };
            let year: Occasion = row[0]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad year '{}'", &row[0])))?;
            let cell = row.get(1).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let (digits, lower_bound) = match cell.strip_suffix('+') {
                Some(d) => (d.trim(), true),
                None => (cell, false),
            };
            let count: f64 = digits
                .parse()
                .map_err(|_| bad(format!("bad official count '{cell}'")))?;
            if !(count > 0.0 && count.is_finite()) {
                return Err(bad(format!("official count must be positive, got {cell}")));
            }
            if entries.insert(year, CensusEntry { count, lower_bound }).is_some() {
                return Err(bad(format!("year {year} appears twice")));
            }
        }
        Ok(ReferenceCensus { entries })
    }
}

/// What multiplies the corrected Jolly-Seber abundance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PostCoefficient {
    /// The pooled `k_rec` of the occasion's year pair.
    #[default]
    KRec,
    Constant { value: f64 },
}

fn default_estimate_learner() -> LearnerSpec {
    LearnerSpec::new(LearnerKind::GbtRegressor)
}

fn default_share_floor() -> f64 {
    DEFAULT_SHARE_FLOOR
}

/// Run configuration. Relative paths are resolved against the config file's
/// directory by [`RunConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// SD-card sets with `shared` labels (or labels from `survey_labels`).
    pub training_records: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey_labels: Option<PathBuf>,
    /// Observed shared albums to estimate from.
    pub records: PathBuf,
    /// `year,official` CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<PathBuf>,
    /// Ignore the census entirely.
    #[serde(default)]
    pub no_official: bool,
    /// Collection-level schema JSON; defaults to the raw features present
    /// in the training records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    /// Previously trained share-fraction model; skips training when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_store: Option<PathBuf>,
    #[serde(default = "default_estimate_learner")]
    pub estimate_learner: LearnerSpec,
    /// Image-level classifier, cross-validated for reporting only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shareability_learner: Option<LearnerSpec>,
    /// When set, the estimate learner is cross-validated too.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvPlan>,
    /// Pairs pooled into `k_rec`; defaults to consecutive occasions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year_pairs: Option<Vec<(Occasion, Occasion)>>,
    #[serde(default)]
    pub js_variant: JsVariant,
    #[serde(default)]
    pub post_coefficient: PostCoefficient,
    #[serde(default = "default_share_floor")]
    pub share_floor: f64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(at(Stage::Config))
    }

    /// Read a config file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| path_error(Stage::Config, path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.training_records);
        fix(&mut self.records);
        fix(&mut self.output_dir);
        for p in [
            &mut self.survey_labels,
            &mut self.census,
            &mut self.schema,
            &mut self.model_store,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Copy with learner seeds and the CV seed derived from the master
    /// seed, and every learner default filled in.
    pub fn resolved(&self) -> Result<RunConfig, PipelineError> {
        let mut config = self.clone();
        config.estimate_learner = self
            .estimate_learner
            .clone()
            .with_seed(derive_seed(self.seed, 1))
            .resolved()
            .map_err(at(Stage::Config))?;
        if let Some(spec) = &self.shareability_learner {
            config.shareability_learner = Some(
                spec.clone()
                    .with_seed(derive_seed(self.seed, 2))
                    .resolved()
                    .map_err(at(Stage::Config))?,
            );
        }
        if let Some(plan) = &mut config.cv {
            plan.seed = derive_seed(self.seed, 3);
        }
        if !(self.share_floor > 0.0 && self.share_floor <= 1.0) {
            return Err(PipelineError::new(
                Stage::Config,
                format!("share_floor must lie in (0, 1], got {}", self.share_floor),
            ));
        }
        if let PostCoefficient::Constant { value } = self.post_coefficient {
            if !(value.is_finite() && value > 0.0) {
                return Err(PipelineError::new(
                    Stage::Config,
                    format!("post_coefficient value must be positive, got {value}"),
                ));
            }
        }
        Ok(config)
    }
}

fn format_of(path: &Path) -> RecordFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => RecordFormat::Csv,
        _ => RecordFormat::Jsonl,
    }
}

/// Read image records; CSV when the extension is `.csv`, JSONL otherwise.
pub fn read_records(path: &Path) -> Result<Vec<ImageRecord>, PipelineError> {
    let file = File::open(path).map_err(|e| path_error(Stage::Ingest, path, e))?;
    parse_image_records(std::io::BufReader::new(file), format_of(path))
        .map_err(|e| path_error(Stage::Ingest, path, e))
}

pub fn read_census(path: &Path) -> Result<ReferenceCensus, PipelineError> {
    let file = File::open(path).map_err(|e| path_error(Stage::Ingest, path, e))?;
    ReferenceCensus::parse(file).map_err(|e| path_error(Stage::Ingest, path, e))
}

fn read_schema(path: &Path, level: FeatureLevel) -> Result<Arc<FeatureSchema>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| path_error(Stage::Featurize, path, e))?;
    let schema = FeatureSchema::from_json(&text).map_err(|e| path_error(Stage::Featurize, path, e))?;
    if schema.level != level {
        return Err(path_error(
            Stage::Featurize,
            path,
            format!("expected a {level:?}-level schema, found {:?}", schema.level),
        ));
    }
    Ok(Arc::new(schema))
}

/// Training data for the share-fraction regressor: one row per labelled
/// SD-card set, featurized on its shared subset, labelled with `s`.
/// Sets with no individuals or nothing shared are skipped, matching what an
/// observed album can look like.
pub fn estimate_training_set(
    records: &[ImageRecord],
    schema: Option<Arc<FeatureSchema>>,
) -> Result<Dataset, PipelineError> {
    let collections = group_collections(records).map_err(at(Stage::Featurize))?;
    let schema = schema
        .unwrap_or_else(|| Arc::new(FeatureSchema::collection(&FeatureSchema::raw_names_in(records))));
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for c in collections.iter().filter(|c| c.is_labelled()) {
        let Some(s) = bias::share_label_from_flags(c) else {
            continue;
        };
        let Some(view) = c.shared_view() else {
            continue;
        };
        vectors.push(featurize_collection(&view, &schema).map_err(at(Stage::Featurize))?);
        labels.push(s);
        ids.push(c.collection_id.clone());
    }
    if vectors.is_empty() {
        return Err(PipelineError::new(
            Stage::Featurize,
            "no labelled collection with shared individuals in the training records",
        ));
    }
    let mut dataset = assemble_dataset(&vectors, &labels).map_err(at(Stage::Featurize))?;
    dataset.row_ids = ids;
    Ok(dataset)
}

/// Training data for the shareability classifier: one row per labelled
/// image, featurized within its full SD-card set.
pub fn shareability_training_set(
    records: &[ImageRecord],
    schema: Option<Arc<FeatureSchema>>,
) -> Result<Dataset, PipelineError> {
    let collections = group_collections(records).map_err(at(Stage::Featurize))?;
    let schema =
        schema.unwrap_or_else(|| Arc::new(FeatureSchema::image(&FeatureSchema::raw_names_in(records))));
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for c in &collections {
        let features = featurize_images(c, &schema).map_err(at(Stage::Featurize))?;
        for (img, v) in c.images.iter().zip(features) {
            if let Some(shared) = img.shared {
                vectors.push(v);
                labels.push(if shared { 1.0 } else { 0.0 });
                ids.push(img.image_id.clone());
            }
        }
    }
    if vectors.is_empty() {
        return Err(PipelineError::new(Stage::Featurize, "no labelled images in the training records"));
    }
    let mut dataset = assemble_dataset(&vectors, &labels).map_err(at(Stage::Featurize))?;
    dataset.row_ids = ids;
    Ok(dataset)
}

/// Year pair whose `k_rec` applies to `occasion`: the first pair starting
/// at it, otherwise the first pair ending at it.
pub fn pair_for(occasion: Occasion, pairs: &[(Occasion, Occasion)]) -> Option<(Occasion, Occasion)> {
    pairs
        .iter()
        .find(|p| p.0 == occasion)
        .or_else(|| pairs.iter().find(|p| p.1 == occasion))
        .copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub year: Occasion,
    pub official: Option<CensusEntry>,
    pub our_approach: Option<f64>,
    pub jolly_seber: Option<f64>,
    pub images: usize,
}

/// The per-occasion comparison table plus its RMSE footer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// Occasions entering the RMSE: official figure present and both
    /// estimates defined.
    pub rmse_occasions: Vec<Occasion>,
    pub rmse_ours: Option<f64>,
    pub rmse_js: Option<f64>,
}

pub const SUMMARY_HEADER: &str = "year,official,our_approach,jolly_seber,images";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

impl Summary {
    pub fn new(rows: Vec<SummaryRow>) -> Self {
        let used: Vec<&SummaryRow> = rows
            .iter()
            .filter(|r| r.official.is_some() && r.our_approach.is_some() && r.jolly_seber.is_some())
            .collect();
        let official: Vec<f64> = used.iter().map(|r| r.official.unwrap().count).collect();
        let ours: Vec<f64> = used.iter().map(|r| r.our_approach.unwrap()).collect();
        let js: Vec<f64> = used.iter().map(|r| r.jolly_seber.unwrap()).collect();
        Summary {
            rmse_occasions: used.iter().map(|r| r.year).collect(),
            rmse_ours: rmse(&ours, &official).ok(),
            rmse_js: rmse(&js, &official).ok(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.year,
                r.official.map(|o| o.to_string()).unwrap_or_default(),
                cell(r.our_approach),
                cell(r.jolly_seber),
                r.images
            ));
        }
        out.push_str(&format!("RMSE,,{},{},\n", cell(self.rmse_ours), cell(self.rmse_js)));
        out
    }

    /// Parse the CSV written by [`Summary::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let bad = |line: usize, reason: String| ReportError::Census { line, reason };
        let mut lines = text.lines();
        if lines.next() != Some(SUMMARY_HEADER) {
            return Err(bad(1, format!("header must be '{SUMMARY_HEADER}'")));
        }
        let num = |line: usize, s: &str| -> Result<Option<f64>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(line, format!("bad number '{s}'")))
            }
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(n, format!("expected 5 fields, got {}", f.len())));
            }
            if f[0] == "RMSE" {
                break;
            }
            let official = if f[1].is_empty() {
                None
            } else {
                let census = ReferenceCensus::parse(format!("year,official\n{},{}\n", f[0], f[1]).as_bytes())
                    .map_err(|_| bad(n, format!("bad official '{}'", f[1])))?;
                census.entries.into_values().next()
            };
            rows.push(SummaryRow {
                year: f[0].parse().map_err(|_| bad(n, format!("bad year '{}'", f[0])))?,
                official,
                our_approach: num(n, f[2])?,
                jolly_seber: num(n, f[3])?,
                images: f[4].parse().map_err(|_| bad(n, format!("bad image count '{}'", f[4])))?,
            });
        }
        Ok(Summary::new(rows))
    }

    /// Aligned plain-text table.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<6} {:>10} {:>14} {:>14} {:>8}\n",
            "Year", "Official", "OurApproach", "JollySeber", "Images"
        );
        let dash = |v: Option<f64>| v.map(|x| format!("{x:.0}")).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            out.push_str(&format!(
                "{:<6} {:>10} {:>14} {:>14} {:>8}\n",
                r.year,
                r.official.map(|o| o.to_string()).unwrap_or_else(|| "-".into()),
                dash(r.our_approach),
                dash(r.jolly_seber),
                r.images
            ));
        }
        out.push_str(&format!(
            "{:<6} {:>10} {:>14} {:>14}\n",
            "RMSE",
            "",
            dash(self.rmse_ours),
            dash(self.rmse_js)
        ));
        if self.rows.iter().any(|r| r.official.is_some_and(|o| o.lower_bound)) {
            out.push_str("(+ marks an official lower bound; it enters the RMSE at its stated value)\n");
        }
        out
    }
}

/// Everything a run computed, in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub model: Model,
    pub share_estimates: Vec<ShareEstimate>,
    pub coefficients: Vec<PooledCoefficient>,
    pub observed: PopulationEstimate,
    pub corrected: PopulationEstimate,
    pub summary: Summary,
    pub estimate_report: Option<EvalReport>,
    pub shareability_report: Option<EvalReport>,
}

/// Compute a run without touching the output directory.
pub fn compute(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let config = config.resolved()?;

    // Ingest.
    let mut training = read_records(&config.training_records)?;
    if let Some(path) = &config.survey_labels {
        let file = File::open(path).map_err(|e| path_error(Stage::Ingest, path, e))?;
        let labels = parse_survey_labels(file).map_err(|e| path_error(Stage::Ingest, path, e))?;
        training = join_survey_labels(training, &labels).map_err(|e| path_error(Stage::Ingest, path, e))?;
    }
    let observed_records = read_records(&config.records)?;
    let census = match (&config.census, config.no_official) {
        (Some(path), false) => Some(read_census(path)?),
        _ => None,
    };

    // Featurize and train.
    let schema = config
        .schema
        .as_deref()
        .map(|p| read_schema(p, FeatureLevel::Collection))
        .transpose()?;
    let dataset = estimate_training_set(&training, schema)?;
    let schema = Arc::clone(dataset.schema.as_ref().expect("assembled with schema"));
    let model = match &config.model_store {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| path_error(Stage::Train, path, e))?;
            Model::from_json(&text).map_err(|e| path_error(Stage::Train, path, e))?
        }
        None => models::fit(&config.estimate_learner, &dataset).map_err(at(Stage::Train))?,
    };
    if model.n_cols != schema.len() {
        return Err(PipelineError::new(
            Stage::Train,
            format!("model expects {} columns but the schema has {}", model.n_cols, schema.len()),
        ));
    }

    // Optional evaluation.
    let estimate_report = match &config.cv {
        Some(plan) => Some(
            cross_validate(&config.estimate_learner, &dataset, plan, &Metric::regression())
                .map_err(at(Stage::Evaluate))?,
        ),
        None => None,
    };
    let shareability_report = match &config.shareability_learner {
        Some(spec) => {
            let images = shareability_training_set(&training, None)?;
            let plan = config.cv.unwrap_or(CvPlan {
                seed: derive_seed(config.seed, 3),
                ..CvPlan::default()
            });
            Some(
                cross_validate(spec, &images, &plan, &Metric::classification())
                    .map_err(at(Stage::Evaluate))?,
            )
        }
        None => None,
    };

    // Bias coefficients for every observed album with at least one animal.
    let collections = group_collections(&observed_records).map_err(at(Stage::Ingest))?;
    let mut share_estimates = Vec::new();
    for c in &collections {
        if c.distinct_individuals.is_empty() {
            continue;
        }
        let view = c.shared_view().expect("collection has images");
        let features = featurize_collection(&view, &schema).map_err(at(Stage::Featurize))?;
        let s_hat =
            bias::predict_share_fraction(&model, &features, config.share_floor).map_err(at(Stage::Bias))?;
        share_estimates.push(ShareEstimate::new(
            &c.collection_id,
            c.occasion,
            view.distinct_individuals.len(),
            s_hat,
        ));
    }

    // Jolly-Seber on raw and corrected counts.
    let occasions = occasions_of(&collections);
    let matrix = build_encounter_matrix(&collections, &occasions).map_err(at(Stage::Estimate))?;
    let raw_stats = occasion_statistics(&matrix).map_err(at(Stage::Estimate))?;
    let corrected_stats = scale_statistics(&raw_stats, &occasion_mean_coefficients(&share_estimates))
        .map_err(at(Stage::Estimate))?;
    let observed = jolly_seber_estimate(&raw_stats, config.js_variant);
    let corrected = jolly_seber_estimate(&corrected_stats, config.js_variant);

    let pairs: Vec<(Occasion, Occasion)> = config
        .year_pairs
        .clone()
        .unwrap_or_else(|| occasions.windows(2).map(|w| (w[0], w[1])).collect());
    let mut coefficients: Vec<PooledCoefficient> = Vec::new();
    for &(m, n) in &pairs {
        if let Ok(p) = bias::pool_coefficient(&share_estimates, m, n) {
            coefficients.push(p);
        }
    }

    let mut images_per_occasion: BTreeMap<Occasion, usize> = BTreeMap::new();
    for c in &collections {
        *images_per_occasion.entry(c.occasion).or_default() += c.len();
    }
    let mut rows = Vec::with_capacity(occasions.len());
    for (t, &year) in occasions.iter().enumerate() {
        let our_approach = match corrected.occasions[t].abundance {
            None => None,
            Some(n_hat) => {
                let c = match config.post_coefficient {
                    PostCoefficient::Constant { value } => value,
                    PostCoefficient::KRec => {
                        let (m, n) = pair_for(year, &pairs).ok_or_else(|| {
                            PipelineError::new(Stage::Bias, format!("no year pair covers occasion {year}"))
                        })?;
                        bias::pool_coefficient(&share_estimates, m, n)
                            .map_err(at(Stage::Bias))?
                            .k_rec
                    }
                };
                Some(c * n_hat)
            }
        };
        rows.push(SummaryRow {
            year,
            official: census.as_ref().and_then(|c| c.entries.get(&year).copied()),
            our_approach,
            jolly_seber: observed.occasions[t].abundance,
            images: images_per_occasion[&year],
        });
    }

    Ok(RunOutcome {
        config,
        model,
        share_estimates,
        coefficients,
        observed,
        corrected,
        summary: Summary::new(rows),
        estimate_report,
        shareability_report,
    })
}

pub const LOCK_FILE: &str = ".popsight.lock";

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir).map_err(|e| path_error(Stage::Report, dir, e))?;
        let path = dir.join(LOCK_FILE);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                path_error(
                    Stage::Report,
                    &path,
                    format!("{e} (another run may be using this output directory)"),
                )
            })?;
        Ok(Lock(path))
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn csv_bytes<F, E>(write: F) -> Result<Vec<u8>, PipelineError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), E>,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    let mut buf = Vec::new();
    write(&mut buf).map_err(at(Stage::Report))?;
    Ok(buf)
}

/// Render every output file of a run as (file name, contents).
pub fn render_outputs(outcome: &RunOutcome) -> Result<Vec<(&'static str, Vec<u8>)>, PipelineError> {
    let mut files = vec![
        ("resolved_config.json", pretty_json(&outcome.config)),
        ("model_estimate.json", outcome.model.to_json().into_bytes()),
        (
            "share_estimates.csv",
            csv_bytes(|b| bias::write_share_estimates(b, &outcome.share_estimates))?,
        ),
        (
            "coefficients.csv",
            csv_bytes(|b| write_coefficients(b, &outcome.coefficients))?,
        ),
        (
            "population_observed.csv",
            csv_bytes(|b| write_population_csv(b, &outcome.observed))?,
        ),
        (
            "population_corrected.csv",
            csv_bytes(|b| write_population_csv(b, &outcome.corrected))?,
        ),
        ("summary.csv", outcome.summary.to_csv().into_bytes()),
    ];
    if let Some(r) = &outcome.estimate_report {
        files.push(("eval_estimate.json", r.to_json().into_bytes()));
    }
    if let Some(r) = &outcome.shareability_report {
        files.push(("eval_shareability.json", r.to_json().into_bytes()));
    }
    Ok(files)
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(value).expect("serializable")
}

pub const COEFFICIENT_HEADER: [&str; 4] = ["year_m", "year_n", "k_rec", "contributing"];

pub fn write_coefficients<W: std::io::Write>(
    writer: W,
    coefficients: &[PooledCoefficient],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COEFFICIENT_HEADER)?;
    for p in coefficients {
        w.write_record([
            p.year_m.to_string(),
            p.year_n.to_string(),
            p.k_rec.to_string(),
            p.contributing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Run the whole pipeline and write its outputs into `config.output_dir`:
/// `resolved_config.json`, `model_estimate.json`, `share_estimates.csv`,
/// `coefficients.csv`, `population_observed.csv`,
/// `population_corrected.csv`, `summary.csv` and, when requested,
/// `eval_estimate.json` / `eval_shareability.json`.
///
/// On failure no output file is left behind.
pub fn run_estimate_pipeline(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let _lock = Lock::acquire(&config.output_dir)?;
    let outcome = compute(config)?;
    let files = render_outputs(&outcome)?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, bytes) in files {
        let path = config.output_dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(path_error(Stage::Report, &path, e));
        }
        written.push(path);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0], &[3.0]).unwrap(), 3.0);
        assert!((rmse(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(rmse(&[], &[]), Err(ReportError::Empty)));
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_on_table_figures() {
        let ours = [2341.0, 1576.0, 613.0, 67.0];
        let official = [2827.0, 1897.0, 2250.0, 1627.0];
        let squares: f64 = ours.iter().zip(&official).map(|(a, b)| (a - b) * (a - b)).sum();
        let expected = (squares / 4.0).sqrt();
        assert!((rmse(&ours, &official).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 1167.5).abs() < 0.1);
    }

    #[test]
    fn census_parsing() {
        let c = ReferenceCensus::parse("year,official\n2011,2350+\n2012,\n2013,2250\n".as_bytes()).unwrap();
        assert_eq!(c.entries.len(), 2);
        assert!(c.entries[&2011].lower_bound);
        assert_eq!(c.entries[&2013].count, 2250.0);
        assert_eq!(c.entries[&2011].to_string(), "2350+");
        assert!(ReferenceCensus::parse("year,official\n2011,-4\n".as_bytes()).is_err());
        assert!(ReferenceCensus::parse("yr,n\n".as_bytes()).is_err());
    }

    #[test]
    fn pair_mapping() {
        let pairs = [(2011, 2012), (2012, 2013)];
        assert_eq!(pair_for(2011, &pairs), Some((2011, 2012)));
        assert_eq!(pair_for(2012, &pairs), Some((2012, 2013)));
        assert_eq!(pair_for(2013, &pairs), Some((2012, 2013)));
        assert_eq!(pair_for(2020, &pairs), None);
    }

    fn row(year: Occasion, official: Option<f64>, ours: Option<f64>, js: Option<f64>) -> SummaryRow {
        SummaryRow {
            year,
            official: official.map(|count| CensusEntry {
                count,
                lower_bound: false,
            }),
            our_approach: ours,
            jolly_seber: js,
            images: 3,
        }
    }

    #[test]
    fn summary_layout_and_round_trip() {
        let rows: Vec<SummaryRow> = (2011..2018)
            .map(|y| {
                let interior = y != 2011 && y != 2017;
                row(y, Some(100.0), interior.then_some(110.0), interior.then_some(90.0))
            })
            .collect();
        let summary = Summary::new(rows);
        let text = summary.to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], SUMMARY_HEADER);
        assert_eq!(lines[1], "2011,100,,,3");
        assert_eq!(lines[2], "2012,100,110.00,90.00,3");
        assert_eq!(lines[8], "RMSE,,10.00,10.00,");
        assert_eq!(summary.rmse_occasions, vec![2012, 2013, 2014, 2015, 2016]);
        assert_eq!(Summary::from_csv(&text).unwrap(), summary);
    }

    #[test]
    fn summary_without_officials_has_empty_footer() {
        let summary = Summary::new(vec![row(2011, None, Some(1.0), Some(2.0))]);
        assert!(summary.to_csv().ends_with("RMSE,,,,\n"));
    }

    #[test]
    fn config_defaults() {
        let c = RunConfig::from_json(r#"{"training_records":"t.jsonl","records":"r.jsonl","output_dir":"out"}"#).unwrap();
        assert_eq!(c.estimate_learner.kind, LearnerKind::GbtRegressor);
        assert_eq!(c.post_coefficient, PostCoefficient::KRec);
        assert_eq!(c.js_variant, JsVariant::Classic);
        assert_eq!(c.share_floor, DEFAULT_SHARE_FLOOR);
        let c = RunConfig::from_json(
            r#"{"training_records":"t","records":"r","output_dir":"o","post_coefficient":{"mode":"constant","value":1.0}}"#,
        )
        .unwrap();
        assert_eq!(c.post_coefficient, PostCoefficient::Constant { value: 1.0 });
        assert!(RunConfig::from_json(r#"{"records":"r","output_dir":"o"}"#).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut c = RunConfig::from_json(
            r#"{"training_records":"t.jsonl","records":"/abs/r.jsonl","census":"c.csv","output_dir":"out"}"#,
        )
        .unwrap();
        c.resolve_paths(Path::new("/base"));
        assert_eq!(c.training_records, Path::new("/base/t.jsonl"));
        assert_eq!(c.records, Path::new("/abs/r.jsonl"));
        assert_eq!(c.census.as_deref(), Some(Path::new("/base/c.csv")));
    }
}
