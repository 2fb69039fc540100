use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use popsight_core::data::{
    group_collections, join_survey_labels, occasions_of, parse_survey_labels, write_jsonl,
};
use popsight_core::evaluation::{cross_dataset_eval, cross_validate, CvPlan, Metric};
use popsight_core::features::{FeatureLevel, FeatureSchema};
use popsight_core::pipeline::{self, RunConfig, Summary};
use popsight_core::synth::{self, SimConfig};
use popsight_core::{models, Dataset, ImageRecord, LearnerKind, LearnerSpec, Task};

#[derive(Parser)]
#[command(name = "popsight", version, about = "Population estimates from shared wildlife photos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    /// One row per labelled image (shareability problem).
    Image,
    /// One row per labelled SD-card set (share-fraction problem).
    Collection,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Cv,
    Cross,
}

#[derive(clap::Args)]
struct LearnerArgs {
    /// Learner kind, e.g. gbt_regressor, random_forest, mode_baseline.
    #[arg(long)]
    learner: Option<String>,
    /// LearnerSpec JSON file; overrides --learner/--param/--task.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Hyperparameter as name=value; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// regression or classification, for learners that support both.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world from a simulation config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate image records and write them back as canonical JSONL.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Survey CSV (image_id,shared) joined onto the records.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a training dataset (JSON) from labelled records.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "collection")]
        level: Level,
        /// Feature schema JSON; defaults to the raw features present.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a learner on a dataset and write the model JSON.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a learner or score it on a second dataset.
    Evaluate {
        #[arg(long, value_enum, default_value = "cv")]
        protocol: ProtocolArg,
        /// Dataset JSON or record file (cv protocol).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Training dataset or record file (cross protocol).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Test dataset or record file (cross protocol).
        #[arg(long)]
        test: Option<PathBuf>,
        /// Level used when featurizing record files; defaults by task.
        #[arg(long, value_enum)]
        level: Option<Level>,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Seed for fold assignment.
        #[arg(long = "cv-seed", default_value_t = 0)]
        cv_seed: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print a mean ± std table to stderr as well.
        #[arg(long)]
        table: bool,
    },
    /// Run the full estimation pipeline from a run config.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Skip the census; the summary has no official column values.
        #[arg(long)]
        no_official: bool,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a run's summary table.
    Report {
        /// Output directory of an `estimate` run, or a summary CSV.
        #[arg(long)]
        input: PathBuf,
    },
}

/// Bad combination of otherwise well-formed arguments.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nRun with --help for usage.");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Ingest { input, labels, out } => ingest(&input, labels.as_deref(), &out),
        Command::Featurize {
            input,
            labels,
            level,
            schema,
            out,
        } => {
            let records = load_records(&input, labels.as_deref())?;
            let schema = schema.as_deref().map(read_schema).transpose()?;
            let dataset = build_dataset(&records, level, schema)?;
            write_json(&out, &dataset)?;
            eprintln!("{} rows × {} columns -> {}", dataset.n_rows(), dataset.n_cols(), out.display());
            Ok(())
        }
        Command::Train { data, learner, out } => {
            let spec = learner_spec(&learner)?;
            let dataset = read_dataset(&data)?;
            let model = models::fit(&spec, &dataset)?;
            fs::write(&out, model.to_json()).with_context(|| format!("{}", out.display()))?;
            Ok(())
        }
        Command::Evaluate {
            protocol,
            data,
            train,
            test,
            level,
            learner,
            folds,
            repeats,
            cv_seed,
            out,
            table,
        } => {
            let spec = learner_spec(&learner)?;
            let level = level.unwrap_or(match spec.task() {
                Task::Classification => Level::Image,
                Task::Regression => Level::Collection,
            });
            let metrics = Metric::for_task(spec.task());
            let report = match protocol {
                ProtocolArg::Cv => {
                    let data = data.ok_or_else(|| usage("--protocol cv needs --data"))?;
                    let dataset = dataset_from(&data, level)?;
                    let plan = CvPlan {
                        n_folds: folds,
                        n_repeats: repeats,
                        stratified: spec.task() == Task::Classification,
                        seed: cv_seed,
                    };
                    cross_validate(&spec, &dataset, &plan, &metrics)?
                }
                ProtocolArg::Cross => {
                    let (Some(train), Some(test)) = (train, test) else {
                        return Err(usage("--protocol cross needs --train and --test"));
                    };
                    let train = dataset_from(&train, level)?;
                    let test = dataset_from(&test, level)?;
                    cross_dataset_eval(&spec, &train, &test, &metrics)?
                }
            };
            if table {
                eprint!("{}", report.render_table());
            }
            match out {
                Some(path) => fs::write(&path, report.to_json()).with_context(|| format!("{}", path.display()))?,
                None => println!("{}", report.to_json()),
            }
            Ok(())
        }
        Command::Estimate {
            config,
            no_official,
            out,
        } => {
            let mut run_config = RunConfig::load(&config)?;
            run_config.no_official |= no_official;
            if let Some(out) = out {
                run_config.output_dir = out;
            }
            let outcome = pipeline::run_estimate_pipeline(&run_config)?;
            print!("{}", outcome.summary.render_table());
            Ok(())
        }
        Command::Report { input } => {
            let path = if input.is_dir() { input.join("summary.csv") } else { input };
            let text = fs::read_to_string(&path).with_context(|| format!("{}", path.display()))?;
            let summary = Summary::from_csv(&text).with_context(|| format!("{}", path.display()))?;
            print!("{}", summary.render_table());
            Ok(())
        }
    }
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("{}", config.display()))?;
    let mut sim = SimConfig::from_json(&text).with_context(|| format!("{}", config.display()))?;
    if let Some(seed) = seed {
        sim.seed = seed;
    }
    let world = synth::generate(&sim)?;
    world.export(out)?;
    for warning in &world.truth.warnings {
        eprintln!("warning: {warning}");
    }
    eprintln!(
        "{} images in {} collections over {} occasions -> {}",
        world.records.len(),
        world.truth.collections.len(),
        world.truth.occasions.len(),
        out.display()
    );
    Ok(())
}

fn ingest(input: &Path, labels: Option<&Path>, out: &Path) -> Result<()> {
    let records = load_records(input, labels)?;
    let collections = group_collections(&records)?;
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records)?;
    fs::write(out, buf).with_context(|| format!("{}", out.display()))?;
    let occasions = occasions_of(&collections);
    eprintln!(
        "{} images, {} collections, occasions {:?} -> {}",
        records.len(),
        collections.len(),
        occasions,
        out.display()
    );
    Ok(())
}

fn load_records(input: &Path, labels: Option<&Path>) -> Result<Vec<ImageRecord>> {
    let records = pipeline::read_records(input)?;
    match labels {
        None => Ok(records),
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("{}", path.display()))?;
            let labels = parse_survey_labels(file).with_context(|| format!("{}", path.display()))?;
            Ok(join_survey_labels(records, &labels)?)
        }
    }
}

fn read_schema(path: &Path) -> Result<Arc<FeatureSchema>> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    Ok(Arc::new(
        FeatureSchema::from_json(&text).with_context(|| format!("{}", path.display()))?,
    ))
}

fn build_dataset(records: &[ImageRecord], level: Level, schema: Option<Arc<FeatureSchema>>) -> Result<Dataset> {
    let expected = match level {
        Level::Image => FeatureLevel::Image,
        Level::Collection => FeatureLevel::Collection,
    };
    if let Some(s) = &schema {
        if s.level != expected {
            return Err(usage(format!("schema is {:?}-level but --level asks for {expected:?}", s.level)));
        }
    }
    Ok(match level {
        Level::Image => pipeline::shareability_training_set(records, schema)?,
        Level::Collection => pipeline::estimate_training_set(records, schema)?,
    })
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: not a dataset JSON", path.display()))
}

/// `.json` files are datasets; anything else is a record file.
fn dataset_from(path: &Path, level: Level) -> Result<Dataset> {
    if path.extension().is_some_and(|e| e == "json") {
        read_dataset(path)
    } else {
        build_dataset(&pipeline::read_records(path)?, level, None)
    }
}

fn learner_spec(args: &LearnerArgs) -> Result<LearnerSpec> {
    let mut spec = match (&args.spec, &args.learner) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
            let spec: LearnerSpec =
                serde_json::from_str(&text).with_context(|| format!("{}: not a learner spec", path.display()))?;
            spec
        }
        (None, Some(kind)) => {
            let kind: LearnerKind = kind.parse().map_err(usage)?;
            let mut spec = LearnerSpec::new(kind);
            for p in &args.params {
                let Some((name, value)) = p.split_once('=') else {
                    bail!(UsageError(format!("--param expects NAME=VALUE, got '{p}'")));
                };
                let value: f64 = value
                    .parse()
                    .map_err(|_| usage(format!("--param {name}: '{value}' is not a number")))?;
                spec = spec.with(name, value);
            }
            if let Some(task) = &args.task {
                spec = spec.with_task(match task.as_str() {
                    "regression" => Task::Regression,
                    "classification" => Task::Classification,
                    other => return Err(usage(format!("unknown task '{other}'"))),
                });
            }
            spec
        }
        (None, None) => return Err(usage("either --learner or --spec is required")),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.resolved().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn write_json(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut file = fs::File::create(path).with_context(|| format!("{}", path.display()))?;
    serde_json::to_writer(&mut file, dataset)?;
    file.write_all(b"\n")?;
    Ok(())
}
