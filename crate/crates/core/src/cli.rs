//! Command-line front end: `train`, `eval`, `ssp-dump`, `surface`, `iris`.
//!
//! Settings resolve as experiment defaults, then the `--config` JSON file,
//! then flags. The seed falls back to `PTM_SEED`, then 42.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::error::{PtmError, Result};
use crate::experiment::{
    self, Experiment, ExperimentConfig, ExampleRow, GridSpec, ModelFile, TmMode,
};
use crate::model::ProbabilityMap;
use crate::training::TrainingHistory;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ptm", version, about = "Probabilistic Tsetlin Machine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write model.json and history.csv.
    Train(TrainArgs),
    /// Evaluate a saved model on a CSV dataset.
    Eval(EvalArgs),
    /// Write every automaton's state distribution to ssp.csv.
    SspDump(SspArgs),
    /// Evaluate a two-feature binary model over a grid.
    Surface(SurfaceArgs),
    /// Train and evaluate on a stratified Iris split.
    Iris(IrisArgs),
}

/// Settings shared by `train` and `iris`. Every field is optional so that
/// unset flags leave the config file's values alone.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct Overrides {
    /// JSON file with any of the settings below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    #[arg(long, value_enum)]
    pub mode: Option<TmMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Clauses per class machine (m).
    #[arg(long)]
    pub clauses: Option<usize>,
    /// Vote threshold (T).
    #[arg(long)]
    pub threshold: Option<u32>,
    /// Specificity (s).
    #[arg(long)]
    pub specificity: Option<f64>,
    /// States per action (N).
    #[arg(long)]
    pub states: Option<usize>,
    /// Prediction samples per input (K).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Calibration bins (M).
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub probability_map: Option<ProbabilityMap>,
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn merge(self, over: Overrides) -> Overrides {
        Overrides {
            config: over.config.or(self.config),
            experiment: over.experiment.or(self.experiment),
            mode: over.mode.or(self.mode),
            seed: over.seed.or(self.seed),
            epochs: over.epochs.or(self.epochs),
            clauses: over.clauses.or(self.clauses),
            threshold: over.threshold.or(self.threshold),
            specificity: over.specificity.or(self.specificity),
            states: over.states.or(self.states),
            samples: over.samples.or(self.samples),
            bins: over.bins.or(self.bins),
            probability_map: over.probability_map.or(self.probability_map),
            bits: over.bits.or(self.bits),
            noise: over.noise.or(self.noise),
            train_size: over.train_size.or(self.train_size),
            test_size: over.test_size.or(self.test_size),
            train_fraction: over.train_fraction.or(self.train_fraction),
            dataset: over.dataset.or(self.dataset),
            out: over.out.or(self.out),
        }
    }

    fn apply(self, mut c: ExperimentConfig) -> ExperimentConfig {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(mode, seed, epochs, clauses, threshold, specificity, states, samples, bins,
             probability_map, bits, noise, train_size, test_size, train_fraction, out);
        if self.dataset.is_some() {
            c.dataset = self.dataset;
        }
        c
    }

    /// Resolves defaults, config file, environment and flags into one
    /// validated config. `fallback` is the experiment when none is named.
    pub fn resolve(self, fallback: Experiment) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| PtmError::io(path, e))?;
                serde_json::from_str::<Overrides>(&text).map_err(|e| {
                    PtmError::InvalidParameter(format!("{}: {e}", path.display()))
                })?
            }
            None => Overrides::default(),
        };
        let merged = file.merge(self);
        let experiment = merged.experiment.unwrap_or(fallback);
        let mut config = ExperimentConfig::defaults(experiment);
        if let Some(seed) = env_seed()? {
            config.seed = seed;
        }
        let config = merged.apply(config);
        config.validate()?;
        Ok(config)
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("PTM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| PtmError::InvalidParameter(format!("PTM_SEED={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub settings: Overrides,
}

#[derive(Debug, Args)]
pub struct IrisArgs {
    #[command(flatten)]
    pub settings: Overrides,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with feature columns and a trailing label column.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SspArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `lo,hi`; defaults to the training box scaled 3x.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub x_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub y_range: Option<(f64, f64)>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("bad range {lo},{hi}"));
    }
    Ok((lo, hi))
}

/// Exit code for a library error.
pub fn exit_code(err: &PtmError) -> i32 {
    match err {
        PtmError::InvalidParameter(_)
        | PtmError::InvalidInput(_)
        | PtmError::InvalidCase { .. }
        | PtmError::Stratification(_)
        | PtmError::Io { .. } => EXIT_USAGE,
        PtmError::Parse { .. } | PtmError::CorruptModel(_) | PtmError::Json(_) | PtmError::Csv(_) => EXIT_DATA,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(&args.settings.resolve(Experiment::XorSsp)?).map(drop),
        Command::Iris(args) => cmd_iris(&args.settings.resolve(Experiment::Iris)?).map(drop),
        Command::Eval(args) => cmd_eval(&args),
        Command::SspDump(args) => cmd_ssp_dump(&args.model, &args.out),
        Command::Surface(args) => cmd_surface(&args),
    }
}

fn create_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PtmError::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| PtmError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PtmError::io(path, e))
}

/// `f64` formatted so that parsing it back gives the same value.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn flush<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| PtmError::io(path, e))
}

/// Columns: `epoch,updates,mean_abs_vote,train_accuracy,test_accuracy`.
pub fn write_history(path: &Path, history: &TrainingHistory) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "updates", "mean_abs_vote", "train_accuracy", "test_accuracy"])?;
    for r in &history.epochs {
        w.write_record([
            r.epoch.to_string(),
            r.updates.to_string(),
            num(r.mean_abs_vote),
            opt_num(r.train_accuracy),
            opt_num(r.test_accuracy),
        ])?;
    }
    flush(w, path)
}

/// Columns: `index,true_label,predicted,correct,confidence,entropy,mutual_information`.
pub fn write_examples(path: &Path, rows: &[ExampleRow], label_names: &[String]) -> Result<()> {
    let name = |c: usize| label_names.get(c).cloned().unwrap_or_else(|| c.to_string());
    let mut w = csv_writer(path)?;
    w.write_record([
        "index",
        "true_label",
        "predicted",
        "correct",
        "confidence",
        "entropy",
        "mutual_information",
    ])?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            name(r.true_label),
            name(r.predicted),
            u8::from(r.correct).to_string(),
            num(r.confidence),
            num(r.entropy),
            num(r.mutual_information),
        ])?;
    }
    flush(w, path)
}

/// Writes `model.json` and `history.csv` under `config.out`.
pub fn cmd_train(config: &ExperimentConfig) -> Result<(ModelFile, TrainingHistory)> {
    create_out_dir(&config.out)?;
    let prepared = experiment::prepare_data(config)?;
    log::info!(
        "training {:?} {:?} on {} rows, {} epochs",
        config.experiment,
        config.mode,
        prepared.train.len(),
        config.epochs
    );
    let (model, history) = experiment::train_model(config, &prepared)?;
    model.save(config.out.join("model.json"))?;
    write_history(&config.out.join("history.csv"), &history)?;
    Ok((model, history))
}

/// Writes `ssp.csv`: `class,clause,literal,include_probability,s1..s2N`.
pub fn cmd_ssp_dump(model_path: &Path, out: &Path) -> Result<()> {
    let model = ModelFile::load(model_path)?;
    create_out_dir(out)?;
    let path = out.join("ssp.csv");
    let mut w = csv_writer(&path)?;
    let states = 2 * model.machine.config().states;
    let mut header: Vec<String> = ["class", "clause", "literal", "include_probability"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=states).map(|i| format!("s{i}")));
    w.write_record(&header)?;
    for row in experiment::ssp_rows(&model) {
        let mut record = vec![
            row.class.to_string(),
            row.clause.to_string(),
            row.literal,
            num(row.include_probability),
        ];
        record.extend(row.states.into_iter().map(num));
        w.write_record(&record)?;
    }
    flush(w, &path)
}

/// Writes `surface.csv`: `x1,x2,mean,entropy,std,mi`.
pub fn cmd_surface(args: &SurfaceArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    if args.resolution == 0 {
        return Err(PtmError::InvalidParameter("resolution must be >= 1".into()));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(42),
    };
    let default_box = model.input_bounds.map(|b| b.scaled(3.0));
    let range = |given: Option<(f64, f64)>, axis: usize| -> Result<(f64, f64)> {
        given
            .or_else(|| default_box.map(|b| (b.min[axis], b.max[axis])))
            .ok_or_else(|| PtmError::InvalidParameter("model stores no input bounds; pass --x-range and --y-range".into()))
    };
    let grid = GridSpec {
        x: range(args.x_range, 0)?,
        y: range(args.y_range, 1)?,
        nx: args.resolution,
        ny: args.resolution,
    };
    let rows = experiment::surface_rows(&model, &grid.points(), args.samples, seed)?;
    create_out_dir(&args.out)?;
    let path = args.out.join("surface.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["x1", "x2", "mean", "entropy", "std", "mi"])?;
    for r in rows {
        w.write_record([num(r.x1), num(r.x2), num(r.mean), num(r.entropy), num(r.std), num(r.mi)])?;
    }
    flush(w, &path)
}

/// Maps a CSV table's labels onto the model's label names and booleanizes
/// the features.
pub fn encode_dataset(model: &ModelFile, path: &Path) -> Result<Dataset> {
    let table = data::load_csv(path)?;
    let expected = model
        .binarization
        .as_ref()
        .map_or(model.machine.config().features, |b| b.raw_features());
    if table.feature_count() != expected {
        return Err(PtmError::InvalidInput(format!(
            "{} has {} feature columns, model expects {expected}",
            path.display(),
            table.feature_count()
        )));
    }
    let labels = table
        .labels
        .iter()
        .map(|y| {
            let name = &table.label_names[*y];
            model
                .label_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| PtmError::InvalidInput(format!("label {name:?} unknown to the model")))
        })
        .collect::<Result<Vec<_>>>()?;
    let features = model.encode(&table.features)?;
    Dataset::new(features, labels, model.machine.classes())
}

/// Writes `eval.json` and `eval_predictions.csv`.
pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let data = encode_dataset(&model, &args.dataset)?;
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(42),
    };
    let (summary, rows) = experiment::evaluate(&model.machine, &data, args.samples, args.bins, seed)?;
    create_out_dir(&args.out)?;
    write_json(&args.out.join("eval.json"), &summary)?;
    write_examples(&args.out.join("eval_predictions.csv"), &rows, &model.label_names)?;
    println!("accuracy {:.4}  ece {:.4}  mean entropy {:.4}", summary.accuracy, summary.ece, summary.mean_entropy);
    Ok(())
}

/// Writes `model.json`, `iris_metrics.json` and `iris_predictions.csv`.
pub fn cmd_iris(config: &ExperimentConfig) -> Result<experiment::IrisSummary> {
    create_out_dir(&config.out)?;
    let (model, summary, rows) = experiment::run_iris(config)?;
    model.save(config.out.join("model.json"))?;
    write_json(&config.out.join("iris_metrics.json"), &summary)?;
    write_examples(&config.out.join("iris_predictions.csv"), &rows, &model.label_names)?;
    println!(
        "seed {}  accuracy {:.4}  ece {:.4}",
        summary.seed, summary.eval.accuracy, summary.eval.ece
    );
    Ok(summary)
}
