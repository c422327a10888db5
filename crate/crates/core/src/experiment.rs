//! Experiment runners shared by the command-line tool, the examples and the
//! acceptance suite: resolved configuration, the versioned model file, and
//! the row types written to CSV.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, BinarizationSpec, BoundingBox, Dataset, RawTable};
use crate::error::{PtmError, Result};
use crate::model::{literal_name, ClassicTm, ClauseBank, Machine, MachineConfig, ProbabilityMap, Ptm};
use crate::rng::{purpose, stream};
use crate::training::{self, TrainingConfig, TrainingHistory};
use crate::uncertainty::{self, CalibrationBin, UncertaintyReport};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    XorSsp,
    #[serde(rename = "synthetic-2d")]
    #[value(name = "synthetic-2d")]
    Synthetic2d,
    Iris,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TmMode {
    #[default]
    Ptm,
    Classic,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub mode: TmMode,
    pub seed: u64,
    pub clauses: usize,
    pub threshold: u32,
    pub specificity: f64,
    pub states: usize,
    pub probability_map: ProbabilityMap,
    pub epochs: usize,
    /// Prediction samples per input (`K`).
    pub samples: usize,
    /// Calibration bins (`M`).
    pub bins: usize,
    /// Thermometer bits per real-valued feature.
    pub bits: usize,
    /// Label flip rate of the noisy-XOR generator.
    pub noise: f64,
    /// Generated training rows (noisy-XOR, synthetic 2D).
    pub train_size: usize,
    /// Generated test points (synthetic 2D).
    pub test_size: usize,
    /// Training share of a stratified split (Iris, custom CSV).
    pub train_fraction: f64,
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            mode: TmMode::Ptm,
            seed: 42,
            clauses: 20,
            threshold: 10,
            specificity: 3.0,
            states: 100,
            probability_map: ProbabilityMap::ClampedVotes,
            epochs: 100,
            samples: 100,
            bins: 10,
            bits: 10,
            noise: 0.3,
            train_size: 1000,
            test_size: 2000,
            train_fraction: 0.8,
            dataset: None,
            out: PathBuf::from("out"),
        };
        match experiment {
            Experiment::XorSsp => Self {
                clauses: 4,
                threshold: 2,
                specificity: 3.9,
                epochs: 200,
                train_size: 2000,
                ..base
            },
            // T=10 leaves the cluster cores short of saturation, so their
            // entropy and spread stay close to the boundary's.
            Experiment::Synthetic2d => Self {
                threshold: 4,
                bits: 8,
                ..base
            },
            // Chosen on seeds disjoint from the acceptance seeds; T=15 with
            // 100 clauses leaves correct predictions underconfident.
            Experiment::Iris => Self {
                clauses: 200,
                threshold: 5,
                dataset: Some(default_iris_path()),
                ..base
            },
            Experiment::Custom => base,
        }
    }

    pub fn machine_config(&self, features: usize) -> MachineConfig {
        MachineConfig {
            clauses: self.clauses,
            threshold: self.threshold,
            specificity: self.specificity,
            states: self.states,
            features,
            probability_map: self.probability_map,
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            epochs: self.epochs,
            shuffle: true,
            seed: self.seed,
            record_accuracy: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.machine_config(1).validate()?;
        if self.epochs == 0 {
            return Err(PtmError::param("epochs must be >= 1"));
        }
        if self.samples == 0 {
            return Err(PtmError::param("samples K must be >= 1"));
        }
        if self.bins == 0 {
            return Err(PtmError::param("bins M must be >= 1"));
        }
        if self.bits == 0 {
            return Err(PtmError::param("bits per feature must be >= 1"));
        }
        Ok(())
    }
}

/// The Iris file shipped with the crate.
pub fn default_iris_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("iris.csv")
}

/// A trained machine of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StoredMachine {
    Ptm(Ptm),
    Classic(ClassicTm),
}

/// Calls `$body` with `$m` bound to the concrete machine.
macro_rules! with_machine {
    ($stored:expr, $m:ident => $body:expr) => {
        match $stored {
            StoredMachine::Ptm($m) => $body,
            StoredMachine::Classic($m) => $body,
        }
    };
}

impl StoredMachine {
    pub fn config(&self) -> &MachineConfig {
        with_machine!(self, m => &m.config)
    }

    pub fn classes(&self) -> usize {
        with_machine!(self, m => m.classes)
    }

    pub fn check(&self) -> Result<()> {
        with_machine!(self, m => m.check())
    }

    /// Uncertainty reports for each input, `k` samples each. Input `i` uses
    /// its own stream of `seed`, so results do not depend on scheduling.
    pub fn reports(&self, inputs: &[Vec<bool>], k: usize, seed: u64) -> Result<Vec<UncertaintyReport>> {
        with_machine!(self, m => sample_reports(m, inputs, k, seed))
    }
}

pub fn sample_reports<B: ClauseBank + Sync>(
    machine: &Machine<B>,
    inputs: &[Vec<bool>],
    k: usize,
    seed: u64,
) -> Result<Vec<UncertaintyReport>> {
    inputs
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = stream(seed, purpose::EVAL + i as u64);
            let samples = machine.predict_distribution(x, k, &mut rng)?;
            UncertaintyReport::from_samples(&samples)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub experiment: Experiment,
    pub seed: u64,
    pub epochs: usize,
    pub dataset_digest: String,
}

/// Versioned on-disk model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub machine: StoredMachine,
    pub label_names: Vec<String>,
    pub binarization: Option<BinarizationSpec>,
    /// Bounding box of the real-valued training inputs, when there are any.
    pub input_bounds: Option<BoundingBox>,
    pub provenance: ModelProvenance,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let version: Version =
            serde_json::from_str(text).map_err(|e| PtmError::CorruptModel(e.to_string()))?;
        if version.format_version != MODEL_FORMAT_VERSION {
            return Err(PtmError::CorruptModel(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                version.format_version
            )));
        }
        let model: ModelFile =
            serde_json::from_str(text).map_err(|e| PtmError::CorruptModel(e.to_string()))?;
        model.machine.check()?;
        if let Some(spec) = &model.binarization {
            spec.validate()
                .map_err(|e| PtmError::CorruptModel(e.to_string()))?;
            if spec.bit_count() != model.machine.config().features {
                return Err(PtmError::CorruptModel(format!(
                    "binarizer yields {} bits but machine expects {}",
                    spec.bit_count(),
                    model.machine.config().features
                )));
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| PtmError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PtmError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Booleanizes real-valued rows through the stored binarizer, or
    /// accepts rows that are already 0/1 when there is none.
    pub fn encode(&self, raw: &[Vec<f64>]) -> Result<Vec<Vec<bool>>> {
        match &self.binarization {
            Some(spec) => data::binarize(raw, spec),
            None => raw
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .map(|v| match *v {
                            v if v == 0.0 => Ok(false),
                            v if v == 1.0 => Ok(true),
                            v => Err(PtmError::input(format!(
                                "row {i}: value {v} is not boolean and the model has no binarizer"
                            ))),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Data prepared for one experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub label_names: Vec<String>,
    pub binarization: Option<BinarizationSpec>,
    pub input_bounds: Option<BoundingBox>,
    /// Real-valued test inputs, when the experiment has them.
    pub raw_test: Option<Vec<Vec<f64>>>,
}

fn binarized_split(table: &RawTable, config: &ExperimentConfig) -> Result<PreparedData> {
    let (train_raw, test_raw) = table.split(config.train_fraction, config.seed)?;
    let spec = data::fit_binarizer(&train_raw.features, config.bits)?;
    if spec.bit_count() == 0 {
        return Err(PtmError::input("binarization produced no bits"));
    }
    let input_bounds = (train_raw.feature_count() == 2)
        .then(|| BoundingBox::of_points(train_raw.features.iter().map(Vec::as_slice)))
        .flatten();
    Ok(PreparedData {
        train: train_raw.binarize(&spec)?,
        test: Some(test_raw.binarize(&spec)?),
        label_names: table.label_names.clone(),
        binarization: Some(spec),
        input_bounds,
        raw_test: Some(test_raw.features),
    })
}

/// Generates or loads the data named by `config.experiment`.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    match config.experiment {
        Experiment::XorSsp => Ok(PreparedData {
            train: data::gen_noisy_xor(config.train_size, config.noise, config.seed)?,
            test: Some(data::xor_truth_table()),
            label_names: vec!["0".into(), "1".into()],
            binarization: None,
            input_bounds: None,
            raw_test: None,
        }),
        Experiment::Synthetic2d => {
            let blobs = data::gen_blobs_2d(config.train_size, config.test_size, config.seed)?;
            let spec = data::fit_binarizer(&blobs.train.features, config.bits)?;
            Ok(PreparedData {
                train: blobs.train.binarize(&spec)?,
                test: None,
                label_names: blobs.train.label_names.clone(),
                binarization: Some(spec),
                input_bounds: Some(blobs.train_box),
                raw_test: Some(blobs.test),
            })
        }
        Experiment::Iris | Experiment::Custom => {
            let path = config
                .dataset
                .as_ref()
                .ok_or_else(|| PtmError::param("this experiment needs a dataset path"))?;
            let table = if config.experiment == Experiment::Iris {
                data::load_iris(path)?
            } else {
                data::load_csv(path)?
            };
            binarized_split(&table, config)
        }
    }
}

/// Builds and trains the machine selected by `config.mode`.
pub fn train_model(config: &ExperimentConfig, prepared: &PreparedData) -> Result<(ModelFile, TrainingHistory)> {
    config.validate()?;
    let machine_config = config.machine_config(prepared.train.feature_count());
    let classes = prepared.train.classes;
    let training = config.training_config();
    let test = prepared.test.as_ref();
    let (machine, history) = match config.mode {
        TmMode::Ptm => {
            let mut m = Ptm::new(machine_config, classes)?;
            let h = training::train(&mut m, &prepared.train, &training, test)?;
            (StoredMachine::Ptm(m), h)
        }
        TmMode::Classic => {
            let mut m = ClassicTm::new(machine_config, classes, &mut stream(config.seed, purpose::INIT))?;
            let h = training::train_classic(&mut m, &prepared.train, &training, test)?;
            (StoredMachine::Classic(m), h)
        }
    };
    let model = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        machine,
        label_names: prepared.label_names.clone(),
        binarization: prepared.binarization.clone(),
        input_bounds: prepared.input_bounds,
        provenance: ModelProvenance {
            experiment: config.experiment,
            seed: config.seed,
            epochs: config.epochs,
            dataset_digest: prepared.train.digest(),
        },
    };
    Ok((model, history))
}

/// One row of the state-probability dump.
#[derive(Debug, Clone, PartialEq)]
pub struct SspRow {
    pub class: usize,
    /// 1-based clause index.
    pub clause: usize,
    pub literal: String,
    pub include_probability: f64,
    pub states: Vec<f64>,
}

/// Every (class machine, clause, literal) distribution. Classic automata
/// appear as point masses.
pub fn ssp_rows(model: &ModelFile) -> Vec<SspRow> {
    let config = model.machine.config();
    let o = config.features;
    let n = config.states;
    let mut rows = Vec::new();
    match &model.machine {
        StoredMachine::Ptm(m) => {
            for (class, bank) in m.banks.iter().enumerate() {
                for (j, clause) in bank.clauses.iter().enumerate() {
                    for (k, spv) in clause.spvs().iter().enumerate() {
                        rows.push(SspRow {
                            class,
                            clause: j + 1,
                            literal: literal_name(k, o),
                            include_probability: clause.include_probability(k),
                            states: spv.probs().to_vec(),
                        });
                    }
                }
            }
        }
        StoredMachine::Classic(m) => {
            for (class, bank) in m.banks.iter().enumerate() {
                for (j, clause) in bank.clauses.iter().enumerate() {
                    for (k, ta) in clause.iter().enumerate() {
                        let mut states = vec![0.0; 2 * n];
                        states[ta.state() - 1] = 1.0;
                        rows.push(SspRow {
                            class,
                            clause: j + 1,
                            literal: literal_name(k, o),
                            include_probability: if ta.includes() { 1.0 } else { 0.0 },
                            states,
                        });
                    }
                }
            }
        }
    }
    rows
}

/// Regular grid over a rectangle, `nx × ny` points including the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn over(bounds: &BoundingBox, n: usize) -> Self {
        Self {
            x: (bounds.min[0], bounds.max[0]),
            y: (bounds.min[1], bounds.max[1]),
            nx: n,
            ny: n,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let axis = |(lo, hi): (f64, f64), n: usize| -> Vec<f64> {
            if n == 1 {
                return vec![0.5 * (lo + hi)];
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        let xs = axis(self.x, self.nx);
        let ys = axis(self.y, self.ny);
        ys.iter()
            .flat_map(|y| xs.iter().map(move |x| vec![*x, *y]))
            .collect()
    }
}

/// Metrics at one point of a two-feature binary model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub x1: f64,
    pub x2: f64,
    /// Predictive mean probability of class 1.
    pub mean: f64,
    pub entropy: f64,
    /// Class-1 standard deviation across samples.
    pub std: f64,
    pub mi: f64,
}

/// Evaluates a binary model with a binarizer over real-valued 2D points.
pub fn surface_rows(model: &ModelFile, points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<SurfaceRow>> {
    if model.machine.classes() != 2 {
        return Err(PtmError::param(format!(
            "surfaces need a two-class model, this one has {} classes",
            model.machine.classes()
        )));
    }
    let spec = model
        .binarization
        .as_ref()
        .ok_or_else(|| PtmError::param("surfaces need a model trained on real-valued inputs"))?;
    if spec.raw_features() != 2 {
        return Err(PtmError::param(format!(
            "surfaces need two input features, model has {}",
            spec.raw_features()
        )));
    }
    let encoded = data::binarize(points, spec)?;
    let reports = model.machine.reports(&encoded, k, seed)?;
    Ok(points
        .iter()
        .zip(reports)
        .map(|(p, r)| SurfaceRow {
            x1: p[0],
            x2: p[1],
            mean: r.mean_probs[1],
            entropy: r.entropy_bits,
            std: r.std_per_class[1],
            mi: r.mutual_information_bits,
        })
        .collect())
}

/// Per-example outcome of a batch evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRow {
    pub index: usize,
    pub true_label: usize,
    pub predicted: usize,
    pub correct: bool,
    pub confidence: f64,
    pub entropy: f64,
    pub mutual_information: f64,
}

/// Aggregate of a batch evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub examples: usize,
    pub samples: usize,
    pub bins: usize,
    pub accuracy: f64,
    pub ece: f64,
    pub mean_entropy: f64,
    pub mean_mutual_information: f64,
    /// Mean over examples of the per-class standard deviation.
    pub mean_std: Vec<f64>,
    pub mean_entropy_correct: Option<f64>,
    pub mean_entropy_incorrect: Option<f64>,
    pub mean_mi_correct: Option<f64>,
    pub mean_mi_incorrect: Option<f64>,
    pub reliability: Vec<CalibrationBin>,
}

fn mean_where(rows: &[ExampleRow], correct: bool, value: impl Fn(&ExampleRow) -> f64) -> Option<f64> {
    let picked: Vec<f64> = rows.iter().filter(|r| r.correct == correct).map(value).collect();
    (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
}

/// Predicts every row of `data` with `k` samples. Predictions and
/// confidences come from the predictive mean.
pub fn evaluate(
    machine: &StoredMachine,
    data: &Dataset,
    k: usize,
    bins: usize,
    seed: u64,
) -> Result<(EvalSummary, Vec<ExampleRow>)> {
    if data.is_empty() {
        return Err(PtmError::input("evaluation dataset is empty"));
    }
    if data.feature_count() != machine.config().features {
        return Err(PtmError::input(format!(
            "dataset has {} features, model expects {}",
            data.feature_count(),
            machine.config().features
        )));
    }
    if let Some(y) = data.labels.iter().find(|y| **y >= machine.classes()) {
        return Err(PtmError::input(format!(
            "label {y} outside the model's {} classes",
            machine.classes()
        )));
    }
    let reports = machine.reports(&data.features, k, seed)?;
    let rows: Vec<ExampleRow> = reports
        .iter()
        .zip(&data.labels)
        .enumerate()
        .map(|(index, (r, y))| ExampleRow {
            index,
            true_label: *y,
            predicted: r.predicted_class(),
            correct: r.predicted_class() == *y,
            confidence: r.confidence(),
            entropy: r.entropy_bits,
            mutual_information: r.mutual_information_bits,
        })
        .collect();
    let confidences: Vec<f64> = rows.iter().map(|r| r.confidence).collect();
    let correct: Vec<bool> = rows.iter().map(|r| r.correct).collect();
    let calibration = uncertainty::ece(&confidences, &correct, bins)?;
    let n = rows.len() as f64;
    let classes = machine.classes();
    let mut mean_std = vec![0.0; classes];
    for r in &reports {
        for (acc, s) in mean_std.iter_mut().zip(&r.std_per_class) {
            *acc += s / n;
        }
    }
    let summary = EvalSummary {
        examples: rows.len(),
        samples: k,
        bins,
        accuracy: correct.iter().filter(|c| **c).count() as f64 / n,
        ece: calibration.ece,
        mean_entropy: rows.iter().map(|r| r.entropy).sum::<f64>() / n,
        mean_mutual_information: rows.iter().map(|r| r.mutual_information).sum::<f64>() / n,
        mean_std,
        mean_entropy_correct: mean_where(&rows, true, |r| r.entropy),
        mean_entropy_incorrect: mean_where(&rows, false, |r| r.entropy),
        mean_mi_correct: mean_where(&rows, true, |r| r.mutual_information),
        mean_mi_incorrect: mean_where(&rows, false, |r| r.mutual_information),
        reliability: calibration.bins,
    };
    Ok((summary, rows))
}

/// Mean metrics over one region of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionStats {
    pub points: usize,
    pub mean_entropy: f64,
    /// Mean class-1 standard deviation.
    pub mean_std: f64,
}

impl RegionStats {
    fn of<'a>(rows: impl Iterator<Item = &'a SurfaceRow>) -> Self {
        let mut s = Self::default();
        for r in rows {
            s.points += 1;
            s.mean_entropy += r.entropy;
            s.mean_std += r.std;
        }
        if s.points > 0 {
            s.mean_entropy /= s.points as f64;
            s.mean_std /= s.points as f64;
        }
        s
    }
}

/// Where a point sits relative to the two training clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Within one `sigma` of a cluster mean.
    Core,
    /// Within `sigma / 2` of the perpendicular bisector of the means, and
    /// no further along it than half the distance between the means.
    Band,
    Other,
}

pub fn classify_region(p: &[f64], config: &data::BlobsConfig) -> Region {
    let [m0, m1] = config.means;
    let dist = |m: [f64; 2]| ((p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2)).sqrt();
    if dist(m0) <= config.sigma || dist(m1) <= config.sigma {
        return Region::Core;
    }
    let axis = [m1[0] - m0[0], m1[1] - m0[1]];
    let gap = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    let u = [axis[0] / gap, axis[1] / gap];
    let d = [p[0] - 0.5 * (m0[0] + m1[0]), p[1] - 0.5 * (m0[1] + m1[1])];
    let along = d[0] * u[0] + d[1] * u[1];
    let across = (d[0] * u[1] - d[1] * u[0]).abs();
    if along.abs() <= 0.5 * config.sigma && across <= 0.5 * gap {
        Region::Band
    } else {
        Region::Other
    }
}

/// Region statistics of one synthetic 2D run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSummary {
    pub seed: u64,
    pub train_accuracy: Option<f64>,
    /// Test points outside the training bounding box.
    pub outside: RegionStats,
    /// Grid points over the training box within one sigma of a mean.
    pub core: RegionStats,
    /// Grid points over the training box in the band between the clusters.
    pub band: RegionStats,
}

impl SyntheticSummary {
    pub fn entropy_ratio(&self) -> f64 {
        self.outside.mean_entropy / self.core.mean_entropy
    }
}

/// Grid points per axis over the training box for the core and band
/// statistics.
pub const REGION_GRID: usize = 100;

/// Trains on two Gaussian clusters and summarizes uncertainty. Entropy
/// outside the training box comes from the uniform test points; cores and
/// the band are measured on a dense grid over the training box, since few
/// test points land there. Returns the test-point rows as well.
pub fn run_synthetic(config: &ExperimentConfig) -> Result<(ModelFile, SyntheticSummary, Vec<SurfaceRow>)> {
    let mut config = config.clone();
    config.experiment = Experiment::Synthetic2d;
    let blobs = data::gen_blobs_2d(config.train_size, config.test_size, config.seed)?;
    let prepared = prepare_data(&config)?;
    let (model, history) = train_model(&config, &prepared)?;
    let rows = surface_rows(&model, &blobs.test, config.samples, config.seed)?;
    let grid = GridSpec::over(&blobs.train_box, REGION_GRID).points();
    let grid_rows = surface_rows(&model, &grid, config.samples, config.seed ^ purpose::MONITOR)?;
    let blobs_config = &blobs.config;
    let region = |want: Region| {
        RegionStats::of(
            grid_rows
                .iter()
                .filter(move |r| classify_region(&[r.x1, r.x2], blobs_config) == want),
        )
    };
    let summary = SyntheticSummary {
        seed: config.seed,
        train_accuracy: history.epochs.last().and_then(|e| e.train_accuracy),
        outside: RegionStats::of(rows.iter().filter(|r| !blobs.train_box.contains(&[r.x1, r.x2]))),
        core: region(Region::Core),
        band: region(Region::Band),
    };
    Ok((model, summary, rows))
}

/// Summary of an Iris calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrisSummary {
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    #[serde(flatten)]
    pub eval: EvalSummary,
}

/// Trains on a stratified split of the Iris file and evaluates the held-out
/// rows.
pub fn run_iris(config: &ExperimentConfig) -> Result<(ModelFile, IrisSummary, Vec<ExampleRow>)> {
    let mut config = config.clone();
    config.experiment = Experiment::Iris;
    let prepared = prepare_data(&config)?;
    let (model, _) = train_model(&config, &prepared)?;
    let test = prepared.test.as_ref().expect("split always has a test side");
    let (eval, rows) = evaluate(&model.machine, test, config.samples, config.bins, config.seed)?;
    let summary = IrisSummary {
        seed: config.seed,
        train_rows: prepared.train.len(),
        test_rows: test.len(),
        eval,
    };
    Ok((model, summary, rows))
}
