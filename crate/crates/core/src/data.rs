//! Datasets: generators, CSV ingestion, booleanization and stratified
//! splitting.

use std::collections::BTreeSet;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PtmError, Result};

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    pub noise: Option<f64>,
    pub binarization: Option<BinarizationSpec>,
}

/// Boolean feature matrix with integer labels in `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<bool>>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(features: Vec<Vec<bool>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let dataset = Self {
            features,
            labels,
            classes,
            provenance: Provenance::default(),
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(PtmError::input(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        if let Some(width) = self.features.first().map(Vec::len) {
            if width == 0 {
                return Err(PtmError::input("dataset has no features"));
            }
            if let Some(i) = self.features.iter().position(|r| r.len() != width) {
                return Err(PtmError::input(format!(
                    "row {i} has {} features, expected {width}",
                    self.features[i].len()
                )));
            }
        }
        if let Some(i) = self.labels.iter().position(|y| *y >= self.classes) {
            return Err(PtmError::input(format!(
                "label {} at row {i} outside 0..{}",
                self.labels[i], self.classes
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature width `o` (0 for an empty dataset).
    pub fn feature_count(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            provenance: self.provenance.clone(),
        }
    }

    /// Stratified split into `(train, test)`.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let (train, test) = split_indices(&self.labels, train_fraction, seed)?;
        Ok((self.subset(&train), self.subset(&test)))
    }

    /// SHA-256 over the bit matrix and labels, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.classes as u64).to_le_bytes());
        for (row, label) in self.features.iter().zip(&self.labels) {
            let bytes: Vec<u8> = row.iter().map(|b| u8::from(*b)).collect();
            hasher.update(&bytes);
            hasher.update((*label as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// Real-valued feature table with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Name of each class index.
    pub label_names: Vec<String>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Per-class row counts.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for y in &self.labels {
            counts[*y] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
        }
    }

    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let (train, test) = split_indices(&self.labels, train_fraction, seed)?;
        Ok((self.subset(&train), self.subset(&test)))
    }

    /// Booleanizes through `spec` into a [`Dataset`].
    pub fn binarize(&self, spec: &BinarizationSpec) -> Result<Dataset> {
        let features = binarize(&self.features, spec)?;
        let provenance = Provenance {
            binarization: Some(spec.clone()),
            ..Provenance::default()
        };
        Ok(Dataset::new(features, self.labels.clone(), self.classes())?.with_provenance(provenance))
    }
}

/// Noisy XOR over two uniform random bits. Each label is `x1 ⊕ x2`,
/// inverted independently with probability `noise`.
pub fn gen_noisy_xor(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(PtmError::param("sample count must be >= 1"));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(PtmError::param(format!("noise {noise} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: bool = rng.gen();
        let x2: bool = rng.gen();
        let flip = rng.gen::<f64>() < noise;
        features.push(vec![x1, x2]);
        labels.push(usize::from((x1 ^ x2) ^ flip));
    }
    Ok(Dataset::new(features, labels, 2)?.with_provenance(Provenance {
        generator: "noisy-xor".into(),
        seed: Some(seed),
        noise: Some(noise),
        binarization: None,
    }))
}

/// The four XOR rows with their true labels.
pub fn xor_truth_table() -> Dataset {
    let features = vec![
        vec![false, false],
        vec![false, true],
        vec![true, false],
        vec![true, true],
    ];
    Dataset::new(features, vec![0, 1, 1, 0], 2)
        .expect("static table is valid")
        .with_provenance(Provenance {
            generator: "xor-truth-table".into(),
            ..Provenance::default()
        })
}

/// Axis-aligned rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BoundingBox {
            min: [first[0], first[1]],
            max: [first[0], first[1]],
        };
        for p in it {
            for d in 0..2 {
                b.min[d] = b.min[d].min(p[d]);
                b.max[d] = b.max[d].max(p[d]);
            }
        }
        Some(b)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (0..2).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    /// Same centre, each side multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        for d in 0..2 {
            let centre = 0.5 * (self.min[d] + self.max[d]);
            let half = 0.5 * (self.max[d] - self.min[d]) * factor;
            out.min[d] = centre - half;
            out.max[d] = centre + half;
        }
        out
    }
}

/// Parameters of the two-cluster synthetic problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobsConfig {
    pub means: [[f64; 2]; 2],
    pub sigma: f64,
    /// Side-length factor of the test box relative to the training box.
    pub test_expansion: f64,
}

impl Default for BlobsConfig {
    fn default() -> Self {
        Self {
            means: [[-1.5, -1.5], [1.5, 1.5]],
            sigma: 0.8,
            test_expansion: 3.0,
        }
    }
}

/// Training clusters plus unlabeled test points over a wider box.
#[derive(Debug, Clone, PartialEq)]
pub struct Blobs2d {
    pub train: RawTable,
    pub test: Vec<Vec<f64>>,
    pub train_box: BoundingBox,
    pub test_box: BoundingBox,
    pub config: BlobsConfig,
}

pub fn gen_blobs_2d(n_train: usize, n_test: usize, seed: u64) -> Result<Blobs2d> {
    gen_blobs_2d_with(&BlobsConfig::default(), n_train, n_test, seed)
}

/// Two isotropic Gaussian clusters, class 0 first, `n_train / 2` rows in
/// class 0 and the rest in class 1. Test points are uniform over the
/// training bounding box scaled by `test_expansion`.
pub fn gen_blobs_2d_with(config: &BlobsConfig, n_train: usize, n_test: usize, seed: u64) -> Result<Blobs2d> {
    if n_train < 2 || n_test == 0 {
        return Err(PtmError::param("need at least 2 training and 1 test point"));
    }
    if !(config.sigma > 0.0) || !(config.test_expansion >= 1.0) {
        return Err(PtmError::param("sigma must be > 0 and test expansion >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, config.sigma).map_err(|e| PtmError::param(e.to_string()))?;
    let per_class = [n_train / 2, n_train - n_train / 2];
    let mut features = Vec::with_capacity(n_train);
    let mut labels = Vec::with_capacity(n_train);
    for (class, count) in per_class.iter().enumerate() {
        let mean = config.means[class];
        for _ in 0..*count {
            features.push(vec![
                mean[0] + normal.sample(&mut rng),
                mean[1] + normal.sample(&mut rng),
            ]);
            labels.push(class);
        }
    }
    let train_box = BoundingBox::of_points(features.iter().map(Vec::as_slice)).expect("non-empty");
    let test_box = train_box.scaled(config.test_expansion);
    let test = (0..n_test)
        .map(|_| {
            vec![
                rng.gen_range(test_box.min[0]..=test_box.max[0]),
                rng.gen_range(test_box.min[1]..=test_box.max[1]),
            ]
        })
        .collect();
    Ok(Blobs2d {
        train: RawTable {
            features,
            labels,
            label_names: vec!["0".into(), "1".into()],
        },
        test,
        train_box,
        test_box,
        config: config.clone(),
    })
}

/// Reads Iris-style CSV and requires exactly four feature columns.
pub fn load_iris(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let table = load_csv(path)?;
    if table.feature_count() != 4 {
        return Err(PtmError::Parse {
            path: path.to_path_buf(),
            row: 1,
            message: format!("expected 4 feature columns, found {}", table.feature_count()),
        });
    }
    Ok(table)
}

/// Reads comma-separated numeric feature columns followed by one label
/// column. A first row whose feature fields are not all numeric is taken
/// as a header. Labels that all parse as non-negative integers are used as
/// class indices; otherwise distinct label strings are indexed in sorted
/// order.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| PtmError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |row: usize, message: String| PtmError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_err(row, "need at least one feature and a label".into()));
        }
        let n_feat = record.len() - 1;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().take(n_feat).map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 1 => continue, // header
            Err(e) => return Err(parse_err(row, format!("non-numeric feature: {e}"))),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(row, "non-finite feature value".into()));
        }
        match width {
            None => width = Some(n_feat),
            Some(w) if w != n_feat => {
                return Err(parse_err(row, format!("{} fields, expected {}", record.len(), w + 1)));
            }
            _ => {}
        }
        let label = record.get(n_feat).unwrap_or_default();
        if label.is_empty() {
            return Err(parse_err(row, "empty label".into()));
        }
        features.push(values);
        raw_labels.push(label.to_string());
    }
    if features.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }

    let numeric: Option<Vec<usize>> = raw_labels.iter().map(|l| l.parse::<usize>().ok()).collect();
    let (labels, label_names) = match numeric {
        Some(labels) => {
            let classes = labels.iter().max().map_or(0, |m| m + 1);
            (labels, (0..classes).map(|c| c.to_string()).collect())
        }
        None => {
            let names: Vec<String> = raw_labels
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let labels = raw_labels
                .iter()
                .map(|l| names.binary_search(l).expect("name collected above"))
                .collect();
            (labels, names)
        }
    };
    Ok(RawTable {
        features,
        labels,
        label_names,
    })
}

/// Per-feature thermometer thresholds; bit `i` of a feature is set iff
/// the value exceeds `thresholds[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizationSpec {
    pub thresholds: Vec<Vec<f64>>,
}

impl BinarizationSpec {
    pub fn validate(&self) -> Result<()> {
        for (f, t) in self.thresholds.iter().enumerate() {
            if t.iter().any(|x| !x.is_finite()) || t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PtmError::param(format!(
                    "thresholds of feature {f} are not strictly increasing finite values"
                )));
            }
        }
        Ok(())
    }

    pub fn raw_features(&self) -> usize {
        self.thresholds.len()
    }

    /// Width of the booleanized vector.
    pub fn bit_count(&self) -> usize {
        self.thresholds.iter().map(Vec::len).sum()
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Thresholds at the `i/(b+1)` quantiles (`i = 1..=b`) of each training
/// column. Repeated quantiles collapse and a threshold at the column
/// maximum is dropped, so heavily tied columns get fewer bits; a constant
/// column gets none.
pub fn fit_binarizer(raw: &[Vec<f64>], bits_per_feature: usize) -> Result<BinarizationSpec> {
    if bits_per_feature == 0 {
        return Err(PtmError::param("bits per feature must be >= 1"));
    }
    let width = raw.first().map(Vec::len).ok_or_else(|| PtmError::input("no training rows"))?;
    if raw.iter().any(|r| r.len() != width) {
        return Err(PtmError::input("ragged feature matrix"));
    }
    let thresholds = (0..width)
        .map(|f| {
            let mut column: Vec<f64> = raw.iter().map(|r| r[f]).collect();
            column.sort_by(f64::total_cmp);
            let max = *column.last().expect("non-empty");
            if column[0] == max {
                warn!("feature {f} is constant on the training split; it gets no bits");
                return Vec::new();
            }
            let mut t: Vec<f64> = Vec::with_capacity(bits_per_feature);
            for i in 1..=bits_per_feature {
                let q = quantile(&column, i as f64 / (bits_per_feature + 1) as f64);
                if q < max && t.last().map_or(true, |last| q > *last) {
                    t.push(q);
                }
            }
            t
        })
        .collect();
    Ok(BinarizationSpec { thresholds })
}

/// Thermometer encoding of each row; features are concatenated in column
/// order.
pub fn binarize(raw: &[Vec<f64>], spec: &BinarizationSpec) -> Result<Vec<Vec<bool>>> {
    raw.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != spec.raw_features() {
                return Err(PtmError::input(format!(
                    "row {i} has {} values, binarizer expects {}",
                    row.len(),
                    spec.raw_features()
                )));
            }
            Ok(row
                .iter()
                .zip(&spec.thresholds)
                .flat_map(|(v, t)| t.iter().map(move |th| v > th))
                .collect())
        })
        .collect()
}

/// Stratified `(train, test)` row indices, each sorted ascending. Every
/// class gets `round(count · fraction)` training rows, clamped so both
/// sides keep at least one row.
pub fn split_indices(labels: &[usize], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PtmError::param(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, y) in labels.iter().enumerate() {
        members[*y].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, rows) in members.iter_mut().enumerate() {
        match rows.len() {
            0 => continue,
            1 => {
                return Err(PtmError::Stratification(format!(
                    "class {class} has a single member"
                )))
            }
            n => {
                rows.shuffle(&mut rng);
                let k = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
                train.extend_from_slice(&rows[..k]);
                test.extend_from_slice(&rows[k..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
