//! Labeled data, Universum synthesis, normalization and fold splitting.

use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod synth;

/// Labeled samples with labels in `{+1, −1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("dataset".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let n = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != n {
                return Err(Error::Dimension(format!(
                    "point {i} has {} features, expected {n}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("point {i}")));
            }
        }
        if let Some(i) = labels.iter().position(|y| *y != 1.0 && *y != -1.0) {
            return Err(Error::Data(format!(
                "label {} at row {i} is not +1 or -1",
                labels[i]
            )));
        }
        Ok(Self {
            points,
            labels,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} feature names for {} features",
                names.len(),
                self.dim()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Indices of samples carrying `label`.
    pub fn class_indices(&self, label: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// `(#positive, #negative)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|y| **y > 0.0).count();
        (pos, self.len() - pos)
    }

    pub fn is_single_class(&self) -> bool {
        let (p, n) = self.class_counts();
        p == 0 || n == 0
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Self::new(points, labels)?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Same labels, new coordinates.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = Self::new(points, self.labels.clone())?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Feature names, or `x1, x2, …` when the source had none.
    pub fn header(&self) -> Vec<String> {
        match &self.feature_names {
            Some(names) => names.clone(),
            None => (1..=self.dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    /// Writes a header row (features then `label_name`), labels as `1` / `-1`.
    pub fn write_csv<W: io::Write>(&self, out: W, label_name: &str) -> Result<()> {
        write_labeled_csv(out, &self.header(), label_name, &self.points, &self.labels)
    }
}

fn write_labeled_csv<W: io::Write>(
    out: W,
    features: &[String],
    label_name: &str,
    points: &[Vec<f64>],
    labels: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = features.to_vec();
    header.push(label_name.to_string());
    w.write_record(&header)?;
    for (p, y) in points.iter().zip(labels) {
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        row.push(if *y > 0.0 { "1".into() } else { "-1".into() });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Which CSV column carries the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// A bare non-negative integer is read as a 0-based index, anything else
    /// as a header name. A header that literally matches still wins at load time.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: &csv::StringRecord) -> Result<usize> {
        let by_name = |name: &str| header.iter().position(|h| h.trim() == name);
        match self {
            LabelColumn::Name(name) => by_name(name)
                .ok_or_else(|| Error::Data(format!("label column '{name}' not found"))),
            LabelColumn::Index(i) => {
                if let Some(pos) = by_name(&i.to_string()) {
                    return Ok(pos);
                }
                if *i < header.len() {
                    Ok(*i)
                } else {
                    Err(Error::Data(format!(
                        "label column index {i} out of range ({} columns)",
                        header.len()
                    )))
                }
            }
        }
    }
}

/// Reads a comma-separated file with a header row. Rows whose label equals
/// `positive_label` become `+1`, every other row `−1`.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    positive_label: &str,
) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, label_column, positive_label)
}

pub fn read_csv<R: io::Read>(
    input: R,
    label_column: &LabelColumn,
    positive_label: &str,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    let label_idx = label_column.resolve(&header)?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        let mut point = Vec::with_capacity(names.len());
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                continue;
            }
            let cell = cell.trim();
            let value: f64 = cell.parse().map_err(|_| Error::Cell {
                row,
                column: header.get(col).unwrap_or("?").to_string(),
                message: format!("'{cell}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Cell {
                    row,
                    column: header.get(col).unwrap_or("?").to_string(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            point.push(value);
        }
        let raw = record.get(label_idx).map(str::trim).unwrap_or_default();
        labels.push(if raw == positive_label { 1.0 } else { -1.0 });
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::Empty("dataset".into()));
    }
    let data = LabeledDataset::new(points, labels)?.with_feature_names(names)?;
    if data.is_single_class() {
        log::warn!("dataset contains a single class");
    }
    Ok(data)
}

/// Per-feature min/max learned on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Transformed test values are clamped into this range.
pub const NORM_CLAMP: (f64, f64) = (-0.5, 1.5);

pub fn fit_normalizer(train: &LabeledDataset) -> NormParams {
    fit_normalizer_points(train.points())
}

pub fn fit_normalizer_points(points: &[Vec<f64>]) -> NormParams {
    let n = points.first().map_or(0, Vec::len);
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for p in points {
        for k in 0..n {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    NormParams { min, max }
}

impl NormParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// `(x − min)/(max − min)` clamped to [`NORM_CLAMP`]; constant features map to 0.
    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| {
                let span = self.max[k] - self.min[k];
                if span > 0.0 {
                    ((v - self.min[k]) / span).clamp(NORM_CLAMP.0, NORM_CLAMP.1)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn apply(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points.iter().map(|p| self.apply_point(p)).collect()
    }

    pub fn apply_dataset(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "normalizer fitted on {} features, data has {}",
                self.dim(),
                data.dim()
            )));
        }
        data.with_points(self.apply(data.points()))
    }
}

/// Unlabeled Universum points with the pair of training samples each one
/// was averaged from.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversumSet {
    pub points: Vec<Vec<f64>>,
    /// `(positive index, negative index)` into the source dataset.
    pub parents: Vec<(usize, usize)>,
}

impl UniversumSet {
    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            parents: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Universum rows duplicated with both labels: rows `0..r` carry `+1`,
/// rows `r..2r` repeat them with `−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedUniversum {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl ExpandedUniversum {
    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Number of distinct Universum points `r`.
    pub fn distinct(&self) -> usize {
        self.points.len() / 2
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: io::Write>(&self, out: W, features: &[String], label: &str) -> Result<()> {
        write_labeled_csv(out, features, label, &self.points, &self.labels)
    }
}

fn select_count(fraction: f64, m: usize) -> usize {
    // the small slack keeps 0.1 * 100 at 10 despite rounding in the product
    ((fraction * m as f64 - 1e-9).ceil() as usize).clamp(1, m)
}

/// Averages randomly matched cross-class pairs drawn from a `fraction` of
/// each class.
pub fn generate_universum(data: &LabeledDataset, fraction: f64, seed: u64) -> Result<UniversumSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "universum fraction must be in (0, 1], got {fraction}"
        )));
    }
    let pos = data.class_indices(1.0);
    let neg = data.class_indices(-1.0);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Empty("class; universum needs both classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |idx: &[usize], rng: &mut ChaCha8Rng| -> Vec<usize> {
        let k = select_count(fraction, idx.len());
        rand::seq::index::sample(rng, idx.len(), k)
            .into_iter()
            .map(|i| idx[i])
            .collect()
    };
    let mut pos_sel = pick(&pos, &mut rng);
    let mut neg_sel = pick(&neg, &mut rng);
    pos_sel.shuffle(&mut rng);
    neg_sel.shuffle(&mut rng);
    let r = pos_sel.len().min(neg_sel.len());

    let mut points = Vec::with_capacity(r);
    let mut parents = Vec::with_capacity(r);
    for (&i, &j) in pos_sel.iter().zip(&neg_sel).take(r) {
        let a = &data.points()[i];
        let b = &data.points()[j];
        points.push(a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect());
        parents.push((i, j));
    }
    Ok(UniversumSet { points, parents })
}

pub fn expand_universum(u: &UniversumSet) -> ExpandedUniversum {
    let r = u.len();
    let mut points = Vec::with_capacity(2 * r);
    points.extend(u.points.iter().cloned());
    points.extend(u.points.iter().cloned());
    let labels = std::iter::repeat_n(1.0, r)
        .chain(std::iter::repeat_n(-1.0, r))
        .collect();
    ExpandedUniversum { points, labels }
}

/// One train/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub folds: Vec<Fold>,
    /// False when some class had fewer than `k` members and the split fell
    /// back to plain shuffling.
    pub stratified: bool,
}

/// Class-stratified k-fold split. Each class is shuffled and dealt
/// round-robin over the folds, continuing where the previous class stopped.
pub fn kfold_split(data: &LabeledDataset, k: usize, seed: u64) -> Result<FoldSplit> {
    let m = data.len();
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be at least 2, got {k}")));
    }
    if m < k {
        return Err(Error::InvalidParam(format!(
            "{m} samples cannot fill {k} folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = data.class_indices(1.0);
    let neg = data.class_indices(-1.0);
    let stratified = pos.len() >= k && neg.len() >= k;
    if !stratified {
        log::warn!(
            "class sizes ({}, {}) below k={k}; using unstratified folds",
            pos.len(),
            neg.len()
        );
    }
    let groups: Vec<Vec<usize>> = if stratified {
        vec![pos, neg]
    } else {
        vec![(0..m).collect()]
    };

    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut slot = 0;
    for mut group in groups {
        group.shuffle(&mut rng);
        for idx in group {
            tests[slot % k].push(idx);
            slot += 1;
        }
    }
    let folds = tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; m];
            for &i in &test {
                in_test[i] = true;
            }
            let train = (0..m).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect();
    Ok(FoldSplit { folds, stratified })
}
