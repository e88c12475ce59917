//! Experiment protocol: k-fold cross-validation with per-fold normalization
//! and Universum generation, log₂ grid search, the (C_u, ε) colormap, the
//! Universum-rate curve, and CSV emission of their tables.

use std::io;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    expand_universum, fit_normalizer, generate_universum, kfold_split, ExpandedUniversum,
    LabeledDataset, NormParams,
};
use crate::error::{Error, Result};
use crate::models::{train_model, Hyperparams, ModelKind, SolveStatus, TrainOptions};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "QSURF_THREADS";

/// Share of each class used for Universum generation inside a fold.
pub const DEFAULT_UNIVERSUM_FRACTION: f64 = 0.1;

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|n| *n > 0)
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    })
}

/// SplitMix64 step, used to derive independent sub-seeds from one master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `op` and returns its value with the elapsed wall-clock seconds.
pub fn timed<T>(op: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = op();
    (out, start.elapsed().as_secs_f64())
}

/// Percentage of matching labels.
pub fn accuracy(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("label list".into()));
    }
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(100.0 * correct as f64 / labels.len() as f64)
}

/// Rounds to the 6 decimals used in emitted tables, so that a table read
/// back from CSV equals the one in memory.
pub fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub universum_fraction: f64,
    /// Mixed into the Universum seeds only, so repeated Universum draws can
    /// share one fold split.
    pub universum_stream: u64,
    pub train: TrainOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            universum_fraction: DEFAULT_UNIVERSUM_FRACTION,
            universum_stream: 0,
            train: TrainOptions::default(),
        }
    }
}

/// What one fold trained on and how it scored.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub norm: NormParams,
    /// Parent pair of each Universum point, as indices into the full data.
    pub universum_parents: Vec<(usize, usize)>,
    pub accuracy: f64,
    /// Set when training failed; the fold then scores 0.
    pub error: Option<String>,
    pub status: Option<SolveStatus>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub folds: Vec<FoldRecord>,
    pub stratified: bool,
    pub warnings: Vec<String>,
    /// Summed training time over folds.
    pub train_seconds: f64,
    pub wall_seconds: f64,
}

impl CvResult {
    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.error.is_some()).count()
    }

    pub fn summary(&self) -> CvSummary {
        CvSummary {
            model: self.kind,
            mu: self.hyperparams.mu,
            lambda: self.hyperparams.lambda,
            c_u: self.hyperparams.c_u,
            eps: self.hyperparams.eps,
            mean_accuracy: self.mean_accuracy,
            std_accuracy: self.std_accuracy,
            fold_accuracies: self.fold_accuracies.clone(),
        }
    }
}

fn run_fold(
    kind: ModelKind,
    data: &LabeledDataset,
    h: &Hyperparams,
    opts: &CvOptions,
    fold_index: usize,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<FoldRecord> {
    let train_raw = data.subset(train_idx)?;
    let test_raw = data.subset(test_idx)?;
    let norm = fit_normalizer(&train_raw);
    let train = norm.apply_dataset(&train_raw)?;
    let test = norm.apply_dataset(&test_raw)?;
    let (universum, parents) = if kind.uses_universum() {
        let seed = derive_seed(derive_seed(opts.seed, 1000 + fold_index as u64), opts.universum_stream);
        let u = generate_universum(&train, opts.universum_fraction, seed)?;
        let parents = u.parents.iter().map(|&(a, b)| (train_idx[a], train_idx[b])).collect();
        (expand_universum(&u), parents)
    } else {
        (ExpandedUniversum::empty(), Vec::new())
    };
    let (trained, seconds) = timed(|| train_model(kind, &train, &universum, h, &opts.train));
    let mut record = FoldRecord {
        train: train_idx.to_vec(),
        test: test_idx.to_vec(),
        norm,
        universum_parents: parents,
        accuracy: 0.0,
        error: None,
        status: None,
        seconds,
    };
    match trained {
        Ok(model) => {
            let preds: Vec<f64> = test
                .points()
                .iter()
                .map(|x| model.classifier.predict(x))
                .collect::<Result<_>>()?;
            record.accuracy = accuracy(&preds, test.labels())?;
            record.status = Some(model.report.status);
        }
        Err(e) => {
            log::warn!("{kind} fold {fold_index} failed: {e}");
            record.error = Some(e.to_string());
        }
    }
    Ok(record)
}

/// k-fold cross-validation. Each fold fits the normalizer and draws the
/// Universum from its own training part only.
pub fn cross_validate(
    kind: ModelKind,
    data: &LabeledDataset,
    h: &Hyperparams,
    opts: &CvOptions,
) -> Result<CvResult> {
    h.validate()?;
    let start = Instant::now();
    let split = kfold_split(data, opts.k, opts.seed)?;
    let mut warnings = Vec::new();
    if !split.stratified {
        warnings.push(format!(
            "a class has fewer than k = {} members; folds are not stratified",
            opts.k
        ));
    }
    let folds: Vec<FoldRecord> = pool().install(|| {
        split
            .folds
            .par_iter()
            .enumerate()
            .map(|(i, f)| run_fold(kind, data, h, opts, i, &f.train, &f.test))
            .collect::<Result<Vec<_>>>()
    })?;
    for (i, f) in folds.iter().enumerate() {
        if let Some(e) = &f.error {
            warnings.push(format!("fold {i} failed: {e}"));
        }
    }
    let fold_accuracies: Vec<f64> = folds.iter().map(|f| quantize(f.accuracy)).collect();
    let (mean, std) = mean_std(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
    Ok(CvResult {
        kind,
        hyperparams: *h,
        mean_accuracy: quantize(mean),
        std_accuracy: quantize(std),
        fold_accuracies,
        train_seconds: folds.iter().map(|f| f.seconds).sum(),
        folds,
        stratified: split.stratified,
        warnings,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Candidate values for each hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub c_u: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Default for GridSpec {
    /// `log₂ μ ∈ −4..20`, `log₂ λ ∈ −8..20`, `log₂ C_u ∈ −4..10`,
    /// `log₂ ε ∈ −8..0`.
    fn default() -> Self {
        Self {
            mu: powers_of_two(-4, 20),
            lambda: powers_of_two(-8, 20),
            c_u: powers_of_two(-4, 10),
            eps: powers_of_two(-8, 0),
        }
    }
}

/// `2^lo, …, 2^hi`.
pub fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

impl GridSpec {
    pub fn single(h: &Hyperparams) -> Self {
        Self {
            mu: vec![h.mu],
            lambda: vec![h.lambda],
            c_u: vec![h.c_u],
            eps: vec![h.eps],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, vals) in [("mu", &self.mu), ("lambda", &self.lambda), ("c_u", &self.c_u), ("eps", &self.eps)] {
            if vals.is_empty() {
                bad.push(format!("{name} grid is empty"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParam(bad.join("; ")))
        }
    }

    /// Grid points relevant to `kind`: axes the model ignores collapse to 0.
    pub fn points(&self, kind: ModelKind) -> Vec<Hyperparams> {
        let zero = [0.0];
        let lambda: &[f64] = if kind.uses_l1() { &self.lambda } else { &zero };
        let c_u: &[f64] = if kind.uses_universum() { &self.c_u } else { &zero };
        let eps: &[f64] = if kind.uses_universum() { &self.eps } else { &zero };
        let mut out = Vec::new();
        for &mu in &self.mu {
            for &l in lambda {
                for &c in c_u {
                    for &e in eps {
                        out.push(Hyperparams {
                            mu,
                            lambda: l,
                            c_u: c,
                            eps: e,
                        });
                    }
                }
            }
        }
        out
    }
}

fn hp_key(h: &Hyperparams) -> [f64; 4] {
    [h.mu, h.lambda, h.c_u, h.eps]
}

fn by_hyperparams(a: &CvResult, b: &CvResult) -> std::cmp::Ordering {
    let (ka, kb) = (hp_key(&a.hyperparams), hp_key(&b.hyperparams));
    ka.iter()
        .zip(&kb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Best of a set of results: highest mean, then lowest std, then the
/// smallest `(μ, λ, C_u, ε)`.
pub fn pick_best(results: &[CvResult]) -> Option<&CvResult> {
    results.iter().min_by(|a, b| {
        b.mean_accuracy
            .total_cmp(&a.mean_accuracy)
            .then(a.std_accuracy.total_cmp(&b.std_accuracy))
            .then_with(|| by_hyperparams(a, b))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: CvResult,
    /// Every grid point, ordered by `(μ, λ, C_u, ε)`.
    pub table: Vec<CvResult>,
}

pub fn grid_search(
    kind: ModelKind,
    data: &LabeledDataset,
    grid: &GridSpec,
    opts: &CvOptions,
) -> Result<GridResult> {
    grid.validate()?;
    let points = grid.points(kind);
    let mut table: Vec<CvResult> = pool().install(|| {
        points
            .par_iter()
            .map(|h| cross_validate(kind, data, h, opts))
            .collect::<Result<Vec<_>>>()
    })?;
    table.sort_by(by_hyperparams);
    let best = pick_best(&table).cloned().ok_or_else(|| Error::Empty("grid".into()))?;
    Ok(GridResult { best, table })
}

/// CV mean accuracy over a `C_u × ε` grid at fixed `μ` and `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Colormap {
    pub kind: ModelKind,
    pub mu: f64,
    pub lambda: f64,
    pub c_u: Vec<f64>,
    pub eps: Vec<f64>,
    /// `accuracy[i][j]` for `c_u[i]`, `eps[j]`.
    pub accuracy: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
}

impl Colormap {
    /// Highest entry with its `(C_u, ε)`; the first in row-major order on ties.
    pub fn max(&self) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
        for (i, row) in self.accuracy.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                if *a > best.0 {
                    best = (*a, self.c_u[i], self.eps[j]);
                }
            }
        }
        best
    }
}

pub fn colormap_sweep(
    kind: ModelKind,
    data: &LabeledDataset,
    mu: f64,
    lambda: f64,
    cu_grid: &[f64],
    eps_grid: &[f64],
    opts: &CvOptions,
) -> Result<Colormap> {
    if cu_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParam("colormap grids must be nonempty".into()));
    }
    let cells: Vec<Hyperparams> = cu_grid
        .iter()
        .flat_map(|&c_u| eps_grid.iter().map(move |&eps| Hyperparams { mu, lambda, c_u, eps }))
        .collect();
    let results: Vec<CvResult> = pool().install(|| {
        cells
            .par_iter()
            .map(|h| cross_validate(kind, data, h, opts))
            .collect::<Result<Vec<_>>>()
    })?;
    let ne = eps_grid.len();
    let accuracy = cu_grid
        .iter()
        .enumerate()
        .map(|(i, _)| (0..ne).map(|j| results[i * ne + j].mean_accuracy).collect())
        .collect();
    let std = cu_grid
        .iter()
        .enumerate()
        .map(|(i, _)| (0..ne).map(|j| results[i * ne + j].std_accuracy).collect())
        .collect();
    Ok(Colormap {
        kind,
        mu,
        lambda,
        c_u: cu_grid.to_vec(),
        eps: eps_grid.to_vec(),
        accuracy,
        std,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rate: f64,
    pub mean: f64,
    /// Population std of the repeat means.
    pub std: f64,
}

/// Mean CV accuracy per Universum rate, averaged over `repeats` Universum
/// draws on a fixed fold split.
pub fn universum_rate_curve(
    kind: ModelKind,
    data: &LabeledDataset,
    h: &Hyperparams,
    rates: &[f64],
    repeats: usize,
    opts: &CvOptions,
) -> Result<Vec<RatePoint>> {
    if rates.is_empty() || repeats == 0 {
        return Err(Error::InvalidParam("need at least one rate and one repeat".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::InvalidParam(format!("rate {r} outside (0, 1]")));
    }
    let jobs: Vec<(usize, usize)> = (0..rates.len())
        .flat_map(|i| (0..repeats).map(move |r| (i, r)))
        .collect();
    let means: Vec<f64> = pool().install(|| {
        jobs.par_iter()
            .map(|&(i, r)| {
                let o = CvOptions {
                    universum_fraction: rates[i],
                    universum_stream: derive_seed(opts.universum_stream, r as u64 + 1),
                    ..*opts
                };
                cross_validate(kind, data, h, &o).map(|c| c.mean_accuracy)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(rates
        .iter()
        .enumerate()
        .map(|(i, &rate)| {
            let (mean, std) = mean_std(&means[i * repeats..(i + 1) * repeats]);
            RatePoint {
                rate,
                mean: quantize(mean),
                std: quantize(std),
            }
        })
        .collect())
}

/// Row of `cv_table.csv` / `grid_table.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub model: ModelKind,
    pub mu: f64,
    pub lambda: f64,
    pub c_u: f64,
    pub eps: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Row of `timings.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub task: String,
    pub model: ModelKind,
    pub seconds: f64,
}

fn fmt_acc(v: f64) -> String {
    format!("{v:.6}")
}

fn parse_f64(s: &str, column: &str, row: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Cell {
        row,
        column: column.to_string(),
        message: format!("'{s}' is not a number"),
    })
}

fn read_records<R: io::Read>(input: R) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

const CV_FIXED: [&str; 7] = [
    "model",
    "mu",
    "lambda",
    "c_u",
    "eps",
    "mean_accuracy",
    "std_accuracy_population",
];

/// Writes CV summaries, one row each, with the per-fold accuracies last.
pub fn write_cv_table<W: io::Write>(out: W, rows: &[CvSummary]) -> Result<()> {
    let k = rows.iter().map(|r| r.fold_accuracies.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = CV_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend((1..=k).map(|i| format!("fold{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.model.to_string(),
            r.mu.to_string(),
            r.lambda.to_string(),
            r.c_u.to_string(),
            r.eps.to_string(),
            fmt_acc(r.mean_accuracy),
            fmt_acc(r.std_accuracy),
        ];
        rec.extend(r.fold_accuracies.iter().map(|a| fmt_acc(*a)));
        rec.resize(header.len(), String::new());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cv_table<R: io::Read>(input: R) -> Result<Vec<CvSummary>> {
    let (header, records) = read_records(input)?;
    if header.len() < CV_FIXED.len() || header[..CV_FIXED.len()] != CV_FIXED {
        return Err(Error::Data(format!("unexpected cv table header {header:?}")));
    }
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let num = |c: usize| parse_f64(&rec[c], &header[c], row);
            let folds = (CV_FIXED.len()..rec.len())
                .filter(|&c| !rec[c].is_empty())
                .map(num)
                .collect::<Result<Vec<_>>>()?;
            Ok(CvSummary {
                model: rec[0].parse()?,
                mu: num(1)?,
                lambda: num(2)?,
                c_u: num(3)?,
                eps: num(4)?,
                mean_accuracy: num(5)?,
                std_accuracy: num(6)?,
                fold_accuracies: folds,
            })
        })
        .collect()
}

/// Long format: one row per `(C_u, ε)` cell.
pub fn write_colormap<W: io::Write>(out: W, map: &Colormap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "mu", "lambda", "c_u", "eps", "mean_accuracy", "std_accuracy_population"])?;
    for (i, cu) in map.c_u.iter().enumerate() {
        for (j, eps) in map.eps.iter().enumerate() {
            w.write_record([
                map.kind.to_string(),
                map.mu.to_string(),
                map.lambda.to_string(),
                cu.to_string(),
                eps.to_string(),
                fmt_acc(map.accuracy[i][j]),
                fmt_acc(map.std[i][j]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_colormap<R: io::Read>(input: R) -> Result<Colormap> {
    let (header, records) = read_records(input)?;
    if header.len() != 7 {
        return Err(Error::Data(format!("unexpected colormap header {header:?}")));
    }
    let mut kind = None;
    let (mut mu, mut lambda) = (f64::NAN, f64::NAN);
    let mut c_u: Vec<f64> = Vec::new();
    let mut eps: Vec<f64> = Vec::new();
    let mut cells = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let num = |c: usize| parse_f64(&rec[c], &header[c], row);
        kind = Some(rec[0].parse::<ModelKind>()?);
        mu = num(1)?;
        lambda = num(2)?;
        let (cu, e) = (num(3)?, num(4)?);
        if !c_u.contains(&cu) {
            c_u.push(cu);
        }
        if !eps.contains(&e) {
            eps.push(e);
        }
        cells.push((cu, e, num(5)?, num(6)?));
    }
    let kind = kind.ok_or_else(|| Error::Empty("colormap".into()))?;
    if cells.len() != c_u.len() * eps.len() {
        return Err(Error::Data("colormap is not a full grid".into()));
    }
    let mut accuracy = vec![vec![0.0; eps.len()]; c_u.len()];
    let mut std = accuracy.clone();
    for (cu, e, a, s) in cells {
        let i = c_u.iter().position(|v| *v == cu).unwrap_or(0);
        let j = eps.iter().position(|v| *v == e).unwrap_or(0);
        accuracy[i][j] = a;
        std[i][j] = s;
    }
    Ok(Colormap {
        kind,
        mu,
        lambda,
        c_u,
        eps,
        accuracy,
        std,
    })
}

pub fn write_rate_curve<W: io::Write>(out: W, curve: &[RatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rate", "mean_accuracy", "std_accuracy_population"])?;
    for p in curve {
        w.write_record([p.rate.to_string(), fmt_acc(p.mean), fmt_acc(p.std)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rate_curve<R: io::Read>(input: R) -> Result<Vec<RatePoint>> {
    let (header, records) = read_records(input)?;
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let num = |c: usize| parse_f64(&rec[c], &header[c], i + 1);
            Ok(RatePoint {
                rate: num(0)?,
                mean: num(1)?,
                std: num(2)?,
            })
        })
        .collect()
}

/// Wall-clock training times; the only emitted file with timing data.
pub fn write_timings<W: io::Write>(out: W, rows: &[TimingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task", "model", "clock", "seconds"])?;
    for r in rows {
        w.write_record([r.task.clone(), r.model.to_string(), "wall".into(), format!("{:.6}", r.seconds)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{synth_normal, synth_quadratic};

    fn opts(k: usize, seed: u64) -> CvOptions {
        CvOptions {
            k,
            seed,
            ..CvOptions::default()
        }
    }

    #[test]
    fn accuracy_examples() {
        let y = [1.0; 10];
        let mut p = [1.0; 10];
        p[0] = -1.0;
        p[1] = -1.0;
        assert_eq!(accuracy(&p, &y).unwrap(), 80.0);
        assert_eq!(accuracy(&y, &y).unwrap(), 100.0);
        assert_eq!(accuracy(&[-1.0; 10], &y).unwrap(), 0.0);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn timing_is_nonnegative_and_nests() {
        let ((_, inner), outer) = timed(|| timed(|| (0..10_000).sum::<u64>()));
        assert!(inner >= 0.0);
        assert!(outer >= inner);
    }

    #[test]
    fn quantize_round_trips_through_text() {
        for v in [100.0, 87.5, 2.0 / 3.0 * 100.0, 0.0, 33.3333335] {
            let q = quantize(v);
            assert_eq!(format!("{q:.6}").parse::<f64>().unwrap(), q);
        }
    }

    #[test]
    fn grid_defaults_and_collapse() {
        let g = GridSpec::default();
        assert_eq!(g.mu.len(), 25);
        assert_eq!(g.mu[0], 0.0625);
        assert_eq!(g.lambda.len(), 29);
        assert_eq!(g.c_u.len(), 15);
        assert_eq!(g.eps.len(), 9);
        assert_eq!(*g.eps.last().unwrap(), 1.0);
        assert_eq!(g.points(ModelKind::Sqssvm).len(), 25);
        assert_eq!(g.points(ModelKind::L1Sqssvm).len(), 25 * 29);
        assert_eq!(g.points(ModelKind::USqssvm).len(), 25 * 15 * 9);
        let mut empty = g.clone();
        empty.eps.clear();
        assert!(empty.validate().is_err());
    }

    #[test]
    fn cv_is_deterministic_and_leak_free() {
        let d = synth_quadratic(30, 2, 0.1, false, 3).unwrap();
        let h = Hyperparams::new(64.0, 1.0, 4.0, 0.05).unwrap();
        let a = cross_validate(ModelKind::L1USqssvm, &d, &h, &opts(5, 11)).unwrap();
        let b = cross_validate(ModelKind::L1USqssvm, &d, &h, &opts(5, 11)).unwrap();
        assert_eq!(a.summary(), b.summary());
        assert_eq!(a.fold_accuracies.len(), 5);
        assert!(a.stratified && a.warnings.is_empty());
        for f in &a.folds {
            assert!(!f.universum_parents.is_empty());
            for (p, q) in &f.universum_parents {
                assert!(f.train.contains(p) && f.train.contains(q));
            }
            assert_eq!(f.norm, fit_normalizer(&d.subset(&f.train).unwrap()));
        }
    }

    #[test]
    fn small_class_falls_back_with_warning() {
        let mut pts: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, 0.5 * i as f64]).collect();
        pts.push(vec![20.0, 1.0]);
        pts.push(vec![21.0, -1.0]);
        let mut ys = vec![1.0; 12];
        ys.extend([-1.0, -1.0]);
        let d = LabeledDataset::new(pts, ys).unwrap();
        let r = cross_validate(ModelKind::Sqssvm, &d, &Hyperparams::new(1.0, 0.0, 0.0, 0.0).unwrap(), &opts(5, 0))
            .unwrap();
        assert!(!r.stratified);
        assert!(r.warnings.iter().any(|w| w.contains("not stratified")));
    }

    #[test]
    fn one_point_grid_equals_cv() {
        let d = synth_normal(20, 2, 3.0, 1).unwrap();
        let h = Hyperparams::new(4.0, 0.0, 0.0, 0.0).unwrap();
        let g = grid_search(ModelKind::Sqssvm, &d, &GridSpec::single(&h), &opts(4, 2)).unwrap();
        let cv = cross_validate(ModelKind::Sqssvm, &d, &h, &opts(4, 2)).unwrap();
        assert_eq!(g.table.len(), 1);
        assert_eq!(g.best.summary(), cv.summary());
    }

    #[test]
    fn tie_break_prefers_small_penalties() {
        let d = synth_normal(10, 2, 1.0, 1).unwrap();
        let h = |mu: f64| Hyperparams::new(mu, 0.0, 0.0, 0.0).unwrap();
        let mut a = cross_validate(ModelKind::Sqssvm, &d, &h(2.0), &opts(2, 0)).unwrap();
        let mut b = a.clone();
        b.hyperparams = h(1.0);
        a.mean_accuracy = 90.0;
        b.mean_accuracy = 90.0;
        a.std_accuracy = 1.0;
        b.std_accuracy = 1.0;
        assert_eq!(pick_best(&[a.clone(), b.clone()]).unwrap().hyperparams.mu, 1.0);
        a.std_accuracy = 0.5;
        assert_eq!(pick_best(&[a.clone(), b.clone()]).unwrap().hyperparams.mu, 2.0);
        b.mean_accuracy = 91.0;
        assert_eq!(pick_best(&[a, b]).unwrap().hyperparams.mu, 1.0);
    }

    #[test]
    fn tables_round_trip() {
        let d = synth_quadratic(15, 2, 0.1, false, 2).unwrap();
        let grid = GridSpec {
            mu: vec![1.0, 16.0],
            lambda: vec![0.0, 0.25],
            c_u: vec![0.5],
            eps: vec![0.01],
        };
        let g = grid_search(ModelKind::L1Sqssvm, &d, &grid, &opts(3, 5)).unwrap();
        let rows: Vec<CvSummary> = g.table.iter().map(CvResult::summary).collect();
        let mut buf = Vec::new();
        write_cv_table(&mut buf, &rows).unwrap();
        assert_eq!(read_cv_table(buf.as_slice()).unwrap(), rows);
        for r in &g.table {
            assert!(g.best.mean_accuracy >= r.mean_accuracy);
        }

        let map = colormap_sweep(ModelKind::USqssvm, &d, 16.0, 0.0, &[0.0, 1.0, 4.0], &[0.01, 0.1], &opts(3, 5))
            .unwrap();
        assert_eq!((map.accuracy.len(), map.accuracy[0].len()), (3, 2));
        assert!(map.accuracy.iter().flatten().all(|a| (0.0..=100.0).contains(a)));
        let mut buf = Vec::new();
        write_colormap(&mut buf, &map).unwrap();
        assert_eq!(read_colormap(buf.as_slice()).unwrap(), map);

        let curve =
            universum_rate_curve(ModelKind::USqssvm, &d, &Hyperparams::new(16.0, 0.0, 1.0, 0.05).unwrap(), &[0.2], 2, &opts(3, 1))
                .unwrap();
        assert_eq!(curve.len(), 1);
        let mut buf = Vec::new();
        write_rate_curve(&mut buf, &curve).unwrap();
        assert_eq!(read_rate_curve(buf.as_slice()).unwrap(), curve);
    }
}
