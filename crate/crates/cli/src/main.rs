//! `qsurf` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsurf::dataset::synth::{synth_linear, synth_normal, synth_quadratic};
use qsurf::dataset::{
    expand_universum, fit_normalizer, generate_universum, load_csv, ExpandedUniversum, LabelColumn,
    LabeledDataset,
};
use qsurf::harness::{
    colormap_sweep, cross_validate, grid_search, powers_of_two, timed, universum_rate_curve, write_colormap,
    write_cv_table, write_rate_curve, write_timings, CvOptions, CvResult, GridSpec, TimingRow,
};
use qsurf::models::{assemble, train_model, Hyperparams, ModelKind, SolveStatus, TrainOptions};
use qsurf::persist::ModelFile;
use qsurf::Error;

#[derive(Debug, Parser)]
#[command(name = "qsurf", version, about = "Quadratic-surface SVMs with Universum data")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic labeled dataset as CSV.
    GenData(GenDataArgs),
    /// Build Universum points from the midpoints of cross-class pairs.
    Universum(UniversumArgs),
    /// Train one model and save it as JSON.
    Train(TrainArgs),
    /// Apply a saved model to a CSV file.
    Predict(PredictArgs),
    /// Percent of predictions matching the labels of a dataset.
    Accuracy(AccuracyArgs),
    /// k-fold cross-validation at one hyperparameter setting.
    Cv(CvArgs),
    /// Cross-validated grid search over log2 hyperparameter ranges.
    Grid(GridArgs),
    /// CV accuracy over a C_u x eps grid at fixed mu and lambda.
    SweepColormap(ColormapArgs),
    /// CV accuracy as a function of the Universum fraction.
    SweepUrate(UrateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    Quadratic,
    Normal,
    Linear,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    /// Points per class.
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Features.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Coordinate noise (quadratic, non-separable only).
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Keep a gap around the ellipse (quadratic).
    #[arg(long)]
    separable: bool,
    /// Distance between class means (normal).
    #[arg(long, default_value_t = 2.0)]
    sep: f64,
    /// Empty slab half-width around the hyperplane (linear).
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "y")]
    label_name: String,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Labeled CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or 0-based index.
    #[arg(long, default_value = "y")]
    label: String,
    /// Label value read as the positive class; all others are negative.
    #[arg(long, default_value = "1")]
    positive: String,
}

impl DataArgs {
    fn load(&self) -> Result<LabeledDataset, Error> {
        load_csv(&self.data, &LabelColumn::parse(&self.label), &self.positive)
    }
}

#[derive(Debug, Args)]
struct UniversumArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Share of each class drawn into the pairs.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write each point twice, labeled +1 and -1.
    #[arg(long)]
    expanded: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct HyperArgs {
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    cu: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
}

impl HyperArgs {
    fn get(&self) -> Hyperparams {
        Hyperparams {
            mu: self.mu,
            lambda: self.lambda,
            c_u: self.cu,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Interior-point KKT tolerance.
    #[arg(long, default_value_t = 1e-8)]
    qp_tol: f64,
    /// IRLS step tolerance.
    #[arg(long, default_value_t = 1e-6)]
    irls_tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> TrainOptions {
        let mut o = TrainOptions::default();
        o.qp.tol = self.qp_tol;
        o.irls.tol = self.irls_tol;
        o.irls.max_iter = self.max_iter;
        o.qp.max_iter = self.max_iter;
        o
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    model: ModelKind,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Universum CSV (same feature columns, no label); generated from the data when absent.
    #[arg(long)]
    universum: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the assembled QP (Q, q, A, b) as text.
    #[arg(long)]
    dump_qp: Option<PathBuf>,
    /// Write the training time to this CSV.
    #[arg(long)]
    timings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Column to ignore as a label, if the file has one.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AccuracyArgs {
    /// Predictions CSV written by `predict`.
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct CvCommon {
    #[arg(long)]
    model: ModelKind,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Universum share of each class per fold.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Directory for the emitted tables.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl CvCommon {
    fn options(&self) -> CvOptions {
        CvOptions {
            k: self.k,
            seed: self.seed,
            universum_fraction: self.fraction,
            universum_stream: 0,
            train: self.solver.options(),
        }
    }
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    common: CvCommon,
    #[command(flatten)]
    hyper: HyperArgs,
}

/// Inclusive exponent range `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ExpRange(i32, i32);

impl std::str::FromStr for ExpRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
        let lo: i32 = lo.trim().parse().map_err(|_| format!("bad exponent '{lo}'"))?;
        let hi: i32 = hi.trim().parse().map_err(|_| format!("bad exponent '{hi}'"))?;
        Ok(ExpRange(lo, hi))
    }
}

impl ExpRange {
    fn values(self) -> Vec<f64> {
        powers_of_two(self.0, self.1)
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    common: CvCommon,
    #[arg(long, default_value = "-4:20", allow_hyphen_values = true)]
    mu_range: ExpRange,
    #[arg(long, default_value = "-8:20", allow_hyphen_values = true)]
    lambda_range: ExpRange,
    #[arg(long, default_value = "-4:10", allow_hyphen_values = true)]
    cu_range: ExpRange,
    #[arg(long, default_value = "-8:0", allow_hyphen_values = true)]
    eps_range: ExpRange,
    /// Add lambda = 0 to the lambda axis.
    #[arg(long)]
    lambda_zero: bool,
    /// Add C_u = 0 to the C_u axis.
    #[arg(long)]
    cu_zero: bool,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        let with_zero = |mut v: Vec<f64>, zero: bool| {
            if zero {
                v.insert(0, 0.0);
            }
            v
        };
        GridSpec {
            mu: self.mu_range.values(),
            lambda: with_zero(self.lambda_range.values(), self.lambda_zero),
            c_u: with_zero(self.cu_range.values(), self.cu_zero),
            eps: self.eps_range.values(),
        }
    }
}

#[derive(Debug, Args)]
struct ColormapArgs {
    #[command(flatten)]
    common: CvCommon,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value = "-4:10", allow_hyphen_values = true)]
    cu_range: ExpRange,
    #[arg(long, default_value = "-8:0", allow_hyphen_values = true)]
    eps_range: ExpRange,
    /// Add C_u = 0 (no Universum) as the first row.
    #[arg(long)]
    cu_zero: bool,
}

#[derive(Debug, Args)]
struct UrateArgs {
    #[command(flatten)]
    common: CvCommon,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Comma-separated Universum fractions in (0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.4,0.5")]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
}

/// Failure of a subcommand, mapped onto the exit code.
#[derive(Debug)]
enum Failure {
    Usage(Vec<String>),
    Data(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam(_) => Failure::Usage(vec![e.to_string()]),
            Error::Singular(_) | Error::Solver(_) => Failure::Solver(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn check_hyper(h: &Hyperparams, out: &mut Vec<String>) {
    if !(h.mu > 0.0 && h.mu.is_finite()) {
        out.push(format!("--mu must be > 0, got {}", h.mu));
    }
    if !(h.lambda >= 0.0 && h.lambda.is_finite()) {
        out.push(format!("--lambda must be >= 0, got {}", h.lambda));
    }
    if !(h.c_u >= 0.0 && h.c_u.is_finite()) {
        out.push(format!("--cu must be >= 0, got {}", h.c_u));
    }
    if !(h.eps >= 0.0 && h.eps.is_finite()) {
        out.push(format!("--eps must be >= 0, got {}", h.eps));
    }
}

fn check_fraction(flag: &str, f: f64, out: &mut Vec<String>) {
    if !(f > 0.0 && f <= 1.0) {
        out.push(format!("{flag} must be in (0, 1], got {f}"));
    }
}

fn check_range(flag: &str, r: ExpRange, out: &mut Vec<String>) {
    if r.0 > r.1 {
        out.push(format!("{flag} is empty ({}:{})", r.0, r.1));
    }
}

fn check_common(c: &CvCommon, out: &mut Vec<String>) {
    if c.k < 2 {
        out.push(format!("--k must be >= 2, got {}", c.k));
    }
    check_fraction("--fraction", c.fraction, out);
}

/// Every problem with the parsed arguments, not just the first.
fn validate_config(cmd: &Command) -> Result<(), Vec<String>> {
    let mut out = Vec::new();
    match cmd {
        Command::GenData(a) => {
            if a.m == 0 || a.n == 0 {
                out.push("--m and --n must be >= 1".into());
            }
            if !(a.noise >= 0.0) {
                out.push(format!("--noise must be >= 0, got {}", a.noise));
            }
        }
        Command::Universum(a) => check_fraction("--fraction", a.fraction, &mut out),
        Command::Train(a) => {
            check_hyper(&a.hyper.get(), &mut out);
            check_fraction("--fraction", a.fraction, &mut out);
            if a.dump_qp.is_some() && a.model.is_least_squares() {
                out.push(format!("--dump-qp does not apply to {} (solved by IRLS)", a.model));
            }
        }
        Command::Predict(_) | Command::Accuracy(_) => {}
        Command::Cv(a) => {
            check_common(&a.common, &mut out);
            check_hyper(&a.hyper.get(), &mut out);
        }
        Command::Grid(a) => {
            check_common(&a.common, &mut out);
            check_range("--mu-range", a.mu_range, &mut out);
            check_range("--lambda-range", a.lambda_range, &mut out);
            check_range("--cu-range", a.cu_range, &mut out);
            check_range("--eps-range", a.eps_range, &mut out);
        }
        Command::SweepColormap(a) => {
            check_common(&a.common, &mut out);
            check_hyper(
                &Hyperparams {
                    mu: a.mu,
                    lambda: a.lambda,
                    c_u: 0.0,
                    eps: 0.0,
                },
                &mut out,
            );
            check_range("--cu-range", a.cu_range, &mut out);
            check_range("--eps-range", a.eps_range, &mut out);
        }
        Command::SweepUrate(a) => {
            check_common(&a.common, &mut out);
            check_hyper(&a.hyper.get(), &mut out);
            if a.rates.is_empty() {
                out.push("--rates is empty".into());
            }
            for r in &a.rates {
                check_fraction("--rates entry", *r, &mut out);
            }
            if a.repeats == 0 {
                out.push("--repeats must be >= 1".into());
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn writer(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn out_file(dir: &Path, name: &str) -> Result<File, Failure> {
    fs::create_dir_all(dir)?;
    Ok(File::create(dir.join(name))?)
}

fn gen_data(a: &GenDataArgs) -> Result<(), Failure> {
    let data = match a.kind {
        SynthKind::Quadratic => synth_quadratic(a.m, a.n, a.noise, a.separable, a.seed)?,
        SynthKind::Normal => synth_normal(a.m, a.n, a.sep, a.seed)?,
        SynthKind::Linear => synth_linear(a.m, a.n, a.margin, a.seed)?.data,
    };
    let mut w = writer(a.out.as_deref())?;
    data.write_csv(&mut w, &a.label_name)?;
    w.flush()?;
    Ok(())
}

fn universum(a: &UniversumArgs) -> Result<(), Failure> {
    let data = a.data.load()?;
    let u = generate_universum(&data, a.fraction, a.seed)?;
    let mut w = writer(a.out.as_deref())?;
    if a.expanded {
        expand_universum(&u).write_csv(&mut w, &data.header(), &a.data.label)?;
    } else {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(data.header()).map_err(Error::from)?;
        for p in &u.points {
            csv.write_record(p.iter().map(f64::to_string)).map_err(Error::from)?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(())
}

/// Headered CSV of plain numbers; `skip` names a column to drop.
fn read_points(path: &Path, skip: Option<&str>) -> Result<Vec<Vec<f64>>, Failure> {
    let mut rdr = csv::Reader::from_path(path).map_err(Error::from)?;
    let header = rdr.headers().map_err(Error::from)?.clone();
    let skip_idx = match skip {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h.trim() == name)
                .or_else(|| name.parse::<usize>().ok().filter(|i| *i < header.len()))
                .ok_or_else(|| Failure::Data(format!("column '{name}' not found in {}", path.display())))?,
        ),
        None => None,
    };
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::from)?;
        let mut p = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == skip_idx {
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| {
                Failure::from(Error::Cell {
                    row: i + 1,
                    column: header.get(c).unwrap_or("?").to_string(),
                    message: format!("'{cell}' is not a number"),
                })
            })?;
            p.push(v);
        }
        points.push(p);
    }
    Ok(points)
}

fn train(a: &TrainArgs) -> Result<(), Failure> {
    let raw = a.data.load()?;
    let norm = fit_normalizer(&raw);
    let data = norm.apply_dataset(&raw)?;
    let h = a.hyper.get();
    let universum = if !a.model.uses_universum() {
        ExpandedUniversum::empty()
    } else if let Some(path) = &a.universum {
        let pts = read_points(path, None)?;
        if pts.is_empty() {
            ExpandedUniversum::empty()
        } else {
            let u = qsurf::dataset::UniversumSet {
                parents: Vec::new(),
                points: norm.apply(&pts),
            };
            expand_universum(&u)
        }
    } else {
        expand_universum(&generate_universum(&data, a.fraction, a.seed)?)
    };
    if let Some(path) = &a.dump_qp {
        let (qp, _) = assemble(a.model, &data, &universum, &h)?;
        let mut w = writer(Some(path))?;
        qp.write_text(&mut w)?;
        w.flush()?;
    }
    let (model, seconds) = timed(|| train_model(a.model, &data, &universum, &h, &a.solver.options()));
    let mut model = model?;
    match model.report.status {
        SolveStatus::InfeasibleDetected => {
            return Err(Failure::Solver(format!("{} solve diverged (infeasible or unbounded)", a.model)))
        }
        SolveStatus::MaxIter => log::warn!("{}: iteration limit reached, saving the last iterate", a.model),
        SolveStatus::Converged => {}
    }
    log::info!(
        "{}: {} iterations, residual {:.3e}, {:.3}s",
        a.model,
        model.report.iterations,
        model.report.residual,
        seconds
    );
    model.classifier = model.classifier.with_norm(Some(norm));
    ModelFile::from_model(&model).save(&a.out)?;
    if let Some(path) = &a.timings {
        write_timings(
            File::create(path)?,
            &[TimingRow {
                task: "train".into(),
                model: a.model,
                seconds,
            }],
        )?;
    }
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<(), Failure> {
    let model = ModelFile::load(&a.model)?;
    let cl = model.classifier()?;
    let points = read_points(&a.data, a.label.as_deref())?;
    let mut w = writer(a.out.as_deref())?;
    writeln!(w, "decision_value,prediction")?;
    for p in &points {
        let v = cl.decision_value(p)?;
        writeln!(w, "{v},{}", if v >= 0.0 { 1 } else { -1 })?;
    }
    w.flush()?;
    Ok(())
}

fn accuracy_cmd(a: &AccuracyArgs) -> Result<(), Failure> {
    let data = a.data.load()?;
    let mut rdr = csv::Reader::from_path(&a.pred).map_err(Error::from)?;
    let header = rdr.headers().map_err(Error::from)?.clone();
    let col = header
        .iter()
        .position(|h| h == "prediction")
        .ok_or_else(|| Failure::Data("predictions file has no 'prediction' column".into()))?;
    let mut preds = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::from)?;
        let v: f64 = rec[col].trim().parse().map_err(|_| {
            Failure::from(Error::Cell {
                row: i + 1,
                column: "prediction".into(),
                message: format!("'{}' is not a number", &rec[col]),
            })
        })?;
        preds.push(v);
    }
    let acc = qsurf::harness::accuracy(&preds, data.labels())?;
    println!("{acc:.6}");
    Ok(())
}

fn report_cv(r: &CvResult) {
    for w in &r.warnings {
        log::warn!("{w}");
    }
    println!(
        "{} mu={} lambda={} c_u={} eps={}: {:.6} +/- {:.6} (population std)",
        r.kind, r.hyperparams.mu, r.hyperparams.lambda, r.hyperparams.c_u, r.hyperparams.eps, r.mean_accuracy, r.std_accuracy
    );
}

fn timing_rows(task: &str, results: &[CvResult]) -> Vec<TimingRow> {
    results
        .iter()
        .map(|r| TimingRow {
            task: format!(
                "{task} mu={} lambda={} c_u={} eps={}",
                r.hyperparams.mu, r.hyperparams.lambda, r.hyperparams.c_u, r.hyperparams.eps
            ),
            model: r.kind,
            seconds: r.train_seconds,
        })
        .collect()
}

fn cv(a: &CvArgs) -> Result<(), Failure> {
    let data = a.common.data.load()?;
    let r = cross_validate(a.common.model, &data, &a.hyper.get(), &a.common.options())?;
    report_cv(&r);
    write_cv_table(out_file(&a.common.out_dir, "cv_table.csv")?, &[r.summary()])?;
    write_timings(out_file(&a.common.out_dir, "timings.csv")?, &timing_rows("cv", &[r]))?;
    Ok(())
}

fn grid(a: &GridArgs) -> Result<(), Failure> {
    let data = a.common.data.load()?;
    let g = grid_search(a.common.model, &data, &a.spec(), &a.common.options())?;
    report_cv(&g.best);
    let rows: Vec<_> = g.table.iter().map(CvResult::summary).collect();
    write_cv_table(out_file(&a.common.out_dir, "grid_table.csv")?, &rows)?;
    write_timings(out_file(&a.common.out_dir, "timings.csv")?, &timing_rows("grid", &g.table))?;
    Ok(())
}

fn sweep_colormap(a: &ColormapArgs) -> Result<(), Failure> {
    let data = a.common.data.load()?;
    let mut cu = a.cu_range.values();
    if a.cu_zero {
        cu.insert(0, 0.0);
    }
    let map = colormap_sweep(
        a.common.model,
        &data,
        a.mu,
        a.lambda,
        &cu,
        &a.eps_range.values(),
        &a.common.options(),
    )?;
    let (best, best_cu, best_eps) = map.max();
    println!("{} max {best:.6} at c_u={best_cu} eps={best_eps}", a.common.model);
    write_colormap(out_file(&a.common.out_dir, "colormap.csv")?, &map)?;
    Ok(())
}

fn sweep_urate(a: &UrateArgs) -> Result<(), Failure> {
    let data = a.common.data.load()?;
    let curve = universum_rate_curve(
        a.common.model,
        &data,
        &a.hyper.get(),
        &a.rates,
        a.repeats,
        &a.common.options(),
    )?;
    for p in &curve {
        println!("{} {:.6} +/- {:.6}", p.rate, p.mean, p.std);
    }
    write_rate_curve(out_file(&a.common.out_dir, "urate_curve.csv")?, &curve)?;
    Ok(())
}

fn run(cmd: &Command) -> Result<(), Failure> {
    validate_config(cmd).map_err(Failure::Usage)?;
    match cmd {
        Command::GenData(a) => gen_data(a),
        Command::Universum(a) => universum(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Accuracy(a) => accuracy_cmd(a),
        Command::Cv(a) => cv(a),
        Command::Grid(a) => grid(a),
        Command::SweepColormap(a) => sweep_colormap(a),
        Command::SweepUrate(a) => sweep_urate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msgs) => {
                    for m in msgs {
                        eprintln!("error: {m}");
                    }
                }
                Failure::Data(m) => eprintln!("data error: {m}"),
                Failure::Solver(m) => eprintln!("solver error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
