//! Quadratic surface SVM models: QP assembly, training, the classifier and
//! its loss-form diagnostics.
//!
//! Every model fits `f(x) = ½xᵀWx + xᵀb + c`. Writing `z = [hvec(W); b]` and
//! `r(x) = lift_point(x)` turns `f` into the affine function `zᵀr(x) + c`
//! and the margin proxy `Σ‖Wxᵢ + b‖²` into `½zᵀGz`, so each soft-margin model
//! is a convex QP in `(z, c, ξ, ψ)`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::{ExpandedUniversum, LabeledDataset, NormParams};
use crate::error::{Error, Result};
use crate::irls::{irls_solve, IrlsConfig};
use crate::qp::{solve_qp, QpOptions, QpProblem, QpSolution, QpStatus};
use crate::symvec::{build_g, hvec_len, lift_into, lifted_len, DenseMatrix, SymHalfVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Sqssvm,
    L1Sqssvm,
    USqssvm,
    L1USqssvm,
    LsL1USqssvm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Sqssvm,
        ModelKind::L1Sqssvm,
        ModelKind::USqssvm,
        ModelKind::L1USqssvm,
        ModelKind::LsL1USqssvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sqssvm => "sqssvm",
            ModelKind::L1Sqssvm => "l1-sqssvm",
            ModelKind::USqssvm => "u-sqssvm",
            ModelKind::L1USqssvm => "l1-u-sqssvm",
            ModelKind::LsL1USqssvm => "ls-l1-u-sqssvm",
        }
    }

    pub fn uses_universum(self) -> bool {
        matches!(self, ModelKind::USqssvm | ModelKind::L1USqssvm | ModelKind::LsL1USqssvm)
    }

    pub fn uses_l1(self) -> bool {
        matches!(self, ModelKind::L1Sqssvm | ModelKind::L1USqssvm | ModelKind::LsL1USqssvm)
    }

    pub fn is_least_squares(self) -> bool {
        self == ModelKind::LsL1USqssvm
    }

    /// The same model without its L1 term.
    pub fn without_l1(self) -> Option<ModelKind> {
        match self {
            ModelKind::L1Sqssvm => Some(ModelKind::Sqssvm),
            ModelKind::L1USqssvm => Some(ModelKind::USqssvm),
            _ => None,
        }
    }

    /// The same model without Universum constraints.
    pub fn without_universum(self) -> Option<ModelKind> {
        match self {
            ModelKind::USqssvm => Some(ModelKind::Sqssvm),
            ModelKind::L1USqssvm => Some(ModelKind::L1Sqssvm),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| {
                let names: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParam(format!("unknown model '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// Penalty `μ` on margin slacks, L1 weight `λ` on `W`, Universum weight
/// `C_u` and tube half-width `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub mu: f64,
    pub lambda: f64,
    pub c_u: f64,
    pub eps: f64,
}

/// Penalty standing in for an infinite one in the hard-margin presets.
pub const HARD_MARGIN_PENALTY: f64 = 1_048_576.0;

impl Hyperparams {
    pub fn new(mu: f64, lambda: f64, c_u: f64, eps: f64) -> Result<Self> {
        let h = Self { mu, lambda, c_u, eps };
        h.validate()?;
        Ok(h)
    }

    /// `μ = C_u = 2²⁰`.
    pub fn hard_margin(lambda: f64, eps: f64) -> Self {
        Self {
            mu: HARD_MARGIN_PENALTY,
            lambda,
            c_u: HARD_MARGIN_PENALTY,
            eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            bad.push(format!("mu must be > 0 (got {})", self.mu));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            bad.push(format!("lambda must be >= 0 (got {})", self.lambda));
        }
        if !(self.c_u >= 0.0 && self.c_u.is_finite()) {
            bad.push(format!("c_u must be >= 0 (got {})", self.c_u));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            bad.push(format!("eps must be >= 0 (got {})", self.eps));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParam(bad.join("; ")))
        }
    }
}

/// `f(x) = ½xᵀWx + xᵀb + c` together with the normalizer its inputs go
/// through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticClassifier {
    pub w_half: SymHalfVec,
    pub b: Vec<f64>,
    pub c: f64,
    pub n: usize,
    pub norm: Option<NormParams>,
}

impl QuadraticClassifier {
    pub fn new(w_half: SymHalfVec, b: Vec<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if w_half.dim() != n {
            return Err(Error::Dimension(format!(
                "W is {}x{} but b has {n} entries",
                w_half.dim(),
                w_half.dim()
            )));
        }
        Ok(Self {
            w_half,
            b,
            c,
            n,
            norm: None,
        })
    }

    /// Classifier from `z = [hvec(W); b]`.
    pub fn from_z(n: usize, z: &[f64], c: f64) -> Result<Self> {
        if z.len() != lifted_len(n) {
            return Err(Error::Dimension(format!(
                "z has {} entries, expected {} for n = {n}",
                z.len(),
                lifted_len(n)
            )));
        }
        let h = hvec_len(n);
        Self::new(SymHalfVec::from_vec(n, z[..h].to_vec())?, z[h..].to_vec(), c)
    }

    pub fn with_norm(mut self, norm: Option<NormParams>) -> Self {
        self.norm = norm;
        self
    }

    pub fn z(&self) -> Vec<f64> {
        self.w_half.as_slice().iter().chain(&self.b).copied().collect()
    }

    /// `f(x)` for a point already in model space (no normalization).
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, classifier expects {}",
                x.len(),
                self.n
            )));
        }
        let lin: f64 = self.b.iter().zip(x).map(|(b, x)| b * x).sum();
        Ok(self.w_half.half_quadratic_form(x) + lin + self.c)
    }

    /// `f(x)` for a raw point: normalized first when a normalizer is attached.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        match &self.norm {
            Some(norm) if norm.dim() == x.len() => self.evaluate(&norm.apply_point(x)),
            Some(norm) => Err(Error::Dimension(format!(
                "point has {} coordinates, normalizer expects {}",
                x.len(),
                norm.dim()
            ))),
            None => self.evaluate(x),
        }
    }

    /// Sign of the decision value with `0 ↦ +1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision_value(x)?))
    }
}

pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    InteriorPoint,
    Irls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    InfeasibleDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Optimal value of the problem the solver saw.
    pub objective: f64,
    /// KKT residual for the interior point method, gradient residual of the
    /// smoothed system for IRLS.
    pub residual: f64,
    /// Last `‖w^{k+1} − w^k‖` (IRLS only).
    pub final_step: Option<f64>,
    pub ridge: f64,
    pub seconds: f64,
    /// Merit per interior-point iteration, or the smoothed objective per
    /// IRLS iterate.
    pub trace: Vec<f64>,
}

/// Split of `hvec(W)` into nonnegative parts, kept for diagnostics of the
/// L1 models.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitParts {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub classifier: QuadraticClassifier,
    /// Margin slacks, one per training point.
    pub xi: Vec<f64>,
    /// Universum slacks, one per expanded Universum row.
    pub psi: Vec<f64>,
    pub split: Option<SplitParts>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainOptions {
    pub qp: QpOptions,
    pub irls: IrlsConfig,
}

/// Lifted features `r(x)` of every point, one row each.
pub fn embed_rows(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|x| {
            let mut r = vec![0.0; lifted_len(x.len())];
            lift_into(x, &mut r);
            r
        })
        .collect()
}

/// Variable offsets of an assembled QP. Without splitting the first block
/// is `hvec(W)`; with splitting it is `p` followed by `q` and
/// `hvec(W) = p − q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpLayout {
    pub kind: ModelKind,
    pub n: usize,
    pub m: usize,
    pub n_universum: usize,
    pub split: bool,
    pub b: usize,
    pub c: usize,
    pub xi: usize,
    pub psi: usize,
    pub dim: usize,
}

impl QpLayout {
    fn new(kind: ModelKind, n: usize, m: usize, n_universum: usize, split: bool) -> Self {
        let h = hvec_len(n);
        let b = if split { 2 * h } else { h };
        let c = b + n;
        let xi = c + 1;
        let psi = xi + m;
        Self {
            kind,
            n,
            m,
            n_universum,
            split,
            b,
            c,
            xi,
            psi,
            dim: psi + n_universum,
        }
    }

    /// Writes the coefficients of `scale·zᵀr` into a constraint row.
    fn put_z(&self, r: &[f64], scale: f64, row: &mut [f64]) {
        let h = hvec_len(self.n);
        for k in 0..h {
            row[k] = scale * r[k];
            if self.split {
                row[h + k] = -scale * r[k];
            }
        }
        for k in 0..self.n {
            row[self.b + k] = scale * r[h + k];
        }
    }

    /// `z` from a primal vector of this layout.
    pub fn z_of(&self, x: &DVector<f64>) -> Vec<f64> {
        let h = hvec_len(self.n);
        let mut z: Vec<f64> = (0..h)
            .map(|k| if self.split { x[k] - x[h + k] } else { x[k] })
            .collect();
        z.extend((0..self.n).map(|k| x[self.b + k]));
        z
    }
}

fn check_inputs(train: &LabeledDataset, universum: &ExpandedUniversum) -> Result<()> {
    let n = train.dim();
    if let Some((j, p)) = universum.points.iter().enumerate().find(|(_, p)| p.len() != n) {
        return Err(Error::Dimension(format!(
            "universum point {j} has {} coordinates, training data has {n}",
            p.len()
        )));
    }
    if universum.points.len() != universum.labels.len() {
        return Err(Error::Dimension("universum labels do not match points".into()));
    }
    Ok(())
}

/// Assembles the QP of any non-least-squares kind. Universum rows are used
/// only by the Universum kinds; `W` is split into `p − q` for the L1 kinds.
pub fn assemble(
    kind: ModelKind,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
) -> Result<(QpProblem, QpLayout)> {
    if kind.is_least_squares() {
        return Err(Error::InvalidParam(format!("{kind} is solved by IRLS, not as a QP")));
    }
    h.validate()?;
    check_inputs(train, universum)?;
    let n = train.dim();
    let m = train.len();
    let uni: &[Vec<f64>] = if kind.uses_universum() { &universum.points } else { &[] };
    let layout = QpLayout::new(kind, n, m, uni.len(), kind.uses_l1());
    let d = layout.dim;
    let hl = hvec_len(n);
    let zl = lifted_len(n);

    let g = build_g(train.points())?;
    let mut quad = DenseMatrix::zeros(d, d);
    // z = T y with T = [I −I 0; 0 0 I] when split, so the block is TᵀGT
    let z_slots = |k: usize| -> Vec<(usize, f64)> {
        if k < hl {
            if layout.split {
                vec![(k, 1.0), (hl + k, -1.0)]
            } else {
                vec![(k, 1.0)]
            }
        } else {
            vec![(layout.b + k - hl, 1.0)]
        }
    };
    for a in 0..zl {
        for b in 0..zl {
            let v = g[(a, b)];
            if v == 0.0 {
                continue;
            }
            for &(ia, sa) in &z_slots(a) {
                for &(ib, sb) in &z_slots(b) {
                    quad[(ia, ib)] += sa * sb * v;
                }
            }
        }
    }

    let mut lin = DVector::zeros(d);
    if layout.split {
        for k in 0..2 * hl {
            lin[k] = h.lambda;
        }
    }
    for i in 0..m {
        lin[layout.xi + i] = h.mu;
    }
    for j in 0..uni.len() {
        lin[layout.psi + j] = h.c_u;
    }

    let rows = m + uni.len();
    let mut a = DenseMatrix::zeros(rows, d);
    let mut b = DVector::zeros(rows);
    let mut row = vec![0.0; d];
    let mut r = vec![0.0; zl];
    let mut fill = |i: usize, x: &[f64], y: f64, slack: usize, rhs: f64, a: &mut DenseMatrix| {
        row.iter_mut().for_each(|v| *v = 0.0);
        lift_into(x, &mut r);
        layout.put_z(&r, y, &mut row);
        row[layout.c] = y;
        row[slack] = 1.0;
        for (k, v) in row.iter().enumerate() {
            a[(i, k)] = *v;
        }
        b[i] = rhs;
    };
    for (i, (x, y)) in train.points().iter().zip(train.labels()).enumerate() {
        fill(i, x, *y, layout.xi + i, 1.0, &mut a);
    }
    for (j, (u, y)) in uni.iter().zip(&universum.labels).enumerate() {
        fill(m + j, u, *y, layout.psi + j, -h.eps, &mut a);
    }

    let mut nonneg = vec![false; d];
    if layout.split {
        nonneg[..2 * hl].iter_mut().for_each(|v| *v = true);
    }
    nonneg[layout.xi..].iter_mut().for_each(|v| *v = true);

    Ok((QpProblem::new(quad, lin, a, b, nonneg)?, layout))
}

pub fn assemble_sqssvm(train: &LabeledDataset, h: &Hyperparams) -> Result<(QpProblem, QpLayout)> {
    assemble(ModelKind::Sqssvm, train, &ExpandedUniversum::empty(), h)
}

pub fn assemble_u_sqssvm(
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
) -> Result<(QpProblem, QpLayout)> {
    assemble(ModelKind::USqssvm, train, universum, h)
}

/// L1 version of a base kind (`Sqssvm` or `USqssvm`).
pub fn assemble_l1_variant(
    base: ModelKind,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
) -> Result<(QpProblem, QpLayout)> {
    let kind = match base {
        ModelKind::Sqssvm => ModelKind::L1Sqssvm,
        ModelKind::USqssvm => ModelKind::L1USqssvm,
        other => {
            return Err(Error::InvalidParam(format!("{other} has no L1 variant")));
        }
    };
    assemble(kind, train, universum, h)
}

/// Unpacks a QP solution into the classifier, slacks and split parts.
pub fn extract_classifier(
    sol: &QpSolution,
    layout: &QpLayout,
    h: &Hyperparams,
) -> Result<TrainedModel> {
    if sol.x.len() != layout.dim {
        return Err(Error::Dimension(format!(
            "solution has {} variables, layout expects {}",
            sol.x.len(),
            layout.dim
        )));
    }
    let x = &sol.x;
    let classifier = QuadraticClassifier::from_z(layout.n, &layout.z_of(x), x[layout.c])?;
    let hl = hvec_len(layout.n);
    let split = layout.split.then(|| SplitParts {
        pos: x.rows(0, hl).iter().copied().collect(),
        neg: x.rows(hl, hl).iter().copied().collect(),
    });
    let status = match sol.status {
        QpStatus::Optimal => SolveStatus::Converged,
        QpStatus::MaxIter => SolveStatus::MaxIter,
        QpStatus::InfeasibleDetected => SolveStatus::InfeasibleDetected,
    };
    Ok(TrainedModel {
        kind: layout.kind,
        hyperparams: *h,
        classifier,
        xi: x.rows(layout.xi, layout.m).iter().copied().collect(),
        psi: x.rows(layout.psi, layout.n_universum).iter().copied().collect(),
        split,
        report: SolveReport {
            solver: SolverKind::InteriorPoint,
            status,
            iterations: sol.iterations,
            objective: sol.objective,
            residual: sol.kkt_residual,
            final_step: None,
            ridge: sol.ridge,
            seconds: sol.seconds,
            trace: sol.trace.iter().map(|t| t.merit).collect(),
        },
    })
}

/// Trains any kind on data already in model space. The classifier comes
/// back without a normalizer.
pub fn train_model(
    kind: ModelKind,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
    opts: &TrainOptions,
) -> Result<TrainedModel> {
    if kind.is_least_squares() {
        let (model, _) = irls_solve(train, universum, h, &opts.irls, None)?;
        return Ok(model);
    }
    let start = Instant::now();
    // λ = 0 leaves p + q unpenalized and C_u = 0 leaves ψ free of cost, so
    // the optimal set is unbounded and interior iterates drift off. Dropping
    // those variables gives the same optimal value.
    let mut qp_kind = kind;
    if qp_kind.uses_l1() && h.lambda == 0.0 {
        qp_kind = qp_kind.without_l1().unwrap_or(qp_kind);
    }
    if qp_kind.uses_universum() && (h.c_u == 0.0 || universum.is_empty()) {
        qp_kind = qp_kind.without_universum().unwrap_or(qp_kind);
    }
    check_inputs(train, universum)?;
    let (problem, layout) = assemble(qp_kind, train, universum, h)?;
    let sol = solve_qp(&problem, &opts.qp)?;
    if sol.status != QpStatus::Optimal {
        log::warn!(
            "{kind}: QP stopped with status {:?}, KKT residual {:.3e}",
            sol.status,
            sol.kkt_residual
        );
    }
    let mut model = extract_classifier(&sol, &layout, h)?;
    model.kind = kind;
    if kind.uses_l1() && model.split.is_none() {
        let w = model.classifier.w_half.as_slice();
        model.split = Some(SplitParts {
            pos: w.iter().map(|v| v.max(0.0)).collect(),
            neg: w.iter().map(|v| (-v).max(0.0)).collect(),
        });
    }
    if kind.uses_universum() && model.psi.len() < universum.len() {
        model.psi = universum
            .points
            .iter()
            .zip(&universum.labels)
            .map(|(u, y)| Ok(hinge_loss(h.eps, y * model.classifier.evaluate(u)?)))
            .collect::<Result<_>>()?;
    }
    model.report.seconds = start.elapsed().as_secs_f64();
    Ok(model)
}

/// `H_{−ε}[t] = max(0, −ε − t)`; with `ε = −1` this is the hinge `H₁`.
pub fn hinge_loss(eps: f64, t: f64) -> f64 {
    (-eps - t).max(0.0)
}

/// `ρ[t] = H_{−ε}[t] + H_{−ε}[−t]`, zero inside the tube `|t| ≤ ε`.
pub fn eps_insensitive_loss(eps: f64, t: f64) -> f64 {
    hinge_loss(eps, t) + hinge_loss(eps, -t)
}

/// `Σ‖Wxᵢ + b‖²` over the training points, equal to `½zᵀGz`.
pub fn margin_proxy(cl: &QuadraticClassifier, points: &[Vec<f64>]) -> f64 {
    let w = cl.w_half.to_symmetric();
    let b = DVector::from_column_slice(&cl.b);
    points
        .iter()
        .map(|x| (&w * DVector::from_column_slice(x) + &b).norm_squared())
        .sum()
}

/// Loss form of the training objective at the model's `(W, b, c)`:
/// `Σ‖Wxᵢ+b‖² + λ‖hvec W‖₁ + μ Σ H₁[yᵢf(xᵢ)] + C_u Σ_j H_{−ε}[y_j f(u_j)]`,
/// the last sum running over the expanded Universum rows (`ρ` per distinct
/// point). For a solved QP this equals its optimal value. The
/// least-squares kind is evaluated by [`crate::irls::ls_objective`].
pub fn soft_objective(
    model: &TrainedModel,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
) -> Result<f64> {
    let h = &model.hyperparams;
    let cl = &model.classifier;
    if model.kind.is_least_squares() {
        return crate::irls::ls_objective(&cl.z(), cl.c, train, universum, h);
    }
    let mut total = margin_proxy(cl, train.points());
    if model.kind.uses_l1() {
        total += h.lambda * cl.w_half.l1_norm();
    }
    for (x, y) in train.points().iter().zip(train.labels()) {
        total += h.mu * hinge_loss(-1.0, y * cl.evaluate(x)?);
    }
    if model.kind.uses_universum() {
        for (u, y) in universum.points.iter().zip(&universum.labels) {
            total += h.c_u * hinge_loss(h.eps, y * cl.evaluate(u)?);
        }
    }
    Ok(total)
}

/// Largest violation of the margin and Universum constraints given the
/// model's own slacks.
pub fn constraint_violation(
    model: &TrainedModel,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
) -> Result<f64> {
    let cl = &model.classifier;
    let mut worst = 0.0_f64;
    for ((x, y), xi) in train.points().iter().zip(train.labels()).zip(&model.xi) {
        worst = worst.max(1.0 - xi - y * cl.evaluate(x)?);
    }
    if model.kind.uses_universum() {
        for ((u, y), psi) in universum.points.iter().zip(&universum.labels).zip(&model.psi) {
            worst = worst.max(-model.hyperparams.eps - psi - y * cl.evaluate(u)?);
        }
    }
    Ok(worst)
}

/// Interval that must contain the optimal offset `c*`:
/// `max(α̲, β̲) ≤ c* ≤ min(ᾱ, β̄)` with
/// `α̲ = max_{yᵢ=+1} 1 − ξᵢ − zᵀrᵢ`, `ᾱ = min_{yᵢ=−1} ξᵢ − 1 − zᵀrᵢ`,
/// `β̲ = max_{j ≤ r} −ε − ψ_j − zᵀr_j` and `β̄ = min_{j > r} ε + ψ_j − zᵀr_j`.
/// A side with no rows contributes an infinite bound.
pub fn c_bounds(
    model: &TrainedModel,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
) -> Result<(f64, f64)> {
    let cl = &model.classifier;
    let eps = model.hyperparams.eps;
    let zr = |x: &[f64]| cl.evaluate(x).map(|f| f - cl.c);
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for ((x, y), xi) in train.points().iter().zip(train.labels()).zip(&model.xi) {
        if *y > 0.0 {
            lower = lower.max(1.0 - xi - zr(x)?);
        } else {
            upper = upper.min(xi - 1.0 - zr(x)?);
        }
    }
    if model.kind.uses_universum() {
        for ((u, y), psi) in universum.points.iter().zip(&universum.labels).zip(&model.psi) {
            if *y > 0.0 {
                lower = lower.max(-eps - psi - zr(u)?);
            } else {
                upper = upper.min(eps + psi - zr(u)?);
            }
        }
    }
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{expand_universum, UniversumSet};
    use approx::assert_abs_diff_eq;

    fn data(points: &[&[f64]], labels: &[f64]) -> LabeledDataset {
        LabeledDataset::new(points.iter().map(|p| p.to_vec()).collect(), labels.to_vec()).unwrap()
    }

    fn hp(mu: f64, lambda: f64, c_u: f64, eps: f64) -> Hyperparams {
        Hyperparams::new(mu, lambda, c_u, eps).unwrap()
    }

    fn ring() -> LabeledDataset {
        // inner class near the origin, outer class on a larger ring
        let mut pts = Vec::new();
        let mut ys = Vec::new();
        for k in 0..8 {
            let t = k as f64 * std::f64::consts::PI / 4.0 + 0.1;
            pts.push(vec![0.3 * t.cos(), 0.25 * t.sin()]);
            ys.push(-1.0);
            pts.push(vec![1.2 * t.cos(), 1.1 * t.sin()]);
            ys.push(1.0);
        }
        LabeledDataset::new(pts, ys).unwrap()
    }

    fn ring_universum(d: &LabeledDataset) -> ExpandedUniversum {
        let pts: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                let a = &d.points()[2 * k];
                let b = &d.points()[2 * k + 1];
                a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect()
            })
            .collect();
        expand_universum(&UniversumSet {
            parents: vec![(0, 0); pts.len()],
            points: pts,
        })
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn hyperparams_report_every_violation() {
        let err = Hyperparams::new(0.0, -1.0, -2.0, -0.1).unwrap_err().to_string();
        for needle in ["mu", "lambda", "c_u", "eps"] {
            assert!(err.contains(needle), "{err}");
        }
    }

    #[test]
    fn decision_value_examples() {
        let cl = QuadraticClassifier::new(SymHalfVec::zeros(2), vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(cl.decision_value(&[2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(cl.predict(&[2.0, 3.0]).unwrap(), 1.0);

        let w = SymHalfVec::from_symmetric(&(DenseMatrix::identity(2, 2) * 2.0)).unwrap();
        let cl = QuadraticClassifier::new(w, vec![0.0, 0.0], -1.0).unwrap();
        assert_eq!(cl.decision_value(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cl.predict(&[1.0, 0.0]).unwrap(), 1.0);

        let cl = QuadraticClassifier::from_z(2, &[0.0; 5], 3.0).unwrap();
        assert_eq!(cl.decision_value(&[-4.0, 9.0]).unwrap(), 3.0);
        assert!(cl.decision_value(&[1.0]).is_err());
    }

    #[test]
    fn decision_value_matches_lifted_form() {
        let z = [0.7, -0.2, 0.4, 1.5, -0.3, 0.9, 0.1, -1.1, 0.6];
        let cl = QuadraticClassifier::from_z(3, &z, 0.25).unwrap();
        for x in [[0.1, 0.2, 0.3], [-1.0, 2.0, 0.5], [3.0, -0.7, 1.2]] {
            let r = crate::symvec::lift_point(&x);
            let lifted: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + 0.25;
            assert_abs_diff_eq!(cl.decision_value(&x).unwrap(), lifted, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalizer_is_applied() {
        let cl = QuadraticClassifier::new(SymHalfVec::zeros(1), vec![1.0], 0.0)
            .unwrap()
            .with_norm(Some(NormParams {
                min: vec![10.0],
                max: vec![20.0],
            }));
        assert_abs_diff_eq!(cl.decision_value(&[15.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(cl.evaluate(&[15.0]).unwrap(), 15.0);
    }

    #[test]
    fn losses() {
        assert_eq!(hinge_loss(0.1, 0.5), 0.0);
        assert_abs_diff_eq!(hinge_loss(0.1, -0.5), 0.4);
        assert_abs_diff_eq!(eps_insensitive_loss(0.0, 0.3), 0.3);
        assert_eq!(eps_insensitive_loss(0.1, 0.05), 0.0);
        assert_abs_diff_eq!(eps_insensitive_loss(0.1, -0.3), 0.2);
    }

    #[test]
    fn assembly_shapes() {
        let d = ring();
        let h = hp(4.0, 1.0, 2.0, 0.1);
        let (p, l) = assemble_sqssvm(&d, &h).unwrap();
        assert_eq!(p.dim(), hvec_len(2) + 2 + 1 + d.len());
        assert_eq!(l.dim, p.dim());
        let g = build_g(d.points()).unwrap();
        assert_eq!(p.quad.view((0, 0), (5, 5)).into_owned(), g);

        let u = ring_universum(&d);
        let (p, l) = assemble_u_sqssvm(&d, &u, &h).unwrap();
        assert_eq!(p.n_ineq(), d.len() + u.len());
        assert_eq!(l.n_universum, 8);
        let (pe, _) = assemble_u_sqssvm(&d, &ExpandedUniversum::empty(), &h).unwrap();
        let (ps, _) = assemble_sqssvm(&d, &h).unwrap();
        assert_eq!(pe, ps);

        let (p, l) = assemble_l1_variant(ModelKind::USqssvm, &d, &u, &h).unwrap();
        assert!(l.split);
        assert_eq!(p.dim(), 2 * 3 + 2 + 1 + d.len() + u.len());
        assert!(assemble_l1_variant(ModelKind::L1Sqssvm, &d, &u, &h).is_err());
    }

    #[test]
    fn universum_on_surface_is_free() {
        // f(u) = 0 puts both rows of u inside the ε = 0.1 tube
        let cl = QuadraticClassifier::new(SymHalfVec::zeros(1), vec![1.0], -0.5).unwrap();
        let u = ExpandedUniversum {
            points: vec![vec![0.5], vec![0.5]],
            labels: vec![1.0, -1.0],
        };
        for (p, y) in u.points.iter().zip(&u.labels) {
            assert!(y * cl.evaluate(p).unwrap() >= -0.1);
        }
    }

    #[test]
    fn extract_round_trip() {
        let d = ring();
        let h = hp(1.0, 0.5, 1.0, 0.1);
        for kind in [ModelKind::Sqssvm, ModelKind::L1USqssvm] {
            let u = ring_universum(&d);
            let (p, l) = assemble(kind, &d, &u, &h).unwrap();
            let mut x = DVector::zeros(p.dim());
            let z: [f64; 5] = [0.3, -0.1, 0.8, 0.2, -0.4];
            for k in 0..3 {
                if l.split {
                    x[k] = z[k].max(0.0);
                    x[3 + k] = (-z[k]).max(0.0);
                } else {
                    x[k] = z[k];
                }
            }
            x[l.b] = z[3];
            x[l.b + 1] = z[4];
            x[l.c] = -0.7;
            let sol = QpSolution {
                objective: p.objective(&x),
                x,
                dual_ineq: DVector::zeros(p.n_ineq()),
                dual_bound: DVector::zeros(p.dim()),
                dual_objective: 0.0,
                kkt_residual: 0.0,
                iterations: 0,
                status: QpStatus::Optimal,
                ridge: 0.0,
                trace: Vec::new(),
                seconds: 0.0,
            };
            let m = extract_classifier(&sol, &l, &h).unwrap();
            assert_eq!(m.classifier.z(), z.to_vec());
            assert_eq!(m.classifier.c, -0.7);
        }
    }

    #[test]
    fn two_point_hard_margin() {
        let d = data(&[&[0.0, 0.0], &[1.0, 1.0]], &[-1.0, 1.0]);
        let h = Hyperparams::hard_margin(0.0, 0.0);
        let m = train_model(ModelKind::Sqssvm, &d, &ExpandedUniversum::empty(), &h, &TrainOptions::default())
            .unwrap();
        assert_eq!(m.report.status, SolveStatus::Converged);
        for (x, y) in d.points().iter().zip(d.labels()) {
            assert!(y * m.classifier.evaluate(x).unwrap() >= 1.0 - 1e-6);
        }
        assert!(m.xi.iter().all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn soft_objective_matches_qp_value() {
        let d = ring();
        let u = ring_universum(&d);
        for kind in [ModelKind::Sqssvm, ModelKind::L1Sqssvm, ModelKind::USqssvm, ModelKind::L1USqssvm] {
            let h = hp(2.0, 0.5, 1.5, 0.05);
            let m = train_model(kind, &d, &u, &h, &TrainOptions::default()).unwrap();
            let soft = soft_objective(&m, &d, &u).unwrap();
            assert!(
                (soft - m.report.objective).abs() <= 1e-6 * (1.0 + soft.abs()),
                "{kind}: {soft} vs {}",
                m.report.objective
            );
            assert!(constraint_violation(&m, &d, &u).unwrap() <= 1e-7);
            let (lo, hi) = c_bounds(&m, &d, &u).unwrap();
            assert!(lo - 1e-8 <= m.classifier.c && m.classifier.c <= hi + 1e-8);
        }
    }

    #[test]
    fn c_bounds_examples() {
        let base = train_model(
            ModelKind::Sqssvm,
            &data(&[&[0.0], &[1.0]], &[1.0, -1.0]),
            &ExpandedUniversum::empty(),
            &hp(1.0, 0.0, 0.0, 0.0),
            &TrainOptions::default(),
        )
        .unwrap();
        let mut m = base.clone();
        m.classifier = QuadraticClassifier::from_z(1, &[0.0, 0.0], 0.0).unwrap();
        m.xi = vec![0.0];
        let one_pos = data(&[&[0.4]], &[1.0]);
        let (lo, hi) = c_bounds(&m, &one_pos, &ExpandedUniversum::empty()).unwrap();
        assert_eq!((lo, hi), (1.0, f64::INFINITY));
        m.xi = vec![2.0];
        let one_neg = data(&[&[0.4]], &[-1.0]);
        let (lo, hi) = c_bounds(&m, &one_neg, &ExpandedUniversum::empty()).unwrap();
        assert_eq!((lo, hi), (f64::NEG_INFINITY, 1.0));
    }
}
