//! Least-squares Universum model solved by iteratively reweighted linear
//! systems.
//!
//! The model replaces the hinge losses by squared equality slacks:
//!
//! ```text
//!     min  ½zᵀGz + λ‖Vz‖₁ + μ‖e − D₁(Aᵀz + ce)‖² + C_u‖εe + D₂(Uᵀz + ce)‖²
//! ```
//!
//! where the columns of `A` and `U` are the lifted training and (expanded)
//! Universum points, `D₁`, `D₂` hold their labels and `V = [I 0]` picks the
//! `hvec(W)` part of `z`. Replacing `‖Vz‖₁` by `½(Vz)ᵀD(Vz)` with
//! `D = diag(1/(|Vz| + δ))` makes the stationarity conditions the linear
//! system `Σ(D)·[z; c] = β`, which is re-solved with updated weights until
//! the iterates settle.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::{ExpandedUniversum, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg::cholesky_with_ridge;
use crate::models::{
    embed_rows, Hyperparams, ModelKind, QuadraticClassifier, SolveReport, SolveStatus, SolverKind,
    TrainedModel,
};
use crate::symvec::{build_g, hvec_len, lifted_len, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlsConfig {
    /// Stop once `‖w^{k+1} − w^k‖ ≤ tol` with `w = [z; c]`.
    pub tol: f64,
    pub max_iter: usize,
    /// Smoothing added to `|Vz|` in the weights.
    pub delta: f64,
    /// First ridge tried, relative to the largest diagonal entry of `Σ`,
    /// when a system does not factorize.
    pub ridge: f64,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            delta: 1e-8,
            ridge: 1e-10,
        }
    }
}

impl IrlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.delta > 0.0 && self.ridge > 0.0) {
            return Err(Error::InvalidParam(format!(
                "IRLS needs tol, delta and ridge > 0 (got {}, {}, {})",
                self.tol, self.delta, self.ridge
            )));
        }
        Ok(())
    }
}

/// `Σ·[z; c] = β` for one choice of weights, with the pieces it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LsSystem {
    pub sigma: DenseMatrix,
    pub beta: DVector<f64>,
    /// Lifted training points as columns (`d × m`).
    pub a: DenseMatrix,
    /// Lifted expanded Universum points as columns (`d × 2r`).
    pub u: DenseMatrix,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// The weight-independent part: everything but `λVᵀDV`.
struct BaseSystem {
    n: usize,
    sigma: DenseMatrix,
    beta: DVector<f64>,
    a: DenseMatrix,
    u: DenseMatrix,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn columns(points: &[Vec<f64>], d: usize) -> DenseMatrix {
    let rows = embed_rows(points);
    DenseMatrix::from_fn(d, rows.len(), |i, j| rows[j][i])
}

impl BaseSystem {
    fn new(train: &LabeledDataset, universum: &ExpandedUniversum, h: &Hyperparams) -> Result<Self> {
        h.validate()?;
        let n = train.dim();
        if let Some(p) = universum.points.iter().find(|p| p.len() != n) {
            return Err(Error::Dimension(format!(
                "universum point has {} coordinates, training data has {n}",
                p.len()
            )));
        }
        let d = lifted_len(n);
        let m = train.len();
        let r2 = universum.len();
        let a = columns(train.points(), d);
        let u = columns(&universum.points, d);
        let d1 = train.labels().to_vec();
        let d2 = universum.labels.clone();
        let (mu, cu, eps) = (h.mu, h.c_u, h.eps);

        let mut sigma = DenseMatrix::zeros(d + 1, d + 1);
        let mut zz = sigma.view_mut((0, 0), (d, d));
        zz += build_g(train.points())?;
        zz.gemm(2.0 * mu, &a, &a.transpose(), 1.0);
        if r2 > 0 {
            zz.gemm(2.0 * cu, &u, &u.transpose(), 1.0);
        }
        let a_sum = a.column_sum();
        let u_sum = if r2 > 0 { u.column_sum() } else { DVector::zeros(d) };
        let coupling = 2.0 * mu * &a_sum + 2.0 * cu * &u_sum;
        for k in 0..d {
            sigma[(k, d)] = coupling[k];
            sigma[(d, k)] = coupling[k];
        }
        // 2C_u·eᵀe over 2r rows is the 4C_u·r of the block formula
        sigma[(d, d)] = 2.0 * mu * m as f64 + 2.0 * cu * r2 as f64;

        let a_y = &a * DVector::from_column_slice(&d1);
        let u_y = if r2 > 0 { &u * DVector::from_column_slice(&d2) } else { DVector::zeros(d) };
        let mut beta = DVector::zeros(d + 1);
        beta.rows_mut(0, d).copy_from(&(2.0 * mu * a_y - 2.0 * cu * eps * u_y));
        beta[d] = 2.0 * mu * d1.iter().sum::<f64>() - 2.0 * cu * eps * d2.iter().sum::<f64>();
        Ok(Self {
            n,
            sigma,
            beta,
            a,
            u,
            d1,
            d2,
        })
    }

    fn sigma_with(&self, lambda: f64, weights: &[f64]) -> DenseMatrix {
        let mut s = self.sigma.clone();
        for (k, w) in weights.iter().enumerate() {
            s[(k, k)] += lambda * w;
        }
        s
    }

    fn residual(&self, lambda: f64, weights: &[f64], w: &DVector<f64>) -> f64 {
        (self.sigma_with(lambda, weights) * w - &self.beta).norm()
    }
}

/// `Σ` and `β` for the diagonal weights `D` (one per entry of `hvec(W)`).
pub fn assemble_ls_system(
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
    weights: &[f64],
) -> Result<LsSystem> {
    let base = BaseSystem::new(train, universum, h)?;
    if weights.len() != hvec_len(base.n) {
        return Err(Error::Dimension(format!(
            "{} weights for {} entries of hvec(W)",
            weights.len(),
            hvec_len(base.n)
        )));
    }
    Ok(LsSystem {
        sigma: base.sigma_with(h.lambda, weights),
        beta: base.beta,
        a: base.a,
        u: base.u,
        d1: base.d1,
        d2: base.d2,
    })
}

/// `1/(|Vz| + δ)` per entry of `hvec(W)`.
pub fn irls_weights(z: &[f64], n: usize, delta: f64) -> Vec<f64> {
    z[..hvec_len(n)].iter().map(|v| 1.0 / (v.abs() + delta)).collect()
}

/// `|t| − δ·ln(1 + |t|/δ)`: the function whose quadratic majorizers the
/// reweighted systems minimize. It tends to `|t|` as `δ → 0`.
pub fn smoothed_abs(t: f64, delta: f64) -> f64 {
    let a = t.abs();
    a - delta * (a / delta).ln_1p()
}

/// Per-run diagnostics beyond the [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlsReport {
    pub converged: bool,
    /// Reweighted solves after the initial one.
    pub iterations: usize,
    /// `‖w^{k+1} − w^k‖` per reweighted solve.
    pub steps: Vec<f64>,
    /// Smoothed objective at the initial point and after every solve.
    pub objective_trace: Vec<f64>,
    /// `‖Σ(D^k)w^{k+1} − β‖` for the weights of the last solve.
    pub fixed_point_residual: f64,
    /// `‖Σ(D(z))w − β‖` with weights recomputed at the returned point: the
    /// gradient norm of the smoothed objective.
    pub gradient_residual: f64,
    pub beta_norm: f64,
    pub ridge: f64,
}

/// `ls_objective` with `‖Vz‖₁` replaced by `Σ smoothed_abs`.
fn smoothed_objective(
    z: &[f64],
    c: f64,
    n: usize,
    base: &BaseSystem,
    g: &DenseMatrix,
    h: &Hyperparams,
    delta: f64,
) -> f64 {
    let zv = DVector::from_column_slice(z);
    let l1: f64 = z[..hvec_len(n)].iter().map(|v| smoothed_abs(*v, delta)).sum();
    0.5 * zv.dot(&(g * &zv)) + h.lambda * l1 + squared_losses(&zv, c, base, h)
}

fn squared_losses(z: &DVector<f64>, c: f64, base: &BaseSystem, h: &Hyperparams) -> f64 {
    let fa = base.a.tr_mul(z);
    let xi: f64 = fa
        .iter()
        .zip(&base.d1)
        .map(|(f, y)| (1.0 - y * (f + c)).powi(2))
        .sum();
    let psi: f64 = if base.d2.is_empty() {
        0.0
    } else {
        base.u
            .tr_mul(z)
            .iter()
            .zip(&base.d2)
            .map(|(f, y)| (h.eps + y * (f + c)).powi(2))
            .sum()
    };
    h.mu * xi + h.c_u * psi
}

/// `½zᵀGz + λ‖Vz‖₁ + μ‖e − D₁(Aᵀz + ce)‖² + C_u‖εe + D₂(Uᵀz + ce)‖²`.
pub fn ls_objective(
    z: &[f64],
    c: f64,
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
) -> Result<f64> {
    let n = train.dim();
    if z.len() != lifted_len(n) {
        return Err(Error::Dimension(format!(
            "z has {} entries, expected {}",
            z.len(),
            lifted_len(n)
        )));
    }
    let base = BaseSystem::new(train, universum, h)?;
    let g = build_g(train.points())?;
    let zv = DVector::from_column_slice(z);
    let l1: f64 = z[..hvec_len(n)].iter().map(|v| v.abs()).sum();
    Ok(0.5 * zv.dot(&(&g * &zv)) + h.lambda * l1 + squared_losses(&zv, c, &base, h))
}

/// Runs the reweighting iteration. Without `z0` the start is the solution
/// of the system with unit weights; with `z0` the start is `z0` paired with
/// its best offset `c`.
pub fn irls_solve(
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
    cfg: &IrlsConfig,
    z0: Option<&[f64]>,
) -> Result<(TrainedModel, IrlsReport)> {
    let start = Instant::now();
    cfg.validate()?;
    let n = train.dim();
    let d = lifted_len(n);
    let hl = hvec_len(n);
    let base = BaseSystem::new(train, universum, h)?;
    let g = build_g(train.points())?;
    let mut ridge = 0.0_f64;

    let solve = |weights: &[f64], ridge: &mut f64| -> Result<DVector<f64>> {
        let fac = cholesky_with_ridge(base.sigma_with(h.lambda, weights), cfg.ridge)?;
        *ridge = ridge.max(fac.ridge);
        Ok(fac.solve(&base.beta))
    };

    let mut w = match z0 {
        None => solve(&vec![1.0; hl], &mut ridge)?,
        Some(z) => {
            if z.len() != d {
                return Err(Error::Dimension(format!("z0 has {} entries, expected {d}", z.len())));
            }
            let zv = DVector::from_column_slice(z);
            let row = base.sigma.row(d);
            let c = (base.beta[d] - row.columns(0, d).dot(&zv.transpose())) / base.sigma[(d, d)];
            let mut w = DVector::zeros(d + 1);
            w.rows_mut(0, d).copy_from(&zv);
            w[d] = c;
            w
        }
    };

    let objective = |w: &DVector<f64>| {
        let z: Vec<f64> = w.rows(0, d).iter().copied().collect();
        smoothed_objective(&z, w[d], n, &base, &g, h, cfg.delta)
    };
    let mut trace = vec![objective(&w)];
    let mut steps = Vec::new();
    let mut converged = false;
    let mut weights = irls_weights(w.as_slice(), n, cfg.delta);
    let mut fixed_point_residual = f64::NAN;
    for _ in 0..cfg.max_iter {
        let next = solve(&weights, &mut ridge)?;
        fixed_point_residual = base.residual(h.lambda, &weights, &next);
        let step = (&next - &w).norm();
        steps.push(step);
        w = next;
        trace.push(objective(&w));
        weights = irls_weights(w.as_slice(), n, cfg.delta);
        if step <= cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "IRLS stopped after {} iterations with step {:.3e}",
            cfg.max_iter,
            steps.last().copied().unwrap_or(f64::NAN)
        );
    }

    let z: Vec<f64> = w.rows(0, d).iter().copied().collect();
    let c = w[d];
    let gradient_residual = base.residual(h.lambda, &weights, &w);
    let classifier = QuadraticClassifier::from_z(n, &z, c)?;
    let zv = DVector::from_column_slice(&z);
    let xi: Vec<f64> = base
        .a
        .tr_mul(&zv)
        .iter()
        .zip(&base.d1)
        .map(|(f, y)| 1.0 - y * (f + c))
        .collect();
    let psi: Vec<f64> = if base.d2.is_empty() {
        Vec::new()
    } else {
        base.u
            .tr_mul(&zv)
            .iter()
            .zip(&base.d2)
            .map(|(f, y)| -h.eps - y * (f + c))
            .collect()
    };
    let report = IrlsReport {
        converged,
        iterations: steps.len(),
        steps,
        objective_trace: trace,
        fixed_point_residual,
        gradient_residual,
        beta_norm: base.beta.norm(),
        ridge,
    };
    let model = TrainedModel {
        kind: ModelKind::LsL1USqssvm,
        hyperparams: *h,
        classifier,
        xi,
        psi,
        split: None,
        report: SolveReport {
            solver: SolverKind::Irls,
            status: if converged { SolveStatus::Converged } else { SolveStatus::MaxIter },
            iterations: report.iterations,
            objective: ls_objective(&z, c, train, universum, h)?,
            residual: gradient_residual,
            final_step: report.steps.last().copied(),
            ridge,
            seconds: start.elapsed().as_secs_f64(),
            trace: report.objective_trace.clone(),
        },
    };
    Ok((model, report))
}

/// Candidate `(ẑ, ĉ)` from the unregularized, unweighted least-squares fit
/// `min ‖e − D₁(Aᵀz + ce)‖² + ‖εe + D₂(Uᵀz + ce)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryFit {
    pub z: Vec<f64>,
    pub c: f64,
    pub objective: f64,
    /// Gradient norm of the fit objective at the solution.
    pub gradient: f64,
}

pub fn solve_auxiliary_z(
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    eps: f64,
) -> Result<AuxiliaryFit> {
    // unit weights reproduce the fit's normal equations, up to the G block
    let h = Hyperparams {
        mu: 1.0,
        lambda: 0.0,
        c_u: 1.0,
        eps,
    };
    let base = BaseSystem::new(train, universum, &h)?;
    let d = lifted_len(train.dim());
    let g = build_g(train.points())?;
    let mut normal = base.sigma.clone();
    let mut zz = normal.view_mut((0, 0), (d, d));
    zz -= &g;
    let normal = normal / 2.0;
    let rhs = &base.beta / 2.0;
    let fac = cholesky_with_ridge(normal.clone(), 1e-10)?;
    let w = fac.solve(&rhs);
    let z: Vec<f64> = w.rows(0, d).iter().copied().collect();
    let c = w[d];
    let gradient = (2.0 * (&normal * &w - &rhs)).amax();
    let objective = squared_losses(&DVector::from_column_slice(&z), c, &base, &h);
    Ok(AuxiliaryFit {
        z,
        c,
        objective,
        gradient,
    })
}

/// Sufficient condition for a nonzero optimal `z`: with `C_u = μ`, any
/// `μ` above `threshold` makes `ẑ` beat every `z = 0` solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Best offset, and its slacks, among classifiers with `z = 0`.
    pub c_tilde: f64,
    pub xi_tilde: Vec<f64>,
    pub psi_tilde: Vec<f64>,
    /// Best offset, and its slacks, for the candidate `ẑ`.
    pub c_hat: f64,
    pub xi_hat: Vec<f64>,
    pub psi_hat: Vec<f64>,
    /// `‖ξ̃‖² + ‖ψ̃‖² − ‖ξ̂‖² − ‖ψ̂‖²`.
    pub denominator: f64,
    /// `(½ẑᵀGẑ + λ‖Vẑ‖₁)/denominator`; infinite when the certificate is
    /// not valid.
    pub threshold: f64,
    pub valid: bool,
    /// `μ‖ξ̃‖² + C_u‖ψ̃‖²`, the objective of the best `z = 0` solution.
    pub zero_objective: f64,
}

pub fn nonzero_z_certificate(
    train: &LabeledDataset,
    universum: &ExpandedUniversum,
    h: &Hyperparams,
    z_hat: &[f64],
) -> Result<Certificate> {
    h.validate()?;
    let n = train.dim();
    let d = lifted_len(n);
    if z_hat.len() != d {
        return Err(Error::Dimension(format!(
            "candidate has {} entries, expected {d}",
            z_hat.len()
        )));
    }
    if h.c_u != h.mu {
        return Err(Error::InvalidParam(format!(
            "the certificate assumes C_u = mu (got {} and {})",
            h.c_u, h.mu
        )));
    }
    let base = BaseSystem::new(train, universum, h)?;
    let (mu, cu, eps) = (h.mu, h.c_u, h.eps);
    let m = base.d1.len() as f64;
    let r2 = base.d2.len() as f64;
    let sum1: f64 = base.d1.iter().sum();
    let sum2: f64 = base.d2.iter().sum();

    let c_tilde = (mu * sum1 - cu * eps * sum2) / (mu * m + r2 * cu);
    let xi_tilde: Vec<f64> = base.d1.iter().map(|y| 1.0 - y * c_tilde).collect();
    let psi_tilde: Vec<f64> = base.d2.iter().map(|y| -eps - y * c_tilde).collect();

    let zv = DVector::from_column_slice(z_hat);
    let fa = base.a.tr_mul(&zv);
    let fu = if base.d2.is_empty() { DVector::zeros(0) } else { base.u.tr_mul(&zv) };
    let c_hat = (sum1 - fa.sum() - eps * sum2 - fu.sum()) / (m + r2);
    let xi_hat: Vec<f64> = fa
        .iter()
        .zip(&base.d1)
        .map(|(f, y)| 1.0 - y * f - y * c_hat)
        .collect();
    let psi_hat: Vec<f64> = fu
        .iter()
        .zip(&base.d2)
        .map(|(f, y)| -eps - y * f - y * c_hat)
        .collect();

    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let denominator = sq(&xi_tilde) + sq(&psi_tilde) - sq(&xi_hat) - sq(&psi_hat);
    let g = build_g(train.points())?;
    let l1: f64 = z_hat[..hvec_len(n)].iter().map(|v| v.abs()).sum();
    let numerator = 0.5 * zv.dot(&(&g * &zv)) + h.lambda * l1;
    // relative floor: a candidate that only reproduces the z = 0 fit up to
    // rounding certifies nothing
    let floor = 1e-12 * (sq(&xi_tilde) + sq(&psi_tilde)).max(1.0);
    let valid = denominator > floor;
    Ok(Certificate {
        zero_objective: mu * sq(&xi_tilde) + cu * sq(&psi_tilde),
        c_tilde,
        xi_tilde,
        psi_tilde,
        c_hat,
        xi_hat,
        psi_hat,
        denominator,
        threshold: if valid { numerator / denominator } else { f64::INFINITY },
        valid,
    })
}
