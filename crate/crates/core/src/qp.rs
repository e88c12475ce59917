//! Dense convex quadratic programs
//!
//! ```text
//!     minimize    ½ xᵀQx + qᵀx
//!     subject to  A x ≥ b
//!                 x_j ≥ 0   for j in the nonnegativity mask
//! ```
//!
//! [`solve_qp`] is a primal-dual interior-point method with Mehrotra's
//! predictor-corrector. Variables whose column of `Q` is diagonal and that
//! share no constraint row with another such variable (the slacks of every
//! SVM-type problem) are eliminated by a Schur complement, so a Newton step
//! costs a factorization of the remaining dense block only.
//!
//! [`brute_force_oracle`] enumerates active sets and is meant for checking
//! the solver on problems with at most a couple of dozen constraints.

use std::io;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_ridge, RidgedCholesky};
use crate::symvec::{max_asymmetry, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Symmetric positive semidefinite `Q` (d × d).
    pub quad: DenseMatrix,
    /// Linear term `q` (d).
    pub lin: DVector<f64>,
    /// Inequality matrix `A` (p × d) for `A x ≥ b`.
    pub a: DenseMatrix,
    pub b: DVector<f64>,
    /// Variables constrained to be nonnegative.
    pub nonneg: Vec<bool>,
}

impl QpProblem {
    pub fn new(
        quad: DenseMatrix,
        lin: DVector<f64>,
        a: DenseMatrix,
        b: DVector<f64>,
        nonneg: Vec<bool>,
    ) -> Result<Self> {
        let d = lin.len();
        if quad.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "Q is {:?}, expected {d}x{d}",
                quad.shape()
            )));
        }
        if a.ncols() != d || a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A is {:?} with {} right-hand sides for {d} variables",
                a.shape(),
                b.len()
            )));
        }
        if nonneg.len() != d {
            return Err(Error::Dimension(format!(
                "nonnegativity mask has {} entries for {d} variables",
                nonneg.len()
            )));
        }
        let asym = max_asymmetry(&quad);
        if asym > 1e-10 * quad.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let finite = quad.iter().chain(lin.iter()).chain(a.iter()).chain(b.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("QP data".into()));
        }
        Ok(Self {
            quad,
            lin,
            a,
            b,
            nonneg,
        })
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.quad * x)) + self.lin.dot(x)
    }

    /// Plain-text dump of `(Q, q, A, b, mask)`, one matrix row per line.
    pub fn write_text<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.dim();
        writeln!(out, "# Q {d} {d}")?;
        for i in 0..d {
            write_row(&mut out, self.quad.row(i).iter())?;
        }
        writeln!(out, "# q {d}")?;
        write_row(&mut out, self.lin.iter())?;
        writeln!(out, "# A {} {d}", self.n_ineq())?;
        for i in 0..self.n_ineq() {
            write_row(&mut out, self.a.row(i).iter())?;
        }
        writeln!(out, "# b {}", self.n_ineq())?;
        write_row(&mut out, self.b.iter())?;
        writeln!(out, "# nonneg {d}")?;
        let mask: Vec<&str> = self.nonneg.iter().map(|m| if *m { "1" } else { "0" }).collect();
        writeln!(out, "{}", mask.join(" "))
    }
}

fn write_row<'a, W: io::Write>(out: &mut W, vals: impl Iterator<Item = &'a f64>) -> io::Result<()> {
    let cells: Vec<String> = vals.map(|v| format!("{v:e}")).collect();
    writeln!(out, "{}", cells.join(" "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpStatus {
    Optimal,
    MaxIter,
    InfeasibleDetected,
}

/// One interior-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// Scaled KKT residual at the start of the iteration.
    pub merit: f64,
    /// Average complementarity product.
    pub mu: f64,
    pub step: f64,
    /// Set when the merit rose against the previous iterate; the step taken
    /// is then a pure centering step instead of predictor-corrector.
    pub recovery: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of `A x ≥ b`.
    pub dual_ineq: DVector<f64>,
    /// Multipliers of `x ≥ 0`; zero for variables outside the mask.
    pub dual_bound: DVector<f64>,
    pub objective: f64,
    /// Wolfe dual value `bᵀλ − ½ xᵀQx`.
    pub dual_objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: QpStatus,
    /// Largest ridge added to a Newton system.
    pub ridge: f64,
    pub trace: Vec<IterRecord>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting value of the slacks, multipliers and bounded variables.
    pub init_scale: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            init_scale: 1.0,
        }
    }
}

/// Components of the scaled KKT residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktParts {
    pub stationarity: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
}

impl KktParts {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_infeasibility)
            .max(self.dual_infeasibility)
            .max(self.complementarity)
    }
}

/// KKT violation of a primal-dual point:
/// stationarity `‖Qx + q − Aᵀλ − ν‖∞` and complementarity
/// `max λᵢ|aᵢᵀx − bᵢ|, νⱼ|xⱼ|` relative to `1 + ‖q‖∞`, primal violation
/// relative to `1 + ‖b‖∞`, and negative multipliers.
pub fn kkt_parts(
    p: &QpProblem,
    x: &DVector<f64>,
    dual_ineq: &DVector<f64>,
    dual_bound: &DVector<f64>,
) -> KktParts {
    let dual_scale = 1.0 + p.lin.amax();
    let primal_scale = 1.0 + p.b.amax();
    let ax = &p.a * x;
    let grad = &p.quad * x + &p.lin - p.a.transpose() * dual_ineq - dual_bound;
    let mut primal = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut dual_neg = 0.0_f64;
    for i in 0..p.n_ineq() {
        let gap = ax[i] - p.b[i];
        primal = primal.max(-gap);
        comp = comp.max((dual_ineq[i] * gap).abs());
        dual_neg = dual_neg.max(-dual_ineq[i]);
    }
    for j in 0..p.dim() {
        if p.nonneg[j] {
            primal = primal.max(-x[j]);
            comp = comp.max((dual_bound[j] * x[j]).abs());
            dual_neg = dual_neg.max(-dual_bound[j]);
        } else {
            // a multiplier on a free variable is a stationarity error
            dual_neg = dual_neg.max(dual_bound[j].abs());
        }
    }
    KktParts {
        stationarity: grad.amax() / dual_scale,
        primal_infeasibility: primal.max(0.0) / primal_scale,
        dual_infeasibility: dual_neg.max(0.0) / dual_scale,
        complementarity: comp / dual_scale,
    }
}

pub fn kkt_residual(p: &QpProblem, s: &QpSolution) -> f64 {
    kkt_parts(p, &s.x, &s.dual_ineq, &s.dual_bound).max()
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Dense(usize),
    Diag,
}

/// Sparsity bookkeeping for the Newton systems.
struct Layout {
    dense: Vec<usize>,
    diag: Vec<usize>,
    /// Nonzeros of each row of `A` over dense variables, by dense position.
    row_dense: Vec<Vec<(usize, f64)>>,
    /// Rows touching each diagonal variable with the coefficient.
    diag_rows: Vec<Vec<(usize, f64)>>,
    /// Full nonzero pattern of each row, by variable index.
    row_nz: Vec<Vec<(usize, f64)>>,
    bounded: Vec<usize>,
}

impl Layout {
    fn new(p: &QpProblem) -> Self {
        let d = p.dim();
        let rows = p.n_ineq();
        let row_nz: Vec<Vec<(usize, f64)>> = (0..rows)
            .map(|i| {
                (0..d)
                    .filter_map(|j| {
                        let v = p.a[(i, j)];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        for (i, nz) in row_nz.iter().enumerate() {
            for &(j, v) in nz {
                col_rows[j].push((i, v));
            }
        }
        // candidates: Q column diagonal and something keeps the pivot positive
        let mut candidates: Vec<usize> = (0..d)
            .filter(|&j| {
                let off_diag_zero = (0..d).all(|k| k == j || p.quad[(k, j)] == 0.0);
                let anchored = p.quad[(j, j)] > 0.0 || p.nonneg[j] || !col_rows[j].is_empty();
                off_diag_zero && anchored
            })
            .collect();
        candidates.sort_by_key(|&j| (col_rows[j].len(), j));
        let mut row_taken = vec![false; rows];
        let mut is_diag = vec![false; d];
        for j in candidates {
            if col_rows[j].iter().all(|&(i, _)| !row_taken[i]) {
                is_diag[j] = true;
                for &(i, _) in &col_rows[j] {
                    row_taken[i] = true;
                }
            }
        }
        let mut slots = Vec::with_capacity(d);
        let mut dense = Vec::new();
        let mut diag = Vec::new();
        for (j, &is_d) in is_diag.iter().enumerate() {
            if is_d {
                slots.push(Slot::Diag);
                diag.push(j);
            } else {
                slots.push(Slot::Dense(dense.len()));
                dense.push(j);
            }
        }
        let row_dense = row_nz
            .iter()
            .map(|nz| {
                nz.iter()
                    .filter_map(|&(j, v)| match slots[j] {
                        Slot::Dense(k) => Some((k, v)),
                        Slot::Diag => None,
                    })
                    .collect()
            })
            .collect();
        let diag_rows = diag.iter().map(|&j| col_rows[j].clone()).collect();
        let bounded = (0..d).filter(|&j| p.nonneg[j]).collect();
        Self {
            dense,
            diag,
            row_dense,
            diag_rows,
            row_nz,
            bounded,
        }
    }
}

/// Factorized reduced Newton matrix.
struct Factored {
    chol: RidgedCholesky,
    pivots: Vec<f64>,
    /// Coupling of each diagonal variable to the dense block (sparse).
    coupling: Vec<Vec<(usize, f64)>>,
}

struct NewtonSystem<'a> {
    layout: &'a Layout,
    quad: &'a DenseMatrix,
}

impl NewtonSystem<'_> {
    /// Factorizes `Q + Aᵀ diag(row_w) A + diag(var_w)` after eliminating the
    /// diagonal variables.
    fn factor(&self, row_w: &[f64], var_w: &[f64]) -> Result<Factored> {
        let l = self.layout;
        let nd = l.dense.len();
        let mut m11 = DenseMatrix::from_fn(nd, nd, |a, b| self.quad[(l.dense[a], l.dense[b])]);
        for (k, &j) in l.dense.iter().enumerate() {
            m11[(k, k)] += var_w[j];
        }
        for (i, nz) in l.row_dense.iter().enumerate() {
            let w = row_w[i];
            for &(a, va) in nz {
                for &(b, vb) in nz {
                    m11[(a, b)] += w * va * vb;
                }
            }
        }
        let mut pivots = Vec::with_capacity(l.diag.len());
        let mut coupling = Vec::with_capacity(l.diag.len());
        let mut scratch = vec![0.0; nd];
        let mut touched: Vec<usize> = Vec::new();
        for (t, &j) in l.diag.iter().enumerate() {
            let mut pivot = self.quad[(j, j)] + var_w[j];
            for &(i, a) in &l.diag_rows[t] {
                pivot += row_w[i] * a * a;
                for &(k, v) in &l.row_dense[i] {
                    if scratch[k] == 0.0 {
                        touched.push(k);
                    }
                    scratch[k] += row_w[i] * a * v;
                }
            }
            if !(pivot > 0.0 && pivot.is_finite()) {
                return Err(Error::Singular(format!(
                    "nonpositive pivot {pivot:e} for variable {j}"
                )));
            }
            let col: Vec<(usize, f64)> = touched.drain(..).map(|k| (k, std::mem::take(&mut scratch[k]))).collect();
            for &(a, va) in &col {
                for &(b, vb) in &col {
                    m11[(a, b)] -= va * vb / pivot;
                }
            }
            pivots.push(pivot);
            coupling.push(col);
        }
        let chol = cholesky_with_ridge(m11, 1e-12)?;
        Ok(Factored {
            chol,
            pivots,
            coupling,
        })
    }

    fn solve(&self, f: &Factored, rhs: &DVector<f64>) -> DVector<f64> {
        let l = self.layout;
        let mut r1 = DVector::from_iterator(l.dense.len(), l.dense.iter().map(|&j| rhs[j]));
        for (t, &j) in l.diag.iter().enumerate() {
            let scale = rhs[j] / f.pivots[t];
            for &(k, v) in &f.coupling[t] {
                r1[k] -= v * scale;
            }
        }
        let x1 = f.chol.solve(&r1);
        let mut out = DVector::zeros(rhs.len());
        for (k, &j) in l.dense.iter().enumerate() {
            out[j] = x1[k];
        }
        for (t, &j) in l.diag.iter().enumerate() {
            let dot: f64 = f.coupling[t].iter().map(|&(k, v)| v * x1[k]).sum();
            out[j] = (rhs[j] - dot) / f.pivots[t];
        }
        out
    }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

struct Iterate {
    x: DVector<f64>,
    s: Vec<f64>,
    lam: Vec<f64>,
    nu: Vec<f64>,
}

/// Interior-point solve. Always returns the best iterate found; the status
/// tells whether it met `tol`.
pub fn solve_qp(p: &QpProblem, opts: &QpOptions) -> Result<QpSolution> {
    let start = Instant::now();
    if !(opts.tol > 0.0 && opts.init_scale > 0.0) {
        return Err(Error::InvalidParam("tol and init_scale must be positive".into()));
    }
    let d = p.dim();
    let rows = p.n_ineq();
    let layout = Layout::new(p);
    let nb = layout.bounded.len();

    // objective scaling keeps multipliers O(1) for large penalties
    let obj_scale = p.lin.amax().max(p.quad.amax()).max(1.0);
    let quad = &p.quad / obj_scale;
    let lin = &p.lin / obj_scale;
    let system = NewtonSystem {
        layout: &layout,
        quad: &quad,
    };

    let init = opts.init_scale;
    let mut it = Iterate {
        x: DVector::from_fn(d, |j, _| if p.nonneg[j] { init } else { 0.0 }),
        s: vec![init; rows],
        lam: vec![init; rows],
        nu: vec![init; nb],
    };

    let unscaled = |it: &Iterate| -> (DVector<f64>, DVector<f64>) {
        let lam = DVector::from_iterator(rows, it.lam.iter().map(|v| v * obj_scale));
        let mut nu = DVector::zeros(d);
        for (t, &j) in layout.bounded.iter().enumerate() {
            nu[j] = it.nu[t] * obj_scale;
        }
        (lam, nu)
    };

    let mut trace = Vec::new();
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut status = QpStatus::MaxIter;
    let mut ridge = 0.0_f64;
    let mut prev_merit = f64::INFINITY;
    let n_comp = (rows + nb).max(1) as f64;

    for _ in 0..=opts.max_iter {
        let (lam_u, nu_u) = unscaled(&it);
        let merit = kkt_parts(p, &it.x, &lam_u, &nu_u).max();
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, it.x.clone(), lam_u, nu_u));
        }
        if merit <= opts.tol {
            status = QpStatus::Optimal;
            break;
        }
        if trace.len() == opts.max_iter {
            break;
        }
        let blowup = it
            .x
            .iter()
            .chain(it.lam.iter())
            .chain(it.nu.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if blowup > 1e13 || !blowup.is_finite() {
            // iterates also run off along an unbounded optimal face; that is
            // only a stall when the residual already got small
            let best_merit = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            if best_merit > opts.tol.sqrt() {
                status = QpStatus::InfeasibleDetected;
            }
            break;
        }

        // residuals of the scaled problem
        let mut ax = vec![0.0; rows];
        for (i, nz) in layout.row_nz.iter().enumerate() {
            ax[i] = nz.iter().map(|&(j, v)| v * it.x[j]).sum();
        }
        let mut r_d = &quad * &it.x + &lin;
        for (i, nz) in layout.row_nz.iter().enumerate() {
            for &(j, v) in nz {
                r_d[j] -= v * it.lam[i];
            }
        }
        for (t, &j) in layout.bounded.iter().enumerate() {
            r_d[j] -= it.nu[t];
        }
        let r_p: Vec<f64> = (0..rows).map(|i| ax[i] - it.s[i] - p.b[i]).collect();
        let comp_sum: f64 = it.s.iter().zip(&it.lam).map(|(a, b)| a * b).sum::<f64>()
            + layout
                .bounded
                .iter()
                .zip(&it.nu)
                .map(|(&j, n)| it.x[j] * n)
                .sum::<f64>();
        let mu = comp_sum / n_comp;

        let row_w: Vec<f64> = it.lam.iter().zip(&it.s).map(|(l, s)| l / s).collect();
        let mut var_w = vec![0.0; d];
        for (t, &j) in layout.bounded.iter().enumerate() {
            var_w[j] = it.nu[t] / it.x[j];
        }
        let fac = match system.factor(&row_w, &var_w) {
            Ok(f) => f,
            // late failures come from the complementarity ratios degenerating
            // near the optimum; the best iterate so far is still usable
            Err(e) if !trace.is_empty() => {
                log::debug!("QP stopped after {} iterations: {e}", trace.len());
                break;
            }
            Err(e) => return Err(e),
        };
        ridge = ridge.max(fac.chol.ridge);

        let direction = |r_sl: &[f64], r_xn: &[f64]| {
            let mut rhs = -&r_d;
            for (i, nz) in layout.row_nz.iter().enumerate() {
                let coef = (r_sl[i] - it.lam[i] * r_p[i]) / it.s[i];
                for &(j, v) in nz {
                    rhs[j] += v * coef;
                }
            }
            for (t, &j) in layout.bounded.iter().enumerate() {
                rhs[j] += r_xn[t] / it.x[j];
            }
            let dx = system.solve(&fac, &rhs);
            let ds: Vec<f64> = (0..rows)
                .map(|i| layout.row_nz[i].iter().map(|&(j, v)| v * dx[j]).sum::<f64>() + r_p[i])
                .collect();
            let dl: Vec<f64> = (0..rows)
                .map(|i| (r_sl[i] - it.lam[i] * ds[i]) / it.s[i])
                .collect();
            let dn: Vec<f64> = layout
                .bounded
                .iter()
                .enumerate()
                .map(|(t, &j)| (r_xn[t] - it.nu[t] * dx[j]) / it.x[j])
                .collect();
            (dx, ds, dl, dn)
        };
        let step_to_boundary = |dx: &DVector<f64>, ds: &[f64], dl: &[f64], dn: &[f64]| {
            let xb: Vec<f64> = layout.bounded.iter().map(|&j| it.x[j]).collect();
            let dxb: Vec<f64> = layout.bounded.iter().map(|&j| dx[j]).collect();
            max_step(&it.s, ds)
                .min(max_step(&it.lam, dl))
                .min(max_step(&xb, &dxb))
                .min(max_step(&it.nu, dn))
        };

        let recovery = merit > prev_merit;
        prev_merit = merit;
        let (dx, ds, dl, dn) = if recovery {
            let sigma = 0.5;
            let r_sl: Vec<f64> = (0..rows).map(|i| -it.s[i] * it.lam[i] + sigma * mu).collect();
            let r_xn: Vec<f64> = layout
                .bounded
                .iter()
                .enumerate()
                .map(|(t, &j)| -it.x[j] * it.nu[t] + sigma * mu)
                .collect();
            direction(&r_sl, &r_xn)
        } else {
            let r_sl: Vec<f64> = (0..rows).map(|i| -it.s[i] * it.lam[i]).collect();
            let r_xn: Vec<f64> = layout
                .bounded
                .iter()
                .enumerate()
                .map(|(t, &j)| -it.x[j] * it.nu[t])
                .collect();
            let (ax_, as_, al_, an_) = direction(&r_sl, &r_xn);
            let alpha_aff = step_to_boundary(&ax_, &as_, &al_, &an_).min(1.0);
            let mut comp_aff = 0.0;
            for i in 0..rows {
                comp_aff += (it.s[i] + alpha_aff * as_[i]) * (it.lam[i] + alpha_aff * al_[i]);
            }
            for (t, &j) in layout.bounded.iter().enumerate() {
                comp_aff += (it.x[j] + alpha_aff * ax_[j]) * (it.nu[t] + alpha_aff * an_[t]);
            }
            let mu_aff = comp_aff / n_comp;
            let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
            let r_sl: Vec<f64> = (0..rows)
                .map(|i| -it.s[i] * it.lam[i] - as_[i] * al_[i] + sigma * mu)
                .collect();
            let r_xn: Vec<f64> = layout
                .bounded
                .iter()
                .enumerate()
                .map(|(t, &j)| -it.x[j] * it.nu[t] - ax_[j] * an_[t] + sigma * mu)
                .collect();
            direction(&r_sl, &r_xn)
        };
        let alpha = (0.99 * step_to_boundary(&dx, &ds, &dl, &dn)).min(1.0);
        trace.push(IterRecord {
            merit,
            mu,
            step: alpha,
            recovery,
        });

        it.x += alpha * &dx;
        for i in 0..rows {
            it.s[i] += alpha * ds[i];
            it.lam[i] += alpha * dl[i];
        }
        for t in 0..nb {
            it.nu[t] += alpha * dn[t];
        }
    }

    let (merit, x, dual_ineq, dual_bound) = best.expect("at least one iterate is evaluated");
    let objective = p.objective(&x);
    let dual_objective = p.b.dot(&dual_ineq) - 0.5 * x.dot(&(&p.quad * &x));
    if status == QpStatus::MaxIter {
        log::debug!("QP hit max_iter with KKT residual {merit:e}");
    }
    Ok(QpSolution {
        x,
        dual_ineq,
        dual_bound,
        objective,
        dual_objective,
        kkt_residual: merit,
        iterations: trace.len(),
        status,
        ridge,
        trace,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Largest `p + |mask|` the oracle will enumerate.
pub const ORACLE_MAX_CONSTRAINTS: usize = 24;

/// Exhaustive active-set solve: every subset of at most `d` constraints is
/// made active, its equality-constrained KKT system solved, and the best
/// candidate that is primal feasible with nonnegative multipliers returned.
pub fn brute_force_oracle(p: &QpProblem) -> Result<QpSolution> {
    let start = Instant::now();
    let d = p.dim();
    // constraint k: row of A (k < rows) or bound on variable bounded[k - rows]
    let bounded: Vec<usize> = (0..d).filter(|&j| p.nonneg[j]).collect();
    let rows = p.n_ineq();
    let total = rows + bounded.len();
    if total > ORACLE_MAX_CONSTRAINTS {
        return Err(Error::InvalidParam(format!(
            "oracle limited to {ORACLE_MAX_CONSTRAINTS} constraints, got {total}"
        )));
    }
    let coef = |k: usize, j: usize| -> f64 {
        if k < rows {
            p.a[(k, j)]
        } else if bounded[k - rows] == j {
            1.0
        } else {
            0.0
        }
    };
    let rhs_of = |k: usize| if k < rows { p.b[k] } else { 0.0 };
    let feas_tol = 1e-9 * (1.0 + p.b.amax());
    let dual_tol = 1e-9 * (1.0 + p.lin.amax());

    let mut best: Option<(f64, DVector<f64>, Vec<(usize, f64)>)> = None;
    let mut tried = 0usize;
    for mask in 0u32..(1u32 << total) {
        let active: Vec<usize> = (0..total).filter(|k| mask >> k & 1 == 1).collect();
        if active.len() > d {
            continue;
        }
        tried += 1;
        let na = active.len();
        let size = d + na;
        let mut kkt = DenseMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        kkt.view_mut((0, 0), (d, d)).copy_from(&p.quad);
        for j in 0..d {
            rhs[j] = -p.lin[j];
        }
        for (t, &k) in active.iter().enumerate() {
            for j in 0..d {
                let v = coef(k, j);
                kkt[(d + t, j)] = v;
                kkt[(j, d + t)] = -v;
            }
            rhs[d + t] = rhs_of(k);
        }
        let Some(sol) = solve_square(&kkt, &rhs) else {
            continue;
        };
        let x = sol.rows(0, d).into_owned();
        let duals: Vec<(usize, f64)> = active.iter().enumerate().map(|(t, &k)| (k, sol[d + t])).collect();
        if duals.iter().any(|(_, l)| *l < -dual_tol) {
            continue;
        }
        let feasible = (0..total).all(|k| {
            let v: f64 = (0..d).map(|j| coef(k, j) * x[j]).sum();
            v - rhs_of(k) >= -feas_tol
        });
        if !feasible {
            continue;
        }
        let obj = p.objective(&x);
        if best.as_ref().is_none_or(|b| obj < b.0 - 1e-14 * (1.0 + obj.abs())) {
            best = Some((obj, x, duals));
        }
    }
    let (objective, x, duals) =
        best.ok_or_else(|| Error::Solver("no feasible KKT point among active sets".into()))?;
    let mut dual_ineq = DVector::zeros(rows);
    let mut dual_bound = DVector::zeros(d);
    for (k, l) in duals {
        if k < rows {
            dual_ineq[k] = l;
        } else {
            dual_bound[bounded[k - rows]] = l;
        }
    }
    let dual_objective = p.b.dot(&dual_ineq) - 0.5 * x.dot(&(&p.quad * &x));
    let kkt_residual = kkt_parts(p, &x, &dual_ineq, &dual_bound).max();
    Ok(QpSolution {
        x,
        dual_ineq,
        dual_bound,
        objective,
        dual_objective,
        kkt_residual,
        iterations: tried,
        status: QpStatus::Optimal,
        ridge: 0.0,
        trace: Vec::new(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves a square system by LU, falling back to an SVD least-squares solve;
/// `None` unless the result satisfies the system to working precision.
fn solve_square(m: &DenseMatrix, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = 1.0 + m.amax() * (1.0 + rhs.amax());
    let accept = |sol: &DVector<f64>| {
        sol.iter().all(|v| v.is_finite()) && (m * sol - rhs).amax() <= 1e-9 * scale * (1.0 + sol.amax())
    };
    if let Some(sol) = m.clone().lu().solve(rhs) {
        if accept(&sol) {
            return Some(sol);
        }
    }
    let svd = m.clone().svd(true, true);
    let sol = svd.solve(rhs, 1e-12 * svd.singular_values.amax()).ok()?;
    accept(&sol).then_some(sol)
}
