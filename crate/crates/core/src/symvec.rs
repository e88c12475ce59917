//! Vectorization calculus for symmetric matrices.
//!
//! A quadratic surface `f(x) = ½ xᵀWx + xᵀb + c` is linear in the unknowns
//! `(W, b, c)`. Packing the symmetric `W` by its half-vectorization
//! `w = hvec(W)` turns every model in this crate into a problem over the
//! stacked vector `z = [w; b]`:
//!
//! * `½ xᵀWx + xᵀb = zᵀr` with the lifted feature `r = [½·Dₙᵀvec(x xᵀ); x]`
//!   ([`lift_point`]; off-diagonal slots carry `x_k x_l`, not `½x_k x_l`),
//! * `Wx + b = H z` with `H = [(Iₙ ⊗ xᵀ)·Dₙ  Iₙ]`,
//! * `Σᵢ ‖Wxᵢ + b‖² = ½ zᵀGz` with `G = 2 Σᵢ HᵢᵀHᵢ`.
//!
//! `hvec` stacks the lower triangle column by column:
//! `(a₁₁, …, aₙ₁, a₂₂, …, aₙ₂, …, aₙₙ)`. Every pack/unpack in the crate goes
//! through [`hvec_index`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense column-major matrix used throughout the crate.
pub type DenseMatrix = DMatrix<f64>;

/// Relative asymmetry accepted (and averaged away) by [`hvec`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Length of `hvec` for an `n × n` matrix.
pub const fn hvec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Length of `z = [hvec(W); b]` for feature dimension `n`.
pub const fn lifted_len(n: usize) -> usize {
    hvec_len(n) + n
}

/// Position of entry `(i, j)` of a symmetric `n × n` matrix inside its
/// half-vectorization. Order of `i` and `j` does not matter.
#[inline]
pub fn hvec_index(n: usize, i: usize, j: usize) -> usize {
    let (row, col) = if i >= j { (i, j) } else { (j, i) };
    debug_assert!(row < n);
    // columns 0..col contribute n, n-1, ..., n-col+1 entries
    col * n - col * col.saturating_sub(1) / 2 + (row - col)
}

/// Half-vectorized symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymHalfVec {
    n: usize,
    data: Vec<f64>,
}

impl SymHalfVec {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; hvec_len(n)],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != hvec_len(n) {
            return Err(Error::Dimension(format!(
                "half-vector for n={n} needs {} entries, got {}",
                hvec_len(n),
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_symmetric(a: &DenseMatrix) -> Result<Self> {
        hvec(a)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[hvec_index(self.n, i, j)]
    }

    /// Expands back to the full symmetric matrix.
    pub fn to_symmetric(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// `Σ_{i≤j} |W_ij|`, each off-diagonal pair counted once.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `½ xᵀWx`.
    pub fn half_quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for j in 0..n {
            acc += 0.5 * self.get(j, j) * x[j] * x[j];
            for i in (j + 1)..n {
                acc += self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }
}

fn check_square(a: &DenseMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Largest `|a_ij - a_ji|`.
pub fn max_asymmetry(a: &DenseMatrix) -> f64 {
    let n = a.nrows().min(a.ncols());
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn symmetry_scale(a: &DenseMatrix) -> f64 {
    a.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// Column-stacked vectorization.
pub fn vec(a: &DenseMatrix) -> Result<DVector<f64>> {
    check_square(a)?;
    // nalgebra storage is already column-major
    Ok(DVector::from_column_slice(a.as_slice()))
}

/// Half-vectorization of a symmetric matrix. Asymmetry up to
/// [`SYMMETRY_TOL`] (relative to the largest entry) is averaged away.
pub fn hvec(a: &DenseMatrix) -> Result<SymHalfVec> {
    let n = check_square(a)?;
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL * symmetry_scale(a) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut data = vec![0.0; hvec_len(n)];
    for j in 0..n {
        for i in j..n {
            data[hvec_index(n, i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    Ok(SymHalfVec { n, data })
}

/// Duplication matrix `Dₙ` with `Dₙ·hvec(A) = vec(A)` for symmetric `A`.
pub fn duplication_matrix(n: usize) -> DenseMatrix {
    let mut d = DenseMatrix::zeros(n * n, hvec_len(n));
    for j in 0..n {
        for i in 0..n {
            d[(j * n + i, hvec_index(n, i, j))] = 1.0;
        }
    }
    d
}

/// Elimination matrix `Lₙ` with `Lₙ·vec(A) = hvec(A)`.
pub fn elimination_matrix(n: usize) -> DenseMatrix {
    let mut l = DenseMatrix::zeros(hvec_len(n), n * n);
    for j in 0..n {
        for i in j..n {
            l[(hvec_index(n, i, j), j * n + i)] = 1.0;
        }
    }
    l
}

/// Kronecker product `A ⊗ B`.
pub fn kronecker(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = DenseMatrix::zeros(m * p, n * q);
    for i in 0..m {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// The lifted feature of a point: `s = ½·hvec(x xᵀ)`, `r = [s; x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEmbedding {
    pub s: DVector<f64>,
    pub x: DVector<f64>,
    pub r: DVector<f64>,
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn embed_point(x: &[f64]) -> Result<FeatureEmbedding> {
    check_finite(x, "point")?;
    let n = x.len();
    let mut s = DVector::zeros(hvec_len(n));
    for j in 0..n {
        for i in j..n {
            s[hvec_index(n, i, j)] = 0.5 * x[i] * x[j];
        }
    }
    let xv = DVector::from_column_slice(x);
    let r = DVector::from_iterator(lifted_len(n), s.iter().chain(xv.iter()).copied());
    Ok(FeatureEmbedding { s, x: xv, r })
}

/// Lifted feature used by the classifiers: `½x_k²` on the diagonal slots and
/// `x_k x_l` on the off-diagonal ones, then `x`. It is `[½Dₙᵀvec(xxᵀ); x]`,
/// so `[hvec(W); b]·lift_point(x) = ½xᵀWx + xᵀb` exactly. The plain
/// `½hvec(xxᵀ)` of [`embed_point`] counts each off-diagonal `W_kl` only once
/// where `xᵀWx` counts it twice.
pub fn lift_point(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lifted_len(x.len())];
    lift_into(x, &mut out);
    out
}

/// [`lift_point`] into a caller-provided slice of length `lifted_len(n)`.
pub fn lift_into(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    assert_eq!(out.len(), lifted_len(n), "lift buffer has the wrong length");
    for j in 0..n {
        out[hvec_index(n, j, j)] = 0.5 * x[j] * x[j];
        for i in (j + 1)..n {
            out[hvec_index(n, i, j)] = x[i] * x[j];
        }
    }
    out[hvec_len(n)..].copy_from_slice(x);
}

/// `H = [Mₓ  Iₙ]` with `Mₓ = (Iₙ ⊗ xᵀ)·Dₙ`, so that `H·[hvec(W); b] = Wx + b`.
pub fn build_h(x: &[f64], n: usize) -> Result<DenseMatrix> {
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, expected {n}",
            x.len()
        )));
    }
    check_finite(x, "point")?;
    let h = hvec_len(n);
    let mut out = DenseMatrix::zeros(n, h + n);
    // (Wx)_i = Σ_j W_ij x_j and W_ij lives at hvec_index(i, j)
    for i in 0..n {
        for (j, xj) in x.iter().enumerate() {
            out[(i, hvec_index(n, i, j))] += xj;
        }
        out[(i, h + i)] = 1.0;
    }
    Ok(out)
}

/// `G = 2 Σᵢ HᵢᵀHᵢ` over the given points.
pub fn build_g<P: AsRef<[f64]>>(samples: &[P]) -> Result<DenseMatrix> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Empty("sample list".into()))?;
    let n = first.as_ref().len();
    let d = lifted_len(n);
    let h = hvec_len(n);
    let mut g = DenseMatrix::zeros(d, d);
    // each row i of H has entries x_j at hvec_index(i, j) and 1 at h + i
    let mut cols: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
    for (k, p) in samples.iter().enumerate() {
        let x = p.as_ref();
        if x.len() != n {
            return Err(Error::Dimension(format!(
                "sample {k} has {} coordinates, expected {n}",
                x.len()
            )));
        }
        check_finite(x, "sample")?;
        for i in 0..n {
            cols.clear();
            for (j, &xj) in x.iter().enumerate() {
                cols.push((hvec_index(n, i, j), xj));
            }
            cols.push((h + i, 1.0));
            for &(a, va) in &cols {
                for &(b, vb) in &cols {
                    g[(a, b)] += 2.0 * va * vb;
                }
            }
        }
    }
    Ok(g)
}

/// Symmetric positive definiteness by an unpivoted Cholesky sweep: every
/// pivot must exceed `1e-10 · max diagonal`.
pub fn is_positive_definite(g: &DenseMatrix) -> Result<bool> {
    let n = check_square(g)?;
    let asym = max_asymmetry(g);
    if asym > 1e-10 * symmetry_scale(g) {
        return Err(Error::NotSymmetric(asym));
    }
    let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(g[(i, i)]));
    if n == 0 {
        return Ok(true);
    }
    if max_diag <= 0.0 {
        return Ok(false);
    }
    let floor = 1e-10 * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = g[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot <= floor {
            return Ok(false);
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut v = g[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / root;
        }
    }
    Ok(true)
}
