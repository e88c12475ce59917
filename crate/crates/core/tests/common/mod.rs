//! Shared generators for the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use qsurf::qp::QpProblem;
use qsurf::symvec::DenseMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Feasible, bounded convex QP. Semidefinite instances box the variables with
/// nonnegativity plus a budget row so the minimum exists.
pub fn random_qp(rng: &mut ChaCha8Rng) -> (QpProblem, bool) {
    let d = rng.random_range(1..=5);
    let definite = rng.random_bool(0.7);
    let rank = if definite { d } else { rng.random_range(0..d) };
    let b = DenseMatrix::from_fn(rank, d, |_, _| rng.random_range(-1.0..1.0));
    let mut quad = b.transpose() * &b;
    if definite {
        for i in 0..d {
            quad[(i, i)] += 0.1;
        }
    }
    let lin = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
    let nonneg: Vec<bool> = (0..d).map(|_| !definite || rng.random_bool(0.4)).collect();
    let x0 = DVector::from_fn(d, |j, _| {
        let v: f64 = rng.random_range(-1.0..1.0);
        if nonneg[j] { v.abs() + 0.1 } else { v }
    });
    let p = rng.random_range(0..=if definite { 8 } else { 7 });
    let mut rows: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut rhs: Vec<f64> = rows
        .iter()
        .map(|a| {
            let ax: f64 = a.iter().zip(x0.iter()).map(|(u, v)| u * v).sum();
            ax - rng.random_range(0.0..1.0)
        })
        .collect();
    if !definite {
        rows.push(vec![-1.0; d]);
        rhs.push(-x0.sum() - 1.0);
    }
    let a = DenseMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let problem = QpProblem::new(quad, lin, a, DVector::from_vec(rhs), nonneg).unwrap();
    (problem, definite)
}
