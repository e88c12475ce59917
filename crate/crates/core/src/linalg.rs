use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::symvec::DenseMatrix;

/// Largest ridge tried before a system is declared singular, relative to
/// the matrix scale.
const MAX_RELATIVE_RIDGE: f64 = 1e-4;

/// Cholesky factor of `M + ridge·I` together with the ridge that made it
/// factorizable (0 when none was needed).
pub struct RidgedCholesky {
    pub factor: Cholesky<f64, Dyn>,
    pub ridge: f64,
}

impl RidgedCholesky {
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(rhs)
    }
}

/// Factorizes a symmetric matrix, adding `first_ridge·scale·I` and growing
/// it by 100× per attempt when the plain factorization fails.
pub fn cholesky_with_ridge(m: DenseMatrix, first_ridge: f64) -> Result<RidgedCholesky> {
    let scale = m.diagonal().amax().max(1e-300);
    if let Some(factor) = Cholesky::new(m.clone()) {
        if factor.l_dirty().diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
            return Ok(RidgedCholesky { factor, ridge: 0.0 });
        }
    }
    let mut rel = first_ridge;
    while rel <= MAX_RELATIVE_RIDGE {
        let ridge = rel * scale;
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += ridge;
        }
        if let Some(factor) = Cholesky::new(shifted) {
            return Ok(RidgedCholesky { factor, ridge });
        }
        rel *= 100.0;
    }
    Err(Error::Singular(format!(
        "matrix of side {} not factorizable with ridge up to {:.1e}",
        m.nrows(),
        MAX_RELATIVE_RIDGE * scale
    )))
}
