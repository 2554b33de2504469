//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative jitter added to the diagonal when a Cholesky factorization fails.
pub(crate) const JITTER: f64 = 1e-10;

/// Cholesky solve without any regularization; `None` if `A` is not numerically positive definite.
pub(crate) fn cholesky_solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    if a.nrows() == 1 {
        // a single division is exact where the factorization would round twice
        return (a[(0, 0)] > 0.0).then(|| vec![b[0] / a[(0, 0)]]);
    }
    let rhs = DVector::from_column_slice(b);
    a.clone()
        .cholesky()
        .map(|ch| ch.solve(&rhs).iter().copied().collect())
}

/// Solves `A x = b` for symmetric positive definite `A`, retrying once with
/// `JITTER * trace(A)` on the diagonal.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = cholesky_solve(a, b) {
        return Ok(x);
    }
    let n = a.nrows();
    let trace: f64 = (0..n).map(|i| a[(i, i)].abs()).sum();
    let mut jittered = a.clone();
    for i in 0..n {
        jittered[(i, i)] += JITTER * trace.max(1e-300);
    }
    cholesky_solve(&jittered, b).ok_or_else(|| {
        Error::IllConditioned("matrix is not positive definite even after jitter".into())
    })
}

pub(crate) fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
