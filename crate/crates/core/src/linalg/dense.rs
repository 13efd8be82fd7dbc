use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DENSE_LIMIT: usize = 5000;

/// Cholesky solve of a small symmetric positive definite system.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol
        .solve(&DVector::from_column_slice(b))
        .as_slice()
        .to_vec())
}

/// Eigenvalues of a small symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let x = dense_solve(&DMatrix::from_element(1, 1, 2.0), &[4.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hilbert_four() {
        let h = DMatrix::from_fn(4, 4, |i, j| 1.0 / (i + j + 1) as f64);
        // first column of the exact integer inverse
        let exact = [16.0, -120.0, 240.0, -140.0];
        let x = dense_solve(&h, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (p, q) in x.iter().zip(&exact) {
            assert!((p - q).abs() <= 1e-8 * q.abs(), "{p} vs {q}");
        }
    }

    #[test]
    fn indefinite_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            dense_solve(&a, &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn size_guard() {
        let a = DMatrix::zeros(DENSE_LIMIT + 1, 1);
        assert!(matches!(dense_solve(&a, &[]), Err(Error::TooLarge { .. })));
    }
}
