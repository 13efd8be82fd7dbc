//! Sparse symmetric positive definite systems: block assembly, Jacobi
//! preconditioned conjugate gradients and a dense fallback.

mod cg;
mod dense;
mod sparse;

pub use cg::{cg_solve, CgOptions, CgOutcome, Preconditioner, DEFAULT_TOLERANCE, HISTORY_STRIDE};
pub use dense::{dense_solve, symmetric_eigenvalues, DENSE_LIMIT};
pub use sparse::{assemble_blocks, SparseSymmetricMatrix, DROP_TOLERANCE, SYMMETRY_TOLERANCE};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Sequential dot product; the fixed summation order keeps results
/// independent of the worker count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
}

impl ConditionEstimate {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Power iteration on A and on A^-1 (inner solves by CG).
pub fn estimate_condition(
    a: &SparseSymmetricMatrix,
    iterations: usize,
) -> Result<ConditionEstimate> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let normalize = |v: &mut Vec<f64>| {
        let s = dot(v, v).sqrt();
        v.iter_mut().for_each(|x| *x /= s);
    };
    let mut v = start.clone();
    normalize(&mut v);
    let mut lambda_max = 0.0;
    for _ in 0..iterations {
        let mut w = a.mul_vec(&v);
        lambda_max = dot(&v, &w);
        normalize(&mut w);
        v = w;
    }
    let mut v = start;
    normalize(&mut v);
    let mut mu = 0.0;
    let options = CgOptions {
        tol: 1e-10,
        ..CgOptions::default()
    };
    for _ in 0..iterations {
        let mut w = cg_solve(a, &v, options)?.x;
        mu = dot(&v, &w);
        normalize(&mut w);
        v = w;
    }
    Ok(ConditionEstimate {
        lambda_max,
        lambda_min: 1.0 / mu,
    })
}
