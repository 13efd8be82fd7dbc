use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{dot, SparseSymmetricMatrix};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Iterations between recorded residual samples.
pub const HISTORY_STRIDE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    Jacobi,
    /// Exact inverses of the diagonal blocks of this size.
    BlockJacobi(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual ||b - Ax|| / ||b||.
    pub tol: f64,
    /// Defaults to 100 n when `None`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: DEFAULT_TOLERANCE,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

enum Factored {
    Diagonal(Vec<f64>),
    Blocks(usize, Vec<DMatrix<f64>>),
}

impl Factored {
    fn new(a: &SparseSymmetricMatrix, p: Preconditioner) -> Result<Self> {
        match p {
            Preconditioner::Jacobi => a
                .diagonal()
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    if d == 0.0 {
                        Err(Error::ZeroDiagonal(i))
                    } else {
                        Ok(1.0 / d)
                    }
                })
                .collect::<Result<Vec<f64>>>()
                .map(Factored::Diagonal),
            Preconditioner::BlockJacobi(size) => {
                if size == 0 || a.dim() % size != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "block size {size} does not divide {}",
                        a.dim()
                    )));
                }
                let blocks = (0..a.dim() / size)
                    .map(|g| {
                        let start = g * size;
                        let block =
                            DMatrix::from_fn(size, size, |i, j| a.get(start + i, start + j));
                        block
                            .cholesky()
                            .map(|c| c.inverse())
                            .ok_or(Error::NotPositiveDefinite)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Factored::Blocks(size, blocks))
            }
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Factored::Diagonal(d) => {
                for i in 0..r.len() {
                    z[i] = r[i] * d[i];
                }
            }
            Factored::Blocks(size, blocks) => {
                for (g, inv) in blocks.iter().enumerate() {
                    let s = g * size;
                    for i in 0..*size {
                        z[s + i] = (0..*size).map(|j| inv[(i, j)] * r[s + j]).sum();
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// sqrt(r^T B^-1 r) every `HISTORY_STRIDE` iterations, starting at 0.
    pub history: Vec<f64>,
    /// x^T A x / 2 - b^T x at the same iterations. Unlike the residual this
    /// decreases monotonically, being ||x - x*||_A^2 / 2 up to a constant.
    pub energy_history: Vec<f64>,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn cg_solve(a: &SparseSymmetricMatrix, b: &[f64], options: CgOptions) -> Result<CgOutcome> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let precond = Factored::new(a, options.preconditioner)?;
    let max_iter = options.max_iter.unwrap_or(100 * n.max(1));
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
            energy_history: vec![0.0],
        });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = vec![rz.sqrt()];
    let mut energy = 0.0;
    let mut energy_history = vec![energy];
    let mut residual = 1.0;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        energy -= 0.5 * alpha * rz;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        if it % HISTORY_STRIDE == 0 {
            history.push(rz_new.max(0.0).sqrt());
            energy_history.push(energy);
        }
        if residual <= options.tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual,
                history,
                energy_history,
            });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}
