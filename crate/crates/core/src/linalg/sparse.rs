use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative asymmetry that is silently averaged away.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Entries below this fraction of the largest magnitude are dropped.
pub const DROP_TOLERANCE: f64 = 1e-15;

/// Contributions computed in parallel per batch before sequential insertion.
const CHUNK: usize = 512;

/// Symmetric matrix in compressed row storage (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x, rows split across workers.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut()
            .with_min_len(256)
            .enumerate()
            .for_each(|(i, yi)| {
                let (c, v) = self.row(i);
                *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
            });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        super::dot(x, &self.mul_vec(x))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[(i, j)] = a;
            }
        }
        d
    }

    /// Largest relative asymmetry of a square dense matrix is checked and
    /// removed as for assembled matrices.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 || i == j {
                    cols.push(j);
                    values.push(a[(i, j)]);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSymmetricMatrix {
            n,
            row_ptr,
            cols,
            values,
        }
        .finalize()
    }

    pub fn identity(n: usize) -> Self {
        SparseSymmetricMatrix {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Certifies symmetry, averages small asymmetries and drops tiny entries.
    fn finalize(mut self) -> Result<Self> {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(self);
        }
        let mut asym: f64 = 0.0;
        let mut sym = self.values.clone();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                if j <= i {
                    continue;
                }
                let t = self.get(j, i);
                let a = self.values[p];
                asym = asym.max((a - t).abs() / scale);
                let avg = 0.5 * (a + t);
                sym[p] = avg;
                let (c, _) = self.row(j);
                match c.binary_search(&i) {
                    Ok(q) => sym[self.row_ptr[j] + q] = avg,
                    Err(_) => sym[p] = 0.0,
                }
            }
        }
        // entries present only in the lower triangle
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                if j < i && self.row(j).0.binary_search(&i).is_err() {
                    asym = asym.max(self.values[p].abs() / scale);
                    sym[p] = 0.0;
                }
            }
        }
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        self.values = sym;
        let drop = DROP_TOLERANCE * scale;
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                if j == i || self.values[p].abs() > drop {
                    cols.push(j);
                    values.push(self.values[p]);
                }
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.values = values;
        Ok(self)
    }
}

/// Assembles a symmetric system from dense contributions over element-like
/// groups of `block` consecutive unknowns each.
///
/// Contribution `i` couples the groups `cliques[i]`; `local(i)` returns its
/// square matrix and right-hand side in the stacked order of those groups.
/// Local work runs in parallel; insertion happens in contribution order, so
/// the result does not depend on the number of workers.
pub fn assemble_blocks<F>(
    num_groups: usize,
    block: usize,
    cliques: &[Vec<usize>],
    local: F,
) -> Result<(SparseSymmetricMatrix, Vec<f64>)>
where
    F: Fn(usize) -> (DMatrix<f64>, Vec<f64>) + Sync,
{
    let (row_ptr, cols) = block_pattern(num_groups, block, cliques);
    let n = num_groups * block;
    let mut values = vec![0.0; cols.len()];
    let mut rhs = vec![0.0; n];
    for start in (0..cliques.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(cliques.len());
        let batch: Vec<(DMatrix<f64>, Vec<f64>)> =
            (start..end).into_par_iter().map(&local).collect();
        for (offset, (mat, vec)) in batch.into_iter().enumerate() {
            let groups = &cliques[start + offset];
            let size = groups.len() * block;
            assert_eq!(
                mat.shape(),
                (size, size),
                "contribution {} has wrong shape",
                start + offset
            );
            for (a, &ga) in groups.iter().enumerate() {
                for i in 0..block {
                    let row = ga * block + i;
                    rhs[row] += vec[a * block + i];
                    let (lo, hi) = (row_ptr[row], row_ptr[row + 1]);
                    for (c, &gc) in groups.iter().enumerate() {
                        let p = lo
                            + cols[lo..hi]
                                .binary_search(&(gc * block))
                                .expect("pattern covers clique");
                        for j in 0..block {
                            values[p + j] += mat[(a * block + i, c * block + j)];
                        }
                    }
                }
            }
        }
    }
    let matrix = SparseSymmetricMatrix {
        n,
        row_ptr,
        cols,
        values,
    }
    .finalize()?;
    Ok((matrix, rhs))
}

/// Row pointers and sorted column indices of the expanded block pattern.
fn block_pattern(
    num_groups: usize,
    block: usize,
    cliques: &[Vec<usize>],
) -> (Vec<usize>, Vec<usize>) {
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); num_groups];
    for (i, c) in cliques.iter().enumerate() {
        for &g in c {
            containing[g].push(i);
        }
    }
    let group_rows: Vec<Vec<usize>> = containing
        .par_iter()
        .map(|list| {
            let mut row: Vec<usize> = list
                .iter()
                .flat_map(|&i| cliques[i].iter().copied())
                .collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(num_groups * block + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    for (g, row) in group_rows.iter().enumerate() {
        let mut row = row.clone();
        if row.binary_search(&g).is_err() {
            // keep the diagonal explicit even for untouched groups
            let p = row.partition_point(|&x| x < g);
            row.insert(p, g);
        }
        for _ in 0..block {
            for &c in &row {
                cols.extend(c * block..(c + 1) * block);
            }
            row_ptr.push(cols.len());
        }
    }
    (row_ptr, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assembly_matches_dense_oracle() {
        // 1D chain of 5 groups, block 2, contributions on neighbor pairs
        let cliques: Vec<Vec<usize>> = (0..4).map(|i| vec![i + 1, i]).collect();
        let local = |i: usize| {
            let m = DMatrix::from_fn(4, 4, |r, c| {
                ((r + c + i) % 5) as f64 + if r == c { 10.0 } else { 0.0 }
            });
            let m = &m + m.transpose();
            (m, vec![1.0 + i as f64; 4])
        };
        let (a, b) = assemble_blocks(5, 2, &cliques, local).unwrap();
        let mut dense = DMatrix::zeros(10, 10);
        let mut rhs = vec![0.0; 10];
        for (i, c) in cliques.iter().enumerate() {
            let (m, v) = local(i);
            let dofs: Vec<usize> = c.iter().flat_map(|&g| [2 * g, 2 * g + 1]).collect();
            for (r, &gr) in dofs.iter().enumerate() {
                rhs[gr] += v[r];
                for (s, &gs) in dofs.iter().enumerate() {
                    dense[(gr, gs)] += m[(r, s)];
                }
            }
        }
        assert_eq!(a.to_dense(), dense);
        assert_eq!(b, rhs);
    }

    #[test]
    fn asymmetry_detected() {
        let mut d = DMatrix::<f64>::identity(3, 3);
        d[(0, 1)] = 0.5;
        assert!(matches!(
            SparseSymmetricMatrix::from_dense(&d),
            Err(Error::NotSymmetric(_))
        ));
        d[(1, 0)] = 0.5 + 1e-14;
        let a = SparseSymmetricMatrix::from_dense(&d).unwrap();
        assert_eq!(a.get(0, 1), a.get(1, 0));
    }

    #[test]
    fn tiny_entries_dropped() {
        let mut d = DMatrix::<f64>::identity(3, 3);
        d[(0, 2)] = 1e-17;
        d[(2, 0)] = 1e-17;
        let a = SparseSymmetricMatrix::from_dense(&d).unwrap();
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn matvec_matches_dense() {
        let d = DMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let a = SparseSymmetricMatrix::from_dense(&d).unwrap();
        let x: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let y = a.mul_vec(&x);
        let z = &d * nalgebra::DVector::from_column_slice(&x);
        for (p, q) in y.iter().zip(z.iter()) {
            assert!((p - q).abs() < 1e-15);
        }
    }
}
