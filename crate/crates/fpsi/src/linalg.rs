//! Sparse matrices built from triplets, with a direct LU solve.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{FpsiError, Result};

/// Compressed-row matrix with summed duplicates.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Entries are summed in sorted (row, col) order, so the result does not
    /// depend on the order the triplets arrive in.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            debug_assert!(i < n_rows && j < n_cols);
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.cols[k] == j)
            .map_or(0.0, |k| self.vals[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i][self.cols[k]] += self.vals[k];
            }
        }
        d
    }

    /// Direct sparse LU solve of a square system.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.n_rows != self.n_cols || b.len() != self.n_rows {
            return Err(FpsiError::Solver("dimension mismatch".into()));
        }
        let n = self.n_rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut trip = Vec::with_capacity(self.vals.len());
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                trip.push(Triplet::new(i, self.cols[k], self.vals[k]));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| FpsiError::Solver(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| FpsiError::Solver(format!("{e:?}")))?;
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = faer::prelude::Solve::solve(&lu, &rhs);
        let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(FpsiError::Solver("non-finite solution (singular system)".into()));
        }
        Ok(out)
    }
}

/// Eigenvalues of the symmetric part of a dense matrix.
pub fn symmetric_part_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[i][j] + a[j][i]));
    let ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigenvalue solve");
    ev.into_iter().collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (0, 1, -1.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 2.0]);
    }

    #[test]
    fn solve_nonsymmetric() {
        let m = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, -2.0), (1, 1, 3.0), (2, 2, 5.0), (2, 0, 1.0)]);
        let x = [1.0, -2.0, 0.5];
        let b = m.matvec(&x);
        let y = m.solve(&b).unwrap();
        for k in 0..3 {
            assert!((x[k] - y[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_of_symmetric_part() {
        let ev = symmetric_part_eigenvalues(&[vec![2.0, 1.0], vec![-1.0, 3.0]]);
        let mut ev = ev;
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }
}
