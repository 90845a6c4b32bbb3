//! Exact dense matrices for finite-dimensional brute-force checks.
//!
//! This is the independent evaluation route: plain Gauss-Jordan elimination
//! over `Scalar`, deliberately separate from the sparse incremental
//! machinery in [`crate::span`] so the two can cross-check each other.

use alloc::vec::Vec;

use crate::scalar::{FieldSpec, Scalar};
use crate::vector::FinVector;

/// Row-major exact matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl DenseMatrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        DenseMatrix {
            field,
            rows,
            cols,
            data: alloc::vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = DenseMatrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Columns from sparse vectors; `rows` must cover every support index.
    pub fn from_columns(field: FieldSpec, columns: &[FinVector], rows: usize) -> Self {
        let mut m = DenseMatrix::zeros(field, rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, c) in col.iter() {
                assert!(
                    i < rows,
                    "row count {rows} does not cover support index {i}"
                );
                m.set(i, j, c.clone());
            }
        }
        m
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        assert!(i < self.rows && j < self.cols);
        assert!(v.field() == self.field, "field mismatch");
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a = &*a + b;
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a = &*a - b;
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> DenseMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = &*a * c;
        }
        out
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = DenseMatrix::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let cur = out.get(i, j).clone();
                    out.set(i, j, &cur + &(a * other.get(k, j)));
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Scalar {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        let mut t = self.field.zero();
        for i in 0..self.rows {
            t = &t + self.get(i, i);
        }
        t
    }

    /// In-place Gauss-Jordan to reduced row-echelon form; returns the pivot
    /// columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..self.cols {
                    let a = self.get(row, j).clone();
                    let b = self.get(p, j).clone();
                    self.set(row, j, b);
                    self.set(p, j, a);
                }
            }
            let inv = self.get(row, col).inv().expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = self.get(row, j) * &inv;
                self.set(row, j, v);
            }
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let f = self.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = self.get(r, j) - &(&f * self.get(row, j));
                    self.set(r, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Exact solution of `self · x = rhs`, if consistent (any one solution).
    pub fn solve(&self, rhs: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(rhs.len(), self.rows, "shape mismatch");
        let mut aug = DenseMatrix::zeros(self.field, self.rows, self.cols + 1);
        for (i, value) in rhs.iter().enumerate() {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, value.clone());
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // pivot in the augmented column: inconsistent
        }
        let mut x = alloc::vec![self.field.zero(); self.cols];
        for (row, col) in pivots.iter().enumerate() {
            x[*col] = aug.get(row, self.cols).clone();
        }
        Some(x)
    }

    /// Exact inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<DenseMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = DenseMatrix::zeros(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, self.field.one());
        }
        let pivots = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(k, &c)| c != k) {
            return None;
        }
        let mut out = DenseMatrix::zeros(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, aug.get(i, n + j).clone());
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: FieldSpec = FieldSpec::Rationals;

    fn m2(a: i64, b: i64, c: i64, d: i64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(Q, 2, 2);
        m.set(0, 0, Q.from_i64(a));
        m.set(0, 1, Q.from_i64(b));
        m.set(1, 0, Q.from_i64(c));
        m.set(1, 1, Q.from_i64(d));
        m
    }

    #[test]
    fn mul_and_trace() {
        let a = m2(1, 2, 3, 4);
        let b = m2(0, 1, 1, 0);
        let ab = a.mul(&b);
        assert_eq!(ab, m2(2, 1, 4, 3));
        assert_eq!(a.trace(), Q.from_i64(5));
    }

    #[test]
    fn rank_and_rref() {
        let mut m = m2(1, 2, 2, 4);
        assert_eq!(m.rank(), 1);
        let pivots = m.rref();
        assert_eq!(pivots, alloc::vec![0]);
        assert_eq!(m.get(0, 1), &Q.from_i64(2));
    }

    #[test]
    fn inverse_round_trip() {
        let a = m2(2, 1, 1, 1);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), DenseMatrix::identity(Q, 2));
        assert!(m2(1, 2, 2, 4).inverse().is_none());
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = m2(1, 1, 0, 0);
        let x = a.solve(&[Q.from_i64(3), Q.zero()]).unwrap();
        // One valid solution of x0 + x1 = 3.
        assert_eq!(&x[0] + &x[1], Q.from_i64(3));
        assert!(a.solve(&[Q.from_i64(3), Q.one()]).is_none());
    }
}
