//! Sparse matrices and the direct solver used by the FEM.

mod multifrontal;
mod ordering;

pub use multifrontal::{FactorStats, MultifrontalLdlt};
pub use ordering::{nested_dissection, SeparatorNode, SeparatorTree};

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{AddAssign, Mul};

use num_complex::Complex64;

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Copy + Default + AddAssign> CsrMatrix<T> {
    /// Builds the matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of range");
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![T::default(); triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..n_rows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_unstable_by_key(|&p| cols[p]);
            for &p in &order {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == cols[p] {
                    *values.last_mut().unwrap() += vals[p];
                } else {
                    col_idx.push(cols[p]);
                    values.push(vals[p]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// A matrix with the given structure and all-default values.
    pub fn from_pattern(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
    ) -> Self {
        assert_eq!(row_ptr.len(), n_rows + 1);
        assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        let values = vec![T::default(); col_idx.len()];
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl<T: Copy> CsrMatrix<T> {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Storage position of entry `(r, c)`, if structurally present.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].binary_search(&c).ok().map(|p| lo + p)
    }

    pub fn get(&self, r: usize, c: usize) -> Option<T> {
        self.position(r, c).map(|p| self.values[p])
    }

    /// Same structure, values mapped through `f`.
    pub fn map<U, F: FnMut(usize, &T) -> U>(&self, mut f: F) -> CsrMatrix<U> {
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(p, v)| f(p, v))
                .collect(),
        }
    }

    /// Largest number of stored entries in any row.
    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    /// Whether the pattern is structurally symmetric.
    pub fn is_structurally_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows)
                .all(|r| self.row(r).0.iter().all(|&c| self.position(c, r).is_some()))
    }
}

impl<T> CsrMatrix<T>
where
    T: Copy + Default + AddAssign + Mul<Output = T>,
{
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                let mut acc = T::default();
                for (c, v) in cols.iter().zip(vals) {
                    acc += *v * x[*c];
                }
                acc
            })
            .collect()
    }
}

impl CsrMatrix<Complex64> {
    /// `max |A_ij - A_ji|`, treating missing entries as zero.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let t = self.get(c, r).unwrap_or_default();
                worst = worst.max((v - t).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖b - A x‖ / ‖b‖` in the Euclidean norm.
    pub fn relative_residual(&self, x: &[Complex64], b: &[Complex64]) -> f64 {
        let ax = self.matvec(x);
        let r: f64 = ax.iter().zip(b).map(|(a, b)| (b - a).norm_sqr()).sum();
        let bn: f64 = b.iter().map(|v| v.norm_sqr()).sum();
        if bn == 0.0 {
            libm::sqrt(r)
        } else {
            libm::sqrt(r / bn)
        }
    }
}
