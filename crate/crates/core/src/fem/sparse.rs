//! Compressed-row storage with a shareable sparsity pattern.

use std::sync::Arc;

use crate::scalar::Real;

/// Row pointers and sorted column indices. Every row holds its diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
}

impl CsrPattern {
    /// Pattern of a matrix assembled from cells; `local_dofs(cell, out)` fills
    /// the unknowns touched by `cell`.
    pub fn from_cells(n: usize, num_cells: usize, mut local_dofs: impl FnMut(usize, &mut Vec<usize>)) -> Self {
        assert!(n < u32::MAX as usize, "too many unknowns for 32-bit column indices");
        let mut keys: Vec<u64> = (0..n as u64).map(|i| (i << 32) | i).collect();
        let mut dofs = Vec::with_capacity(12);
        for c in 0..num_cells {
            dofs.clear();
            local_dofs(c, &mut dofs);
            for &i in &dofs {
                for &j in &dofs {
                    keys.push(((i as u64) << 32) | j as u64);
                }
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(keys.len());
        for k in keys {
            row_ptr[(k >> 32) as usize + 1] += 1;
            cols.push((k & 0xffff_ffff) as u32);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols }
    }

    /// Diagonal-only pattern.
    pub fn diagonal(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), cols: (0..n as u32).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of `(i, j)`.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&(j as u32)).ok().map(|p| start + p)
    }
}

/// Sparse matrix over a shared pattern.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    pattern: Arc<CsrPattern>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let values = vec![T::zero(); pattern.nnz()];
        Self { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        Self { pattern: Arc::new(CsrPattern::diagonal(n)), values: vec![T::one(); n] }
    }

    /// Builds from a dense row-major matrix, dropping exact zeros off the diagonal.
    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut keys: Vec<u64> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if i == j || v != T::zero() {
                    keys.push(((i as u64) << 32) | j as u64);
                }
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for k in keys {
            let (i, j) = ((k >> 32) as usize, (k & 0xffff_ffff) as usize);
            row_ptr[i + 1] += 1;
            cols.push(j as u32);
            values.push(rows[i][j]);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { pattern: Arc::new(CsrPattern { n, row_ptr, cols }), values }
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let p = self.pattern.position(i, j).expect("entry outside the sparsity pattern");
        self.values[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.position(i, j).map_or(T::zero(), |p| self.values[p])
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[T], y: &mut [T]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let (s, e) = (p.row_ptr[i], p.row_ptr[i + 1]);
            let mut acc = T::zero();
            for (&c, &v) in p.cols[s..e].iter().zip(&self.values[s..e]) {
                acc += v * x[c as usize];
            }
            *yi = acc;
        }
    }

    pub fn mul(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n()];
        self.spmv(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { pattern: self.pattern.clone(), values: self.values.iter().map(|&v| v * s).collect() }
    }

    /// `a·self + b·other`; both must share one pattern.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "matrices have different sparsity patterns"
        );
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Self { pattern: self.pattern.clone(), values }
    }

    /// True when `A(i,j) == A(j,i)` bit for bit.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| {
            let r = self.pattern.row(i);
            let s = self.pattern.row_ptr[i];
            r.iter().enumerate().all(|(k, &j)| self.get(j as usize, i) == self.values[s + k])
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.n();
        let mut d = vec![vec![T::zero(); n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            let s = self.pattern.row_ptr[i];
            for (k, &j) in self.pattern.row(i).iter().enumerate() {
                row[j as usize] = self.values[s + k];
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_from_cells_and_spmv() {
        // 1D chain of three unknowns, two "cells"
        let p = Arc::new(CsrPattern::from_cells(3, 2, |c, out| out.extend([c, c + 1])));
        assert_eq!(p.nnz(), 7);
        let mut a = CsrMatrix::<f64>::zeros(p);
        for c in 0..2 {
            a.add(c, c, 1.0);
            a.add(c + 1, c + 1, 1.0);
            a.add(c, c + 1, -1.0);
            a.add(c + 1, c, -1.0);
        }
        assert!(a.is_symmetric());
        assert_eq!(a.mul(&[1.0, 1.0, 1.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(a.mul(&[1.0, 0.0, 0.0]), vec![1.0, -1.0, 0.0]);
        let d = CsrMatrix::from_dense(&a.to_dense());
        assert_eq!(d.to_dense(), a.to_dense());
        let c = a.combine(2.0, &a, 1.0);
        assert_eq!(c.get(1, 1), 6.0);
    }
}
