//! Compressed sparse row storage and an envelope (skyline) Cholesky solver
//! with reverse Cuthill–McKee ordering, sufficient for P1 finite elements.

use std::collections::VecDeque;

use super::{DenseMatrix, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds the matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are summed in input order, so the result does not depend on
    /// anything but the triplet sequence.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for &(i, j, _) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![0usize; triplets.len()];
        let mut fill = counts.clone();
        for (t, &(i, _, _)) in triplets.iter().enumerate() {
            order[fill[i]] = t;
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values: Vec<T> = Vec::new();
        row_ptr.push(0);
        for i in 0..rows {
            let mut entries: Vec<(usize, usize)> = order[counts[i]..counts[i + 1]]
                .iter()
                .map(|&t| (triplets[t].1, t))
                .collect();
            entries.sort_by_key(|&(j, t)| (j, t));
            let mut last = usize::MAX;
            for (j, t) in entries {
                if j == last {
                    *values.last_mut().expect("entry exists") += triplets[t].2;
                } else {
                    col_idx.push(j);
                    values.push(triplets[t].2);
                    last = j;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| {
                let mut s = T::default();
                for (j, v) in self.row_entries(i) {
                    s += v * x[j];
                }
                s
            })
            .collect()
    }

    /// `x^T A y` without conjugation.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let ay = self.matvec(y);
        let mut s = T::default();
        for (&a, &b) in x.iter().zip(&ay) {
            s += a * b;
        }
        s
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a·self + b·other` for matrices with identical sparsity pattern.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::DimensionMismatch("sparsity patterns differ".into()));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            ..self.clone()
        })
    }

    /// Exact transpose symmetry of pattern and values.
    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| self.row_entries(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Principal submatrix on `keep` (indices in the new order).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.cols];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row_entries(i) {
                if new_index[j] != usize::MAX {
                    triplets.push((k, new_index[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), &triplets).expect("indices are in range")
    }
}

/// Reverse Cuthill–McKee ordering of a structurally symmetric matrix.
/// `perm[k]` is the original index placed at position `k`.
pub fn rcm_ordering<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.rows();
    let degree: Vec<usize> = (0..n).map(|i| a.row_entries(i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .expect("unvisited node exists");
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut nbrs: Vec<usize> = a
                .row_entries(i)
                .map(|(j, _)| j)
                .filter(|&j| !visited[j])
                .collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factorization `P A P^T = L L^T` of a real SPD matrix.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
}

impl SkylineCholesky {
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self> {
        let perm = rcm_ordering(a);
        Self::with_ordering(a, perm)
    }

    pub fn with_ordering(a: &CsrMatrix<f64>, perm: Vec<usize>) -> Result<Self> {
        let n = a.rows();
        let mut inv = vec![0usize; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (k, &i) in perm.iter().enumerate() {
            for (j, _) in a.row_entries(i) {
                let c = inv[j];
                if c < first[k] {
                    first[k] = c;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for k in 0..n {
            start[k + 1] = start[k] + (k - first[k] + 1);
        }
        let mut l = vec![0.0; start[n]];
        for (k, &i) in perm.iter().enumerate() {
            for (j, v) in a.row_entries(i) {
                let c = inv[j];
                if c <= k {
                    l[start[k] + c - first[k]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = l[start[i] + j - fi];
                let ri = start[i] + lo - fi;
                let rj = start[j] + lo - fj;
                for t in 0..(j - lo) {
                    s -= l[ri + t] * l[rj + t];
                }
                l[start[i] + j - fi] = s / l[start[j] + j - fj];
            }
            let mut d = l[start[i] + i - fi];
            for t in 0..(i - fi) {
                let v = l[start[i] + t];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {d:e} at position {i} of the envelope factorization"
                )));
            }
            l[start[i] + i - fi] = d.sqrt();
        }
        Ok(Self {
            perm,
            first,
            start,
            l,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs dimension");
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for t in 0..(i - fi) {
                s -= self.l[self.start[i] + t] * y[fi + t];
            }
            y[i] = s / self.l[self.start[i] + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i] / self.l[self.start[i] + i - fi];
            y[i] = yi;
            for t in 0..(i - fi) {
                y[fi + t] -= self.l[self.start[i] + t] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, 1.0)]).unwrap();
        assert_eq!(a.get(0, 1), 3.5);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn skyline_solves_tridiagonal() {
        let a = laplacian_1d(30);
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x);
        let c = SkylineCholesky::new(&a).unwrap();
        let y = c.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)])
                .unwrap();
        assert!(SkylineCholesky::new(&a).is_err());
    }
}
