//! Compressed sparse row matrix for adjacency and propagation operators.
//!
//! Structural zeros are absent, not stored. Iteration order is row-major over
//! the stored entries, which makes every product bitwise deterministic.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Build from (row, col, value) triplets. Triplets are sorted internally;
    /// duplicate coordinates are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<SparseMatrix<T>> {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &triplets {
            if r >= rows || c >= cols {
                return Err(Error::domain(format!(
                    "triplet ({r},{c}) out of bounds for {rows}x{cols}"
                )));
            }
            if prev == Some((r, c)) {
                return Err(Error::domain(format!("duplicate triplet at ({r},{c})")));
            }
            prev = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> SparseMatrix<T> {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
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

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals.iter()).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Stored value at (r, c), or zero.
    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// Dense product `self * x` where x is rank-2 (cols x f).
    pub fn mul_dense(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 2 || x.shape()[0] != self.cols {
            return Err(Error::shape(
                "SparseMatrix::mul_dense",
                &[self.rows, self.cols],
                x.shape(),
            ));
        }
        let f = x.shape()[1];
        let mut out = Tensor::zeros(&[self.rows, f]);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let out_row = &mut out.data_mut()[r * f..(r + 1) * f];
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                let x_row = &x.data()[c * f..(c + 1) * f];
                for (o, &xv) in out_row.iter_mut().zip(x_row.iter()) {
                    *o = *o + v * xv;
                }
            }
        }
        Ok(out)
    }

    /// Dense product `self^T * x` without materializing the transpose.
    pub fn mul_dense_transposed(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 2 || x.shape()[0] != self.rows {
            return Err(Error::shape(
                "SparseMatrix::mul_dense_transposed",
                &[self.cols, self.rows],
                x.shape(),
            ));
        }
        let f = x.shape()[1];
        let mut out = Tensor::zeros(&[self.cols, f]);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let x_row = &x.data()[r * f..(r + 1) * f];
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                let out_row = &mut out.data_mut()[c * f..(c + 1) * f];
                for (o, &xv) in out_row.iter_mut().zip(x_row.iter()) {
                    *o = *o + v * xv;
                }
            }
        }
        Ok(out)
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|r| {
                let (_, vals) = self.row(r);
                vals.iter().fold(T::zero(), |acc, &v| acc + v)
            })
            .collect()
    }

    pub fn to_dense(&self) -> Tensor<T> {
        let mut out = Tensor::zeros(&[self.rows, self.cols]);
        for (r, c, v) in self.iter() {
            out.set2(r, c, v);
        }
        out
    }

    /// Exact (bitwise) symmetry check.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.iter().all(|(r, c, v)| self.get(c, r) == v)
    }

    /// `self + I`; any existing diagonal entries are incremented.
    pub fn add_identity(&self) -> Result<SparseMatrix<T>> {
        let mut triplets: Vec<(usize, usize, T)> = self.iter().collect();
        for d in 0..self.rows.min(self.cols) {
            match triplets.iter_mut().find(|(r, c, _)| *r == d && *c == d) {
                Some(entry) => entry.2 = entry.2 + T::one(),
                None => triplets.push((d, d, T::one())),
            }
        }
        SparseMatrix::from_triplets(self.rows, self.cols, triplets)
    }
}
