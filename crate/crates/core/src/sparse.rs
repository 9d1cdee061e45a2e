//! Compressed sparse row storage shared by the count and weighted matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Row-major compressed sparse matrix. Column indices within a row are
/// strictly increasing and only nonzero entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Copy> CsrMatrix<T> {
    /// Builds a matrix from per-row `(column, value)` lists. Each list must
    /// be sorted by column with no duplicates; `keep` decides which values
    /// count as stored (nonzero) entries.
    pub(crate) fn from_rows(
        n_cols: usize,
        rows: Vec<Vec<(usize, T)>>,
        keep: impl Fn(T) -> bool,
    ) -> Result<Self> {
        let n_rows = rows.len();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            let mut last = None;
            for (j, v) in row {
                if j >= n_cols {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} has column {j} but matrix has {n_cols} columns"
                    )));
                }
                if last.is_some_and(|l| l >= j) {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} columns are not strictly increasing at {j}"
                    )));
                }
                last = Some(j);
                if keep(v) {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|p| vals[p])
    }

    /// Same sparsity pattern, values transformed row by row.
    pub(crate) fn map_rows<U: Copy>(&self, mut f: impl FnMut(usize, T) -> U) -> CsrMatrix<U> {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n_rows {
            let (_, vals) = self.row(i);
            values.extend(vals.iter().map(|&v| f(i, v)));
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }

    pub fn same_pattern<U>(&self, other: &CsrMatrix<U>) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.indptr == other.indptr
            && self.indices == other.indices
    }
}

impl<T: Copy + Into<f64>> CsrMatrix<T> {
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|&v| v.into()).sum())
            .collect()
    }

    /// Column sums accumulated in row order.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                sums[j] += v.into();
            }
        }
        sums
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[[i, j]] = v.into();
            }
        }
        out
    }
}
