use nalgebra::DMatrix;

/// Sparse vector with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i] += v;
        }
        out
    }
}

/// Row-compressed sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(rows: &[SparseVec], ncols: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in rows {
            col_idx.extend_from_slice(&r.indices);
            values.extend_from_slice(&r.values);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols);
        for r in 0..self.nrows() {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }
}

/// A matrix that can be applied to dense blocks, which is all the
/// randomized SVD needs.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A · x`
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ · x`
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(x)
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        CsrMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = x.ncols();
        let mut out = DMatrix::zeros(CsrMatrix::nrows(self), k);
        for r in 0..CsrMatrix::nrows(self) {
            for (c, v) in self.row(r) {
                for j in 0..k {
                    out[(r, j)] += v * x[(c, j)];
                }
            }
        }
        out
    }

    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = x.ncols();
        let mut out = DMatrix::zeros(self.ncols, k);
        for r in 0..CsrMatrix::nrows(self) {
            for (c, v) in self.row(r) {
                for j in 0..k {
                    out[(c, j)] += v * x[(r, j)];
                }
            }
        }
        out
    }
}
