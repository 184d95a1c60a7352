use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix. Vectors are stored as `n x 1` columns and
/// scalars as `1 x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: [usize; 2],
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape("tensor", format!("{} values for shape {rows}x{cols}", data.len())));
        }
        Ok(Tensor { shape: [rows, cols], data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { shape: [rows, cols], data: vec![S::zero(); rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: S) -> Self {
        Tensor { shape: [rows, cols], data: vec![value; rows * cols] }
    }

    pub fn scalar(value: S) -> Self {
        Tensor { shape: [1, 1], data: vec![value] }
    }

    pub fn column(values: Vec<S>) -> Self {
        Tensor { shape: [values.len(), 1], data: values }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Tensor { shape: [rows.len(), cols], data }
    }

    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Self {
        let conv: Vec<Vec<S>> = rows.iter().map(|r| r.iter().map(|&x| S::lit(x)).collect()).collect();
        Tensor::from_rows(&conv)
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[S] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: S) {
        let cols = self.cols();
        self.data[r * cols + c] = value;
    }

    /// Value of a `1 x 1` tensor.
    pub fn item(&self) -> S {
        debug_assert_eq!(self.shape, [1, 1]);
        self.data[0]
    }

    pub fn add_assign(&mut self, other: &Tensor<S>) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Tensor<S> {
        Tensor { shape: self.shape, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Index of the largest entry of each row; ties resolve to the lowest index.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows())
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (j, &x) in row.iter().enumerate() {
                    if x > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    /// Rows at `idx`, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Tensor<S> {
        let c = self.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Tensor { shape: [idx.len(), c], data }
    }

    pub fn max_abs_diff(&self, other: &Tensor<S>) -> S {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Sparse row-compressed constant matrix; the left operand of
/// `sparse_matmul`. Bag-of-words and one-hot features are stored this way.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows<S> {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<S>,
}

impl<S: Scalar> SparseRows<S> {
    pub fn from_dense(t: &Tensor<S>) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..t.rows() {
            for (c, &x) in t.row(r).iter().enumerate() {
                if x != S::zero() {
                    cols.push(c);
                    vals.push(x);
                }
            }
            offsets.push(cols.len());
        }
        SparseRows { n_rows: t.rows(), n_cols: t.cols(), offsets, cols, vals }
    }

    /// Identity matrix, the feature matrix of one-hot node types.
    pub fn identity(n: usize) -> Self {
        SparseRows { n_rows: n, n_cols: n, offsets: (0..=n).collect(), cols: (0..n).collect(), vals: vec![S::one(); n] }
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let range = self.offsets[r]..self.offsets[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor<S> {
        let mut t = Tensor::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                t.set(r, c, v);
            }
        }
        t
    }

    /// `self * w`.
    pub fn matmul(&self, w: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.n_cols, w.rows());
        let n = w.cols();
        let mut out = Tensor::zeros(self.n_rows, n);
        for r in 0..self.n_rows {
            let o = out.row_mut(r);
            for (c, v) in self.row(r) {
                for (a, &b) in o.iter_mut().zip(w.row(c)) {
                    *a += v * b;
                }
            }
        }
        out
    }

    /// `self^T * g`.
    pub fn matmul_transposed(&self, g: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.n_rows, g.rows());
        let n = g.cols();
        let mut out = Tensor::zeros(self.n_cols, n);
        for r in 0..self.n_rows {
            let gr = g.row(r);
            for (c, v) in self.row(r) {
                for (a, &b) in out.row_mut(c).iter_mut().zip(gr) {
                    *a += v * b;
                }
            }
        }
        out
    }
}
