//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every primitive in execution order. Values are computed
//! eagerly; [`Tape::backward`] walks the record once in reverse and
//! accumulates exact gradients into every node that depends on a parameter.

use std::sync::Arc;

use crate::csr::Csr;
use crate::diff::loss;
use crate::diff::tensor::{SparseRows, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<S> {
    Leaf,
    MatMul(Var, Var),
    SparseMatMul(Arc<SparseRows<S>>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, S),
    Relu(Var),
    LeakyRelu(Var, S),
    Sigmoid(Var),
    RowSoftmax(Var),
    MulConst(Var, Arc<Tensor<S>>),
    GatherRows(Var, Arc<Vec<usize>>),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    Column(Var, usize),
    SegmentSoftmax(Var, Arc<Csr>),
    SegmentWeightedSum(Var, Var, Arc<Csr>),
    RowScale(Var, Var),
    ConvexCombine(Var, Var, Var),
    SelectRows(Var, Var, Arc<Vec<bool>>),
    CrossEntropy(Var, Arc<Vec<usize>>),
    KlDivergence(Var, Var),
    SqEuclidean(Var, Var),
}

struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
    needs_grad: bool,
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

fn same_shape<S: Scalar>(op: &'static str, a: &Tensor<S>, b: &Tensor<S>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn column_of<S: Scalar>(op: &'static str, t: &Tensor<S>, rows: usize) -> Result<()> {
    if t.shape() != [rows, 1] {
        return Err(Error::shape(op, format!("expected {rows}x1, got {:?}", t.shape())));
    }
    Ok(())
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// Leaf without gradient.
    pub fn constant(&mut self, value: Tensor<S>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    /// Leaf whose gradient is tracked.
    pub fn param(&mut self, value: Tensor<S>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    pub fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(Error::shape("matmul", format!("{:?} x {:?}", x.shape(), y.shape())));
        }
        let (m, k, n) = (x.rows(), x.cols(), y.cols());
        let mut out = Tensor::zeros(m, n);
        S::gemm(m, k, n, S::one(), x.data(), false, y.data(), false, S::zero(), out.data_mut());
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    /// `x * w` for a constant sparse `x`.
    pub fn sparse_matmul(&mut self, x: Arc<SparseRows<S>>, w: Var) -> Result<Var> {
        let wv = self.value(w);
        if x.cols() != wv.rows() {
            return Err(Error::shape("sparse_matmul", format!("{}x{} x {:?}", x.rows(), x.cols(), wv.shape())));
        }
        let out = x.matmul(wv);
        Ok(self.push(out, Op::SparseMatMul(x, w), &[w]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    /// Adds the `1 x n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(b));
        if r.shape() != [1, x.cols()] {
            return Err(Error::shape("add_row", format!("{:?} + {:?}", x.shape(), r.shape())));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (o, &bias) in out.row_mut(i).iter_mut().zip(r.data()) {
                *o += bias;
            }
        }
        Ok(self.push(out, Op::AddRow(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: S) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(S::zero()));
        self.push(out, Op::Relu(a), &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: S) -> Var {
        let out = self.value(a).map(|x| if x > S::zero() { x } else { slope * x });
        self.push(out, Op::LeakyRelu(a, slope), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a), &[a])
    }

    pub fn row_softmax(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        for r in 0..out.rows() {
            softmax_in_place(out.row_mut(r));
        }
        self.push(out, Op::RowSoftmax(a), &[a])
    }

    /// Elementwise product with a constant of the same shape (dropout masks).
    pub fn mul_const(&mut self, a: Var, mask: Arc<Tensor<S>>) -> Result<Var> {
        same_shape("mul_const", self.value(a), &mask)?;
        let mut out = self.value(a).clone();
        for (o, &m) in out.data_mut().iter_mut().zip(mask.data()) {
            *o *= m;
        }
        Ok(self.push(out, Op::MulConst(a, mask), &[a]))
    }

    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let x = self.value(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= x.rows()) {
            return Err(Error::shape("gather_rows", format!("row {bad} of {:?}", x.shape())));
        }
        let out = x.select_rows(&idx);
        Ok(self.push(out, Op::GatherRows(a, idx), &[a]))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = parts.first().map_or(0, |&p| self.value(p).cols());
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(Error::shape("concat_rows", format!("{} vs {} columns", t.cols(), cols)));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let out = Tensor::new(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), parts))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.value(p).rows());
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(Error::shape("concat_cols", format!("{} vs {} rows", t.rows(), rows)));
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut at = 0;
        for &p in parts {
            let t = self.value(p);
            for r in 0..rows {
                out.row_mut(r)[at..at + t.cols()].copy_from_slice(t.row(r));
            }
            at += t.cols();
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), parts))
    }

    /// Column `j` as an `m x 1` tensor.
    pub fn column(&mut self, a: Var, j: usize) -> Result<Var> {
        let x = self.value(a);
        if j >= x.cols() {
            return Err(Error::shape("column", format!("column {j} of {:?}", x.shape())));
        }
        let out = Tensor::column((0..x.rows()).map(|r| x.get(r, j)).collect());
        Ok(self.push(out, Op::Column(a, j), &[a]))
    }

    /// Softmax of the `nnz x 1` logits within each row segment of `csr`.
    pub fn segment_softmax(&mut self, logits: Var, csr: Arc<Csr>) -> Result<Var> {
        column_of("segment_softmax", self.value(logits), csr.nnz())?;
        let mut out = self.value(logits).clone();
        for r in 0..csr.n_rows() {
            softmax_in_place(&mut out.data_mut()[csr.row_range(r)]);
        }
        Ok(self.push(out, Op::SegmentSoftmax(logits, csr.clone()), &[logits]))
    }

    /// `out[r] = sum over entries e of row r: weights[e] * x[col(e)]`.
    pub fn segment_weighted_sum(&mut self, weights: Var, x: Var, csr: Arc<Csr>) -> Result<Var> {
        column_of("segment_weighted_sum", self.value(weights), csr.nnz())?;
        let xv = self.value(x);
        if xv.rows() != csr.n_cols() {
            return Err(Error::shape(
                "segment_weighted_sum",
                format!("x has {} rows, index expects {}", xv.rows(), csr.n_cols()),
            ));
        }
        let w = self.value(weights).data();
        let mut out = Tensor::zeros(csr.n_rows(), xv.cols());
        for r in 0..csr.n_rows() {
            let o = out.row_mut(r);
            for e in csr.row_range(r) {
                let we = w[e];
                for (a, &b) in o.iter_mut().zip(xv.row(csr.indices()[e])) {
                    *a += we * b;
                }
            }
        }
        Ok(self.push(out, Op::SegmentWeightedSum(weights, x, csr), &[weights, x]))
    }

    /// Multiplies row `i` of `x` by `s[i]`.
    pub fn row_scale(&mut self, x: Var, s: Var) -> Result<Var> {
        let xv = self.value(x);
        column_of("row_scale", self.value(s), xv.rows())?;
        let sv = self.value(s).data();
        let mut out = xv.clone();
        for (r, &si) in sv.iter().enumerate() {
            for o in out.row_mut(r) {
                *o *= si;
            }
        }
        Ok(self.push(out, Op::RowScale(x, s), &[x, s]))
    }

    /// `gate[i] * a[i] + (1 - gate[i]) * b[i]` row by row.
    pub fn convex_combine(&mut self, a: Var, b: Var, gate: Var) -> Result<Var> {
        same_shape("convex_combine", self.value(a), self.value(b))?;
        column_of("convex_combine", self.value(gate), self.value(a).rows())?;
        let (av, bv, gv) = (self.value(a), self.value(b), self.value(gate).data());
        let mut out = Tensor::zeros(av.rows(), av.cols());
        for (r, &g) in gv.iter().enumerate() {
            for ((o, &x), &y) in out.row_mut(r).iter_mut().zip(av.row(r)).zip(bv.row(r)) {
                *o = g * x + (S::one() - g) * y;
            }
        }
        Ok(self.push(out, Op::ConvexCombine(a, b, gate), &[a, b, gate]))
    }

    /// Row `i` from `a` where `mask[i]`, otherwise from `b`.
    pub fn select_rows(&mut self, a: Var, b: Var, mask: Arc<Vec<bool>>) -> Result<Var> {
        same_shape("select_rows", self.value(a), self.value(b))?;
        if mask.len() != self.value(a).rows() {
            return Err(Error::shape("select_rows", format!("mask of {} for {} rows", mask.len(), self.value(a).rows())));
        }
        let mut out = self.value(b).clone();
        let av = self.value(a);
        for (r, &m) in mask.iter().enumerate() {
            if m {
                out.row_mut(r).copy_from_slice(av.row(r));
            }
        }
        Ok(self.push(out, Op::SelectRows(a, b, mask), &[a, b]))
    }

    pub fn cross_entropy(&mut self, pred: Var, labels: Arc<Vec<usize>>) -> Result<Var> {
        let v = loss::cross_entropy(self.value(pred), &labels)?;
        Ok(self.push(Tensor::scalar(v), Op::CrossEntropy(pred, labels), &[pred]))
    }

    pub fn kl_divergence(&mut self, p: Var, q: Var) -> Result<Var> {
        let v = loss::kl_divergence(self.value(p), self.value(q))?;
        Ok(self.push(Tensor::scalar(v), Op::KlDivergence(p, q), &[p, q]))
    }

    pub fn sq_euclidean(&mut self, p: Var, q: Var) -> Result<Var> {
        let v = loss::sq_euclidean(self.value(p), self.value(q))?;
        Ok(self.push(Tensor::scalar(v), Op::SqEuclidean(p, q), &[p, q]))
    }

    /// Gradients of the `1 x 1` node `out` with respect to every node.
    pub fn backward(&self, out: Var) -> Result<Gradients<S>> {
        if self.value(out).shape() != [1, 1] {
            return Err(Error::shape("backward", format!("output must be 1x1, got {:?}", self.value(out).shape())));
        }
        let mut grads: Vec<Option<Tensor<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Tensor::scalar(S::one()));
        for i in (0..=out.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backward_node(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backward_node(&self, node: &Node<S>, g: &Tensor<S>, grads: &mut [Option<Tensor<S>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        let mut acc = |v: Var, f: &dyn Fn(&mut Tensor<S>)| {
            if wants(v) {
                let t = grads[v.0].get_or_insert_with(|| {
                    let s = self.nodes[v.0].value.shape();
                    Tensor::zeros(s[0], s[1])
                });
                f(t);
            }
        };
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (x, w) = (val(*a), val(*b));
                let (m, k, n) = (x.rows(), x.cols(), w.cols());
                acc(*a, &|t| S::gemm(m, n, k, S::one(), g.data(), false, w.data(), true, S::one(), t.data_mut()));
                acc(*b, &|t| S::gemm(k, m, n, S::one(), x.data(), true, g.data(), false, S::one(), t.data_mut()));
            }
            Op::SparseMatMul(x, w) => {
                acc(*w, &|t| t.add_assign(&x.matmul_transposed(g)));
            }
            Op::Add(a, b) => {
                acc(*a, &|t| t.add_assign(g));
                acc(*b, &|t| t.add_assign(g));
            }
            Op::AddRow(a, b) => {
                acc(*a, &|t| t.add_assign(g));
                acc(*b, &|t| {
                    for r in 0..g.rows() {
                        for (o, &x) in t.data_mut().iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &|t| axpy(t, *c, g)),
            Op::Relu(a) => {
                let x = val(*a);
                acc(*a, &|t| {
                    for ((o, &gi), &xi) in t.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                        if xi > S::zero() {
                            *o += gi;
                        }
                    }
                });
            }
            Op::LeakyRelu(a, slope) => {
                let x = val(*a);
                acc(*a, &|t| {
                    for ((o, &gi), &xi) in t.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                        *o += if xi > S::zero() { gi } else { *slope * gi };
                    }
                });
            }
            Op::Sigmoid(a) => acc(*a, &|t| {
                for ((o, &gi), &yi) in t.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    *o += gi * yi * (S::one() - yi);
                }
            }),
            Op::RowSoftmax(a) => acc(*a, &|t| {
                for r in 0..y.rows() {
                    softmax_backward(t.row_mut(r), g.row(r), y.row(r));
                }
            }),
            Op::MulConst(a, mask) => acc(*a, &|t| {
                for ((o, &gi), &m) in t.data_mut().iter_mut().zip(g.data()).zip(mask.data()) {
                    *o += gi * m;
                }
            }),
            Op::GatherRows(a, idx) => acc(*a, &|t| {
                for (r, &i) in idx.iter().enumerate() {
                    for (o, &gi) in t.row_mut(i).iter_mut().zip(g.row(r)) {
                        *o += gi;
                    }
                }
            }),
            Op::ConcatRows(parts) => {
                let mut at = 0;
                for &p in parts {
                    let rows = val(p).rows();
                    let cols = g.cols();
                    acc(p, &|t| {
                        for (o, &gi) in t.data_mut().iter_mut().zip(&g.data()[at * cols..(at + rows) * cols]) {
                            *o += gi;
                        }
                    });
                    at += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for &p in parts {
                    let cols = val(p).cols();
                    acc(p, &|t| {
                        for r in 0..g.rows() {
                            for (o, &gi) in t.row_mut(r).iter_mut().zip(&g.row(r)[at..at + cols]) {
                                *o += gi;
                            }
                        }
                    });
                    at += cols;
                }
            }
            Op::Column(a, j) => acc(*a, &|t| {
                for r in 0..g.rows() {
                    let cols = t.cols();
                    t.data_mut()[r * cols + j] += g.data()[r];
                }
            }),
            Op::SegmentSoftmax(a, csr) => acc(*a, &|t| {
                for r in 0..csr.n_rows() {
                    let range = csr.row_range(r);
                    softmax_backward(&mut t.data_mut()[range.clone()], &g.data()[range.clone()], &y.data()[range]);
                }
            }),
            Op::SegmentWeightedSum(w, x, csr) => {
                let (wv, xv) = (val(*w), val(*x));
                acc(*w, &|t| {
                    for r in 0..csr.n_rows() {
                        let gr = g.row(r);
                        for e in csr.row_range(r) {
                            t.data_mut()[e] += dot(gr, xv.row(csr.indices()[e]));
                        }
                    }
                });
                acc(*x, &|t| {
                    for r in 0..csr.n_rows() {
                        let gr = g.row(r);
                        for e in csr.row_range(r) {
                            let we = wv.data()[e];
                            for (o, &gi) in t.row_mut(csr.indices()[e]).iter_mut().zip(gr) {
                                *o += we * gi;
                            }
                        }
                    }
                });
            }
            Op::RowScale(x, s) => {
                let (xv, sv) = (val(*x), val(*s));
                acc(*x, &|t| {
                    for r in 0..g.rows() {
                        let si = sv.data()[r];
                        for (o, &gi) in t.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += si * gi;
                        }
                    }
                });
                acc(*s, &|t| {
                    for r in 0..g.rows() {
                        t.data_mut()[r] += dot(g.row(r), xv.row(r));
                    }
                });
            }
            Op::ConvexCombine(a, b, gate) => {
                let (av, bv, gv) = (val(*a), val(*b), val(*gate));
                acc(*a, &|t| {
                    for r in 0..g.rows() {
                        let k = gv.data()[r];
                        for (o, &gi) in t.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += k * gi;
                        }
                    }
                });
                acc(*b, &|t| {
                    for r in 0..g.rows() {
                        let k = S::one() - gv.data()[r];
                        for (o, &gi) in t.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += k * gi;
                        }
                    }
                });
                acc(*gate, &|t| {
                    for r in 0..g.rows() {
                        let mut s = S::zero();
                        for ((&gi, &x), &z) in g.row(r).iter().zip(av.row(r)).zip(bv.row(r)) {
                            s += gi * (x - z);
                        }
                        t.data_mut()[r] += s;
                    }
                });
            }
            Op::SelectRows(a, b, mask) => {
                acc(*a, &|t| {
                    for (r, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                        for (o, &gi) in t.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += gi;
                        }
                    }
                });
                acc(*b, &|t| {
                    for (r, _) in mask.iter().enumerate().filter(|(_, &m)| !m) {
                        for (o, &gi) in t.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += gi;
                        }
                    }
                });
            }
            Op::CrossEntropy(p, labels) => {
                let pv = val(*p);
                let scale = g.item() / S::lit(labels.len() as f64);
                let floor = S::lit(loss::PROB_FLOOR);
                acc(*p, &|t| {
                    for (r, &c) in labels.iter().enumerate() {
                        let x = pv.get(r, c);
                        if x > floor {
                            let cols = t.cols();
                            t.data_mut()[r * cols + c] -= scale / x;
                        }
                    }
                });
            }
            Op::KlDivergence(p, q) => {
                let (pv, qv) = (val(*p), val(*q));
                let scale = g.item() / S::lit(pv.rows() as f64);
                let floor = S::lit(loss::PROB_FLOOR);
                acc(*p, &|t| {
                    for ((o, &a), &b) in t.data_mut().iter_mut().zip(pv.data()).zip(qv.data()) {
                        *o += scale * (a.max(floor).ln() - b.max(floor).ln() + S::one());
                    }
                });
                acc(*q, &|t| {
                    for ((o, &a), &b) in t.data_mut().iter_mut().zip(pv.data()).zip(qv.data()) {
                        if b >= floor {
                            *o -= scale * a / b;
                        }
                    }
                });
            }
            Op::SqEuclidean(p, q) => {
                let (pv, qv) = (val(*p), val(*q));
                let scale = S::lit(2.0) * g.item() / S::lit(pv.rows() as f64);
                acc(*p, &|t| {
                    for ((o, &a), &b) in t.data_mut().iter_mut().zip(pv.data()).zip(qv.data()) {
                        *o += scale * (a - b);
                    }
                });
                acc(*q, &|t| {
                    for ((o, &a), &b) in t.data_mut().iter_mut().zip(pv.data()).zip(qv.data()) {
                        *o -= scale * (a - b);
                    }
                });
            }
        }
    }
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients<S> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Gradients<S> {
    /// `None` when `v` does not influence the output through a parameter.
    pub fn get(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<S>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

#[inline]
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

pub fn softmax_in_place<S: Scalar>(row: &mut [S]) {
    if row.is_empty() {
        return;
    }
    let m = row.iter().copied().fold(S::neg_infinity(), S::max);
    let mut sum = S::zero();
    for x in row.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

fn softmax_backward<S: Scalar>(out: &mut [S], g: &[S], y: &[S]) {
    let s = dot(g, y);
    for ((o, &gi), &yi) in out.iter_mut().zip(g).zip(y) {
        *o += yi * (gi - s);
    }
}

fn axpy<S: Scalar>(t: &mut Tensor<S>, c: S, g: &Tensor<S>) {
    for (o, &x) in t.data_mut().iter_mut().zip(g.data()) {
        *o += c * x;
    }
}

#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |s, (&x, &y)| s + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[Vec<f64>]) -> Tensor<f64> {
        Tensor::from_f64_rows(rows)
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[vec![0.0; 4]]));
        let y = tape.row_softmax(x);
        assert_eq!(tape.value(y).data(), &[0.25; 4]);
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::scalar(0.0));
        let y = tape.sigmoid(x);
        assert_eq!(tape.value(y).item(), 0.5);
        assert!(sigmoid(-800.0f64).is_finite() && sigmoid(800.0f64) == 1.0);
    }

    #[test]
    fn segment_weighted_sum_is_a_convex_sum() {
        let mut tape = Tape::new();
        let csr = Arc::new(Csr::from_rows(vec![vec![0, 1]], 2));
        let w = tape.constant(Tensor::column(vec![2.0 / 3.0, 1.0 / 3.0]));
        let x = tape.constant(t(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        let y = tape.segment_weighted_sum(w, x, csr).unwrap();
        let v = tape.value(y);
        assert!((v.get(0, 0) - 2.0 / 3.0).abs() < 1e-15 && (v.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shape_errors_name_the_operation() {
        let mut tape = Tape::<f64>::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        let err = tape.matmul(a, b).unwrap_err().to_string();
        assert!(err.starts_with("matmul"), "{err}");
        let b = tape_const(&mut tape, 3, 2);
        assert!(tape.add(a, b).unwrap_err().to_string().starts_with("add"));
    }

    fn tape_const(tape: &mut Tape<f64>, r: usize, c: usize) -> Var {
        tape.constant(Tensor::zeros(r, c))
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut tape = Tape::new();
        let a = tape.constant(t(&[vec![1.0, 2.0]]));
        let w = tape.param(t(&[vec![0.5], vec![-1.0]]));
        let y = tape.matmul(a, w).unwrap();
        let grads = tape.backward(y).unwrap();
        assert!(grads.get(a).is_none());
        assert_eq!(grads.get(w).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn backward_requires_scalar_output() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::<f64>::zeros(2, 2));
        assert!(tape.backward(a).is_err());
    }
}
