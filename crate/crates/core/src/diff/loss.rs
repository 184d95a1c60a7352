//! Distances between rows of label distributions. Each returns the mean
//! over rows; the tape versions in [`crate::diff::Tape`] share these
//! forward definitions.

use crate::diff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities are clamped to this floor before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Mean of `-ln(pred[row, label])`.
pub fn cross_entropy<S: Scalar>(pred: &Tensor<S>, labels: &[usize]) -> Result<S> {
    if pred.rows() == 0 {
        return Err(Error::shape("cross_entropy", "empty row set"));
    }
    if labels.len() != pred.rows() {
        return Err(Error::shape("cross_entropy", format!("{} labels for {} rows", labels.len(), pred.rows())));
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= pred.cols()) {
        return Err(Error::shape("cross_entropy", format!("label {bad} out of {} classes", pred.cols())));
    }
    let floor = S::lit(PROB_FLOOR);
    let total = labels.iter().enumerate().fold(S::zero(), |s, (r, &c)| s - pred.get(r, c).max(floor).ln());
    Ok(total / S::lit(pred.rows() as f64))
}

/// Mean over rows of `sum_c p_c (ln p_c - ln q_c)` with `0 ln 0 = 0`.
pub fn kl_divergence<S: Scalar>(p: &Tensor<S>, q: &Tensor<S>) -> Result<S> {
    check_pair("kl_divergence", p, q)?;
    let floor = S::lit(PROB_FLOOR);
    let mut total = S::zero();
    for (&a, &b) in p.data().iter().zip(q.data()) {
        if a > S::zero() {
            total += a * (a.ln() - b.max(floor).ln());
        }
    }
    Ok(total / S::lit(p.rows() as f64))
}

/// Mean over rows of `sum_c (p_c - q_c)^2`.
pub fn sq_euclidean<S: Scalar>(p: &Tensor<S>, q: &Tensor<S>) -> Result<S> {
    check_pair("sq_euclidean", p, q)?;
    let total = p.data().iter().zip(q.data()).fold(S::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
    Ok(total / S::lit(p.rows() as f64))
}

fn check_pair<S: Scalar>(op: &'static str, p: &Tensor<S>, q: &Tensor<S>) -> Result<()> {
    if p.shape() != q.shape() {
        return Err(Error::shape(op, format!("{:?} vs {:?}", p.shape(), q.shape())));
    }
    if p.rows() == 0 {
        return Err(Error::shape(op, "empty row set"));
    }
    Ok(())
}
