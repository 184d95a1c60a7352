//! Central finite-difference verification of tape gradients.

use crate::diff::tape::{Tape, Var};
use crate::diff::tensor::Tensor;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared absolutely
/// (relative error is measured against at least this magnitude).
pub const MAGNITUDE_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// `(input, flat entry)` of the worst disagreement.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
}

/// Compares the tape gradient of the scalar `f(inputs)` with central
/// differences of step [`FD_STEP`] for every entry of every input.
pub fn check_gradients<F>(inputs: &[Tensor<f64>], f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut report = GradCheck { max_rel_error: 0.0, worst: None, checked: 0 };
    let mut work = inputs.to_vec();
    for (i, &v) in vars.iter().enumerate() {
        for j in 0..inputs[i].len() {
            let analytic = grads.get(v).map_or(0.0, |g| g.data()[j]);
            let x0 = inputs[i].data()[j];
            work[i].data_mut()[j] = x0 + FD_STEP;
            let up = eval(&work)?;
            work[i].data_mut()[j] = x0 - FD_STEP;
            let down = eval(&work)?;
            work[i].data_mut()[j] = x0;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR);
            report.checked += 1;
            if err > report.max_rel_error || err.is_nan() {
                report.max_rel_error = err;
                report.worst = Some((i, j));
            }
        }
    }
    Ok(report)
}
