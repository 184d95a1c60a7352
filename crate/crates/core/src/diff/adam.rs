use serde::{Deserialize, Serialize};

use crate::diff::params::ParamStore;
use crate::diff::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    /// L2 coefficient added to the gradient of parameters flagged for decay.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamConfig { lr, weight_decay, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment estimates for one [`ParamStore`].
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    pub config: AdamConfig,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
    step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(config: AdamConfig, params: &ParamStore<S>) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.value.rows(), p.value.cols())).collect();
        AdamState { config, m: zeros(), v: zeros(), step: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update from the gradient slots of `params`.
    /// Parameters without a gradient are left untouched.
    pub fn step(&mut self, params: &mut ParamStore<S>) {
        self.step += 1;
        let c = &self.config;
        let (b1, b2) = (S::lit(c.beta1), S::lit(c.beta2));
        let bc1 = S::one() - S::lit(c.beta1.powi(self.step as i32));
        let bc2 = S::one() - S::lit(c.beta2.powi(self.step as i32));
        let (lr, eps, wd) = (S::lit(c.lr), S::lit(c.eps), S::lit(c.weight_decay));
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let Some(grad) = p.grad.as_ref() else { continue };
            let decay = if p.decay { wd } else { S::zero() };
            let theta = p.value.data_mut();
            for i in 0..theta.len() {
                let g = grad.data()[i] + decay * theta[i];
                let mi = b1 * m.data()[i] + (S::one() - b1) * g;
                let vi = b2 * v.data()[i] + (S::one() - b2) * g * g;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                theta[i] -= lr * (mi / bc1) / ((vi / bc2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(values: Vec<f64>, grad: Vec<f64>, decay: bool) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::column(values), decay);
        let _ = id;
        s.iter_mut().next().unwrap().grad = Some(Tensor::column(grad));
        s
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = store(vec![1.0, -2.0], vec![0.0, 0.0], true);
        let mut adam = AdamState::new(AdamConfig::new(0.01, 0.0), &s);
        adam.step(&mut s);
        assert_eq!(s.iter().next().unwrap().value.data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        // m_hat = g, v_hat = g^2 after bias correction: update = lr * g / (|g| + eps).
        let mut s = store(vec![0.0, 0.0, 0.0], vec![3.0, -0.5, 1e-3], false);
        let mut adam = AdamState::new(AdamConfig::new(0.01, 0.0), &s);
        adam.step(&mut s);
        let got = s.iter().next().unwrap().value.data().to_vec();
        for (x, g) in got.iter().zip([3.0f64, -0.5, 1e-3]) {
            let want = -0.01 * g / (g.abs() + 1e-8);
            assert!((x - want).abs() < 1e-12, "{x} vs {want}");
        }
    }

    #[test]
    fn weight_decay_enters_the_gradient() {
        // With zero loss gradient the effective gradient is 0.0005 * theta.
        let mut s = store(vec![2.0], vec![0.0], true);
        let mut adam = AdamState::new(AdamConfig::new(0.01, 0.0005), &s);
        adam.step(&mut s);
        let g = 0.0005 * 2.0;
        let want = 2.0 - 0.01 * g / (g + 1e-8);
        assert!((s.iter().next().unwrap().value.data()[0] - want).abs() < 1e-15);
        // exempt parameter is not decayed
        let mut s = store(vec![2.0], vec![0.0], false);
        let mut adam = AdamState::new(AdamConfig::new(0.01, 0.0005), &s);
        adam.step(&mut s);
        assert_eq!(s.iter().next().unwrap().value.data(), &[2.0]);
    }
}
