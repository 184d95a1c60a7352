use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::diff::tensor::Tensor;
use crate::scalar::Scalar;

/// The single generator family used for every stochastic choice.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a named purpose from a run seed.
pub fn substream(seed: u64, purpose: &str) -> Rng {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    rng(seed ^ h.rotate_left(17))
}

/// Entries drawn from `N(0, 2 / (fan_in + fan_out))`.
///
/// A two-dimensional `shape` is `[fan_in, fan_out]`; a one-dimensional shape
/// `[n]` yields an `n x 1` vector with `fan_in = fan_out = n`.
pub fn xavier_normal<S: Scalar>(shape: &[usize], rng: &mut Rng) -> Tensor<S> {
    let (rows, cols, fan_in, fan_out) = match *shape {
        [n] => (n, 1, n, n),
        [r, c] => (r, c, r, c),
        _ => panic!("xavier_normal supports 1-d and 2-d shapes, got {shape:?}"),
    };
    let n = rows * cols;
    if n == 0 {
        return Tensor::zeros(rows, cols);
    }
    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..n).map(|_| S::lit(std * rng.sample::<f64, _>(StandardNormal))).collect();
    Tensor::new(rows, cols, data).expect("shape")
}

/// Inverted-dropout mask: entries are `0` with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask<S: Scalar>(rows: usize, cols: usize, rate: f64, rng: &mut Rng) -> Tensor<S> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    let keep = S::lit(1.0 / (1.0 - rate));
    let data = (0..rows * cols).map(|_| if rng.random::<f64>() < rate { S::zero() } else { keep }).collect();
    Tensor::new(rows, cols, data).expect("shape")
}
