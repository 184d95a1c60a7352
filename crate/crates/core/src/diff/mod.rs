//! Differentiable numeric kernels, parameter registry, initialization and
//! the Adam optimizer.

pub mod adam;
pub mod check;
pub mod loss;
pub mod params;
pub mod random;
pub mod tape;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use params::{Bound, Param, ParamId, ParamStore};
pub use random::Rng;
pub use tape::{Gradients, Tape, Var};
pub use tensor::{SparseRows, Tensor};
