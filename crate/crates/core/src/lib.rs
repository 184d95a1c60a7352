//! Post-training of heterogeneous graph neural networks with an auxiliary
//! label-propagation system.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which every training entry point uses.

pub mod auxiliary;
pub mod backbone;
pub mod csr;
pub mod data;
pub mod diff;
pub mod error;
pub mod eval;
pub mod global;
pub mod hin;
pub mod inputs;
pub mod local;
pub mod scalar;
pub mod train;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type Tensor = diff::Tensor<f64>;
pub type Tensor32 = diff::Tensor<f32>;
pub type Tape = diff::Tape<f64>;
pub type ParamStore = diff::ParamStore<f64>;
pub type LabelMatrix = global::LabelMatrix<f64>;
pub type FeatureStore = inputs::FeatureStore<f64>;
pub type GraphInputs = inputs::GraphInputs<f64>;
pub type AuxSystem = auxiliary::AuxSystem<f64>;
pub type Backbone = backbone::Backbone<f64>;
