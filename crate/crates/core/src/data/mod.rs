//! Dataset files, splits, checkpoints and synthetic dataset generators.

pub mod checkpoint;
pub mod dataset;
pub mod kv;
pub mod splits;
pub mod synth;

pub use checkpoint::Checkpoint;
pub use dataset::{load_splits, save_splits, Dataset, Manifest};
pub use splits::{make_splits, SplitSet, DEFAULT_VAL_PER_CLASS};
