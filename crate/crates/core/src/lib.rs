pub mod envs;
pub mod error;
pub mod experiment;
pub mod goalspace;
pub mod hac;
pub mod nn;
pub mod rl;

pub use error::{Error, Result};

/// Random stream type used throughout; every trial derives its streams from a seed.
pub type LabRng = rand_chacha::ChaCha8Rng;
