//! Dense networks with manual backpropagation and Adam.

mod adam;
pub mod gradcheck;
mod mlp;

pub use adam::AdamState;
pub use mlp::{soft_update, Activation, ForwardCache, Layer, Mlp, MlpParams, MlpSpec};
