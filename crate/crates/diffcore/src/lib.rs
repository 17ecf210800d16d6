//! A deliberately small reverse-mode differentiation layer.
//!
//! It provides exactly the primitives needed by a recurrent planning agent:
//! dense and convolutional layers, pooling, softmax, a gated recurrent cell,
//! and content/usage-addressed memory operations. All values are `f64`.
//! Graphs are recorded eagerly on a [`Tape`]; [`Tape::backward`] performs the
//! reverse sweep, [`Adam`] applies updates, and [`grad_check`] compares
//! analytic gradients against central differences.

mod adam;
mod elementwise;
mod error;
pub mod gradcheck;
mod memory;
mod nn;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use elementwise::{sigmoid, softplus};
pub use error::{DiffError, Result};
pub use gradcheck::{grad_check, grad_check_inputs, relative_error, GradCheck};
pub use memory::NORM_FLOOR;
pub use nn::softmax;
pub use params::{Bound, Checkpoint, ParamId, ParamStore};
pub use tape::{Activation, Gradients, Tape, Unary, Var};
pub use tensor::Tensor;
