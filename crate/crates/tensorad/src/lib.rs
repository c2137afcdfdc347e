//! Reverse-mode automatic differentiation on small dense matrices.
//!
//! A [`Tape`] records primitive operations eagerly: every call computes its
//! value immediately and appends one node, so the record is topologically
//! ordered by construction. [`Tape::backward`] sweeps it once in reverse to
//! produce gradients of a scalar output with respect to any chosen leaves.
//!
//! The crate also carries the pieces a small training loop needs around
//! the tape: central-difference [`gradient_check`] utilities, a
//! bias-corrected Adam optimizer ([`adam_step`]), and an exact-round-trip
//! text [`Checkpoint`] format for named tensors.
//!
//! Values are generic over the scalar type; `f64` is the intended default
//! and `*32` aliases cover single precision.

mod adam;
mod backward;
mod check;
mod checkpoint;
mod error;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use check::{gradient_check, gradient_check_with, CheckOptions};
pub use checkpoint::Checkpoint;
pub use error::TensorError;
pub use tape::{Tape, Var, LAYER_NORM_EPS, LEAKY_SLOPE};
pub use tensor::Tensor;

/// Single-precision tensor.
pub type Tensor32 = Tensor<f32>;
/// Single-precision tape.
pub type Tape32 = Tape<f32>;
/// Single-precision checkpoint.
pub type Checkpoint32 = Checkpoint<f32>;
/// Single-precision optimizer state.
pub type AdamState32 = AdamState<f32>;
