//! Dense-tensor numerics: shapes and broadcasting, a reverse-mode
//! differentiation tape, the Adam optimizer, and a finite-difference
//! gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod tape;
pub mod tensor;

pub use adam::{AdamParams, AdamState};
pub use gradcheck::{finite_diff_check, FiniteDiffReport, FD_STEP, FD_TOLERANCE};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
