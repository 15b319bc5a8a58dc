//! Obtuse random variables, their structure tensors, the chain operators
//! realizing them, and the normal martingales obtained as limits of
//! rescaled obtuse random walks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cf;
pub mod chain;
pub mod cli;
pub mod error;
pub mod limit;
pub mod obtuse;
pub mod rng;
pub mod tensor;
pub mod walks;

mod linalg;

pub use chain::{mult_op, site_op, ChainOperator, ChainSpace};
pub use error::{Error, Result};
pub use limit::{limit_cf, limit_from_tensor, Affine, AffineFamily, LimitSpec, ObtuseFamily};
pub use obtuse::{ObtuseVariable, ValidationReport};
pub use tensor::{classify, diagonalize, system_of, tensor_of, OrthogonalFamily, Tensor3};
pub use walks::{exact_discrete_cf, WalkScenario};
