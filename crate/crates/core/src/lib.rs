//! Verification-grade library for the quantum and affine q-Krawtchouk
//! polynomials and the q-rotation operator whose matrix elements they are.
//!
//! The crate is generic over the scalar type: a configurable-precision
//! decimal float ([`BigFloat`]) for everything involving square roots, and
//! an exact rational ([`Rational`]) for the identities that are rational in
//! q and theta^2.

pub mod error;
pub mod matrix;
pub mod polys;
pub mod qseries;
pub mod relations;
pub mod rotation;
pub mod scalar;

pub use error::{QError, Result};
pub use scalar::{BigFloat, QContext, Rational, Scalar, DEFAULT_PRECISION};

/// Float-backend context at the default 100-digit precision.
pub type FloatCtx = QContext<BigFloat>;
/// Exact-rational context.
pub type ExactCtx = QContext<Rational>;
