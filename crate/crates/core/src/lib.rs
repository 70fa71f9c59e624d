#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod adapted_defining_function;
pub mod branson_continuation;
pub mod conformal_operators;
pub mod error;
pub mod extremizers;
pub mod inequality_functionals;
pub mod quadrature;
pub mod specfun;
pub mod sphere_spectral;

pub use error::{Error, Result};
