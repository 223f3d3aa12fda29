#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod greens;
pub mod propagator;
pub mod quadrature;
pub mod regsolve;
pub mod runner;
pub mod scenario;
pub mod specfun;
pub mod synthesis;

pub use error::{Error, Result};
