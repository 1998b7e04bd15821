//! Numerical integration of the parabolic quaternionic Monge-Ampère flow on
//! flat hyperKähler tori, with the pointwise exterior algebra and identity
//! checks it rests on.

pub mod cli;
pub mod error;
pub mod exterior;
pub mod flow;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod verification;

pub use error::{Error, Result};
