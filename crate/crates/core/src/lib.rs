//! Spin-j operator algebras, their symbol correspondences on the 2-sphere and
//! the classical limit of the induced twisted products.

pub mod asymptotics;
pub mod cli;
pub mod correspondence;
pub mod error;
pub mod exact;
mod memo;
pub mod sphere;
pub mod su2_basis;
pub mod trikernel;
pub mod twisted;
pub mod wigner;

pub use error::{Error, Result};
pub use exact::{Rational, SqrtRational};
