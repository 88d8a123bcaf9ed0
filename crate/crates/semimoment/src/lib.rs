//! Truncated moment problems on closed semi-algebraic sets.
//!
//! The crate checks preorder positivity of linear functionals through
//! moment and localizing matrices, verifies operator bounds for bounded
//! polynomials as matrix pencils, disintegrates atomic measures along
//! bounded polynomials into fiber functionals, solves univariate fiber
//! problems by Gauss quadrature from moments, and constructs a certified
//! example of a positive linear functional in two variables that is not a
//! moment functional.

pub mod counterexample;
pub mod error;
pub mod fiber;
pub mod linalg;
pub mod moment;
pub mod polyring;
pub mod semialg;
pub mod univariate;

pub use error::{Error, Result};
