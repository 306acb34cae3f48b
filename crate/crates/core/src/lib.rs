//! Exact densities of the sets of integers represented by integral quadratic
//! forms, computed from p-adic representation tables, together with
//! enumeration kernels that check the answers against ground truth.

pub mod enumerate;
pub mod error;
pub mod forms;
pub mod global;
pub mod inverse;
pub mod local;
pub mod numtheory;

pub use error::{Error, Result};
