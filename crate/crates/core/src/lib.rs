pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod numerics;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use numerics::DenseMatrix;
