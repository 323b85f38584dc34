pub mod cli;
pub mod data_io;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod likelihood;
pub mod persist;
pub mod ratio;
pub mod sample;
pub mod simulators;
pub mod spectral_basis;

pub use error::{Error, Result};
