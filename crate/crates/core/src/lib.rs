//! Double-dark-state cooling of a trapped ion.

pub mod error;
pub mod linalg;
pub mod dynamics;
pub mod model;
pub mod rates;
pub mod spectra;
pub mod harness;
pub mod cli;

pub use error::{Error, Result};
