pub mod canonical;
pub mod cli;
pub mod dec;
pub mod error;
pub mod harmonic;
pub mod mesh;
pub mod sparse;
pub mod validate;

pub use error::{Error, Result};
