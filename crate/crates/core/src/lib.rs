pub mod actions;
pub mod catalog;
pub mod cli;
pub mod convexity;
pub mod error;
pub mod fiber;
pub mod fields;
pub mod morse;
pub mod sweep;

pub use error::{Error, Result};
