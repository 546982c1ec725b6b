//! File formats, the batch experiment harness and the `brule` command-line
//! tool built on [`brule_core`].

pub mod cli;
pub mod error;
pub mod experiment;
pub mod format;
pub mod schema;

pub use error::{AppError, AppResult};
