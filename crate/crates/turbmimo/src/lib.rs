//! Sweep driver, file formats and command-line plumbing around
//! [`turbmimo_core`].
//!
//! - [`config`]: flat `key = value` configuration files
//! - [`sweep`]: parallel Monte Carlo driver
//! - [`output`]: CSV results with a metadata sidecar
//! - [`records`]: phase-screen dumps, channel and mode-bank records
//! - [`validate`]: fast self-checks against independent [`oracle`]s

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod records;
pub mod sweep;
pub mod validate;

pub use error::{AppError, AppResult};
