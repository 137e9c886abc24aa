//! File formats, dataset generation and the command-line front end built on
//! [`mtforge_core`].
//!
//! Sample files (`<id>.mts` plus a `<id>.json` sidecar) and `manifest.json`
//! are the interface to downstream consumers; their layout is defined in
//! [`mtforge_core::pipeline`] and written here.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod forward;
pub mod io;

pub use error::{Error, Result};
