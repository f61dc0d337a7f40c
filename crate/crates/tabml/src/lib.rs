//! Command-line pipeline around `tabml-core`: configuration, CSV and JSON
//! artifacts, the phase scheduler with resume, reports and model reuse.

pub mod apply;
pub mod artifacts;
pub mod config;
pub mod csvio;
pub mod error;
pub mod layout;
pub mod phases;
pub mod pipeline;
pub mod report;
pub mod results;
pub mod svg;

pub use error::{Error, Result};
