//! Library surface of the pipeline driver, used by the `latentrw` binary
//! and by integration tests.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod svg;
