//! Batch front end for the deterministic erasing toolkit: image codecs
//! (PNG, PPM/PGM, IDX), the JSON annotation and manifest formats,
//! deterministic parallel pipeline execution, and the statistical
//! validation suite. The `erasekit` binary wraps these into the
//! `augment`, `augment-det`, `occlude`, `stats`, and `verify` subcommands.

pub mod annotations;
pub mod codec;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod validation;

pub use error::CliError;
