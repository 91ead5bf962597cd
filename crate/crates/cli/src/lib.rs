//! Harness for the epflow solver: configuration, snapshot and CSV formats,
//! run manifests and the acceptance suite.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod manifest;
pub mod presets;
pub mod records;
pub mod snapshot;

pub use commands::execute;
pub use config::RunConfig;
