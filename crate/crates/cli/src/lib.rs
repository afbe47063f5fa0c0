//! Command-line pipeline around `coreview-core`: file formats, configuration,
//! manifests and the subcommands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;
pub mod ingest;
pub mod manifest;
