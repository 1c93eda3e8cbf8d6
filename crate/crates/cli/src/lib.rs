//! Command-line front end: every experiment as a subcommand, CSV/JSONL
//! outputs and a run manifest next to them.

pub mod app;
mod commands;
pub mod manifest;
mod output;

pub use app::run;
pub use manifest::RunManifest;
