//! Command-line front end: configuration, run directories and reports.

pub mod analyze;
pub mod compare;
pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
