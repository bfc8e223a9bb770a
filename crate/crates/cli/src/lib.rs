//! Library side of the `dirac` command: configuration, reports, output files and the check suite.

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;
pub mod report;
