//! Configuration, CSV data files, run outputs and plots.

pub mod config;
pub mod plot;
pub mod report;
pub mod run;
pub mod svg;
pub mod tables;
