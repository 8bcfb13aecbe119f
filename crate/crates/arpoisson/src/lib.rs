//! Command-line verifier for the constructions in `arpoisson-core`.
//!
//! `verify` runs the check suites and writes `report.json`, `timings.json`
//! and CSV tables; `surface` writes plot-ready grids.

pub mod cli;
pub mod config;
pub mod report;
pub mod suites;
pub mod surface;
