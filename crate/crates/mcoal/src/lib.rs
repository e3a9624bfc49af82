//! Simulation harness around `mcoal-core`: statistical tests, cross-checks
//! between the constructions, the acceptance suite, file formats and the
//! `mcoal` command line.

pub mod checks;
pub mod cli;
pub mod io;
pub mod replicate;
pub mod stats;
pub mod suite;
