//! Command line drivers, configuration and file formats for the `chns_core`
//! phase-field flow solver.

pub mod config;
pub mod drivers;
pub mod error;
pub mod io;
pub mod solver;

pub use error::RunError;
