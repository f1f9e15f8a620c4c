//! Parallel execution, result files and the command line for the
//! four-crystal postselection model in `bellsim-core`.

pub mod cli;
pub mod exec;
pub mod manifest;
pub mod output;
pub mod report;
pub mod sink;

pub use exec::Rayon;
pub use manifest::{Job, Physics, RunManifest};
pub use output::{write_csv, CurveRow, Summary};
