//! Parallel experiments, file formats and the command-line front end for
//! `stubborn-usd-core`.

pub mod batch;
pub mod cli;
pub mod compare;
pub mod couple;
pub mod error;
pub mod sweep;

pub use error::LabError;
