//! Regularly varying linear processes in Banach spaces: spectral tail
//! processes, extremal summaries, path simulation and tail estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banach;
pub mod error;
pub mod mc;
pub mod rv;
pub mod spectral;

pub use error::{Error, Result};
pub mod cli;
pub mod config;
pub mod estimate;
pub mod report;
pub mod simulate;
pub mod summaries;
pub mod verify;
