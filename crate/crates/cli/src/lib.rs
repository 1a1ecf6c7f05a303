//! File formats, reports and the command-line front end for
//! [`neuron_margins_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{IoError, IoResult};
