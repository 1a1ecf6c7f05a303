//! Error margins for hidden-neuron concept labels.
//!
//! Given per-image activations of a layer, ground-truth concept tags per
//! image and a ranked concept label map per neuron, this crate computes how
//! often a neuron (or a conjunctive neuron ensemble) fires on images that
//! carry its label (TLA) and on images that do not (Non-TLA) at thresholds
//! expressed as fractions of each neuron's recorded maximum. The Non-TLA at a
//! threshold is the label's error margin.
//!
//! Error margins measured on a calibration dataset are validated on an
//! evaluation dataset with the one-sided Mann-Whitney U test per hypothesis
//! and Wilcoxon signed-rank tests over the confirmed pairs, both implemented
//! here from scratch (exact distributions by dynamic programming, tie- and
//! continuity-corrected normal approximations).
//!
//! The crate is `no_std` and only needs `alloc`; file formats, reports and
//! the command-line front end live in the `neuron-margins` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod audit;
pub mod dataset;
mod error;
pub mod margins;
pub mod rate;
pub mod stats;
pub mod synth;

pub use error::{Error, PartitionSide, Result};
