use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which half of a target / non-target split an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PartitionSide {
    Target,
    NonTarget,
}

impl fmt::Display for PartitionSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionSide::Target => f.write_str("target"),
            PartitionSide::NonTarget => f.write_str("non-target"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(
        "image {image_id}: activation of neuron {neuron} is {value}, expected a finite value >= 0"
    )]
    InvalidActivation {
        image_id: String,
        neuron: usize,
        value: f64,
    },
    #[error("image {image_id}: expected {expected} activations, found {found}")]
    RowLength {
        image_id: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate image id {0}")]
    DuplicateImage(String),
    #[error("activation table has no neurons")]
    NoNeurons,
    #[error("image {0}: empty concept tag")]
    EmptyConcept(String),
    #[error("annotated image {0} has no activation row")]
    UnknownImage(String),
    #[error("neuron {neuron}: duplicate label rank {rank}")]
    DuplicateLabel { neuron: usize, rank: u32 },
    #[error("neuron {neuron}: label ranks must be contiguous from 1, expected rank {expected}, found {found}")]
    RankGap {
        neuron: usize,
        expected: u32,
        found: u32,
    },
    #[error("neuron {neuron}: coverage score {value} is not finite")]
    InvalidCoverage { neuron: usize, value: f64 },
    #[error("calibration activation table is empty")]
    EmptyCalibration,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("fraction {0} is not one of the configured thresholds")]
    UnknownFraction(f64),
    #[error("invalid analysis configuration: {0}")]
    InvalidConfig(String),
    #[error("ensemble must contain at least one neuron")]
    EmptyEnsemble,
    #[error("neuron index {neuron} out of range for {neuron_count} neurons")]
    NeuronOutOfRange { neuron: usize, neuron_count: usize },
    #[error("concept {concept}: empty {side} partition")]
    EmptyPartition {
        concept: String,
        side: PartitionSide,
    },
    #[error("concept {concept}: {neurons} candidate neurons give {subsets} ensembles, above the limit of {limit}")]
    EnsembleLimit {
        concept: String,
        neurons: usize,
        subsets: u128,
        limit: u128,
    },
    #[error("sample value is NaN")]
    NanValue,
    #[error("{0} sample is empty")]
    EmptySample(&'static str),
    #[error("exact method unavailable: {0}")]
    ExactUnavailable(String),
    #[error("calibration and evaluation tables are not row-aligned: {0}")]
    Misaligned(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),
    #[error("invalid percentage {0:?}")]
    InvalidPercentage(String),
}
