use thiserror::Error;

use crate::features::TrafficClass;

/// Errors surfaced by the library. Parsing errors carry enough context to
/// point at the offending input; pipeline errors name the contract that was
/// violated.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input does not start with a recognized magic number")]
    BadMagic,

    #[error("unsupported link type {0} (only Ethernet, link type 1, is supported)")]
    UnsupportedLinkType(u32),

    #[error("input ends before the 24-byte pcap global header is complete")]
    Truncated,

    #[error("malformed CSV row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("polling interval {0} s is outside the supported range 1..=120")]
    InvalidInterval(u32),

    #[error("cannot extract features from a window with zero packets")]
    EmptyWindow,

    #[error("input sample set is empty")]
    EmptyInput,

    #[error("need at least {need} samples, got {have}")]
    TooFewSamples { have: usize, need: usize },

    #[error("training data contains a single class; at least two are required")]
    SingleClass,

    #[error("k must be a positive odd integer, got {0}")]
    InvalidK(usize),

    #[error("model buffer length mismatch: expected {expected} bytes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("model contains invalid label byte {0}")]
    InvalidLabelByte(u8),

    #[error("class {class} has only {have} samples; at least {need} are required")]
    ClassTooSmall {
        class: TrafficClass,
        have: usize,
        need: usize,
    },

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("interval {interval} s does not yield enough windows per class")]
    InsufficientWindows { interval: u32 },

    #[error("training set is empty")]
    EmptyTrain,

    #[error("device {device} was already removed from the network")]
    DeviceRemoved { device: String },

    #[error("device {device} has no label in the provided label map")]
    UnlabeledDevice { device: String },

    #[error("attack rate {rate} pkt/s yields fewer than {min} packets per reference window")]
    AttackRateTooLow { rate: f64, min: u64 },

    #[error("invalid device profile: {0}")]
    InvalidProfile(String),

    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
