use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // map-level
    #[error("DegenerateMap: map has no nonzero entries")]
    DegenerateMap,
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidMap: {0}")]
    InvalidMap(String),

    // container and label I/O
    #[error("BadMagic: expected \"AIOU\", found {0:?}")]
    BadMagic(Vec<u8>),
    #[error("UnsupportedVersion: {0}")]
    UnsupportedVersion(u8),
    #[error("TruncatedHeader: container shorter than the 13-byte header")]
    TruncatedHeader,
    #[error("TruncatedRecord: record {index} ends early ({context})")]
    TruncatedRecord { index: u64, context: &'static str },
    #[error("TrailingData: {0} unexpected bytes after the last record")]
    TrailingData(u64),
    #[error("BadRecordKind: {0}")]
    BadRecordKind(u8),
    #[error("InvalidName: {0:?} ({1})")]
    InvalidName(String, &'static str),
    #[error("DuplicateName: {0}")]
    DuplicateName(String),
    #[error("UnknownRecord: {0}")]
    UnknownRecord(String),
    #[error("MissingColumn: {0}")]
    MissingColumn(String),
    #[error("NonBinaryLabel: image {image}, attribute {attribute}, value {value:?}")]
    NonBinaryLabel {
        image: String,
        attribute: String,
        value: String,
    },
    #[error("InvalidScore: image {image}, attribute {attribute}, value {value:?}")]
    InvalidScore {
        image: String,
        attribute: String,
        value: String,
    },
    #[error("DuplicateImageId: {0}")]
    DuplicateImageId(String),
    #[error("UnknownImage: {0}")]
    UnknownImage(String),
    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("Io: {0}")]
    Io(#[from] io::Error),

    // scoring
    #[error("NoMatchedImages: no image ids shared by both map sets")]
    NoMatchedImages,
    #[error("NoScorableImages: every matched image pair was degenerate")]
    NoScorableImages,
    #[error("MaskOutOfRange: mask {0} has entries outside [0, 1]")]
    MaskOutOfRange(String),
    #[error("UnknownAttribute: {0}")]
    UnknownAttribute(String),
    #[error("MissingPredictions: no predicted labels for attribute {0}")]
    MissingPredictions(String),
    #[error("IncompatibleReports: {0}")]
    IncompatibleReports(String),
    #[error("EmptySet: {0}")]
    EmptySet(&'static str),

    // statistics
    #[error("UndefinedMcc: a marginal of the contingency table is zero")]
    UndefinedMcc,
    #[error("AllGroupsExcluded: every group falls below the exclusion threshold")]
    AllGroupsExcluded,
    #[error("NoPositives: average precision needs at least one positive label")]
    NoPositives,
    #[error("DegenerateInput: {0}")]
    DegenerateInput(&'static str),
    #[error("LengthMismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    // planner
    #[error("UnattainableTarget: target MCC {target} outside attainable interval [{lo}, {hi}]")]
    UnattainableTarget { target: f64, lo: f64, hi: f64 },
    #[error("InfeasibleCap: no plan with total {cap} reaches MCC {target}")]
    InfeasibleCap { cap: f64, target: f64 },
}
