//! Attention-map bias analysis.
//!
//! The central quantity is Attention-IoU, a generalized intersection over
//! union between two L1-normalized nonnegative pixel maps
//! ([`map::attention_iou`]). On top of it this crate provides
//!
//! * mask and heatmap scores over image sets, stratified by label groups
//!   ([`scoring`]),
//! * the "AIOU v1" binary map archive and label CSV ingestion
//!   ([`container`], [`labels`]),
//! * MCC, worst-group accuracy, (normalized) average precision and Kendall's
//!   tau ([`stats`]),
//! * a subsampling planner that finds subgroup sizes realizing a target MCC
//!   ([`planner`]),
//! * a synthetic attention-leakage generator for end-to-end checks ([`synth`]).

pub mod container;
pub mod error;
pub mod group;
pub mod labels;
pub mod map;
pub mod planner;
pub mod scoring;
pub mod stats;
pub mod sum;
pub mod synth;

pub use container::{
    read_container, write_container, ContainerIndex, ContainerReader, MapContainer, MapRecord,
    MapSet, RecordKind,
};
pub use error::{Error, Result};
pub use group::{GroupKey, DEFAULT_EXCLUSION_THRESHOLD};
pub use labels::{read_labels, read_predictions, LabelSource, LabelTable, PredictionTable};
pub use map::{
    attention_iou, bilinear_downsample, l1_normalize, nearest_upscale, Map, NormalizedMap,
};
pub use planner::{apply_plan, round_plan, solve_subgroups, sweep, SubsamplePlan};
pub use scoring::{
    average_map, heatmap_score, mask_score, merge_reports, stratify, GroupStats, MergedReport,
    ScoreKind, ScoreReport, Stratification,
};
pub use stats::{
    average_precision, kendall_tau, mcc, mcc_labels, normalized_average_precision,
    worst_group_accuracy, ConfusionCounts, WorstGroup,
};
pub use synth::{gen_bias_fixture, gen_blob_map, BiasFixture, BlobSpec, SyntheticSet};
