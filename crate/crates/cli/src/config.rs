use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::{Command, Format, Grouping};

/// Fully resolved invocation, embedded in every report so each output file
/// describes how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub maps: Option<String>,
    pub masks: Option<String>,
    pub labels: Option<String>,
    pub predictions: Option<String>,
    pub target: Vec<String>,
    pub reference: Option<String>,
    pub protected: Option<String>,
    pub exclusion_threshold: f64,
    pub label_source: String,
    pub mcc_targets: Vec<f64>,
    pub n_ref: Option<f64>,
    pub seed: Option<u64>,
    pub images: Option<usize>,
    pub size: Option<usize>,
    pub mask_scale: Option<usize>,
    pub leakage: Option<f64>,
    pub inputs: Vec<String>,
    pub subsets: Option<String>,
    pub output: Option<String>,
    pub format: Format,
}

fn path(p: &Option<impl AsRef<Path>>) -> Option<String> {
    p.as_ref().map(|p| p.as_ref().display().to_string())
}

impl RunConfig {
    fn empty(command: &str, format: Format) -> Self {
        Self {
            command: command.to_owned(),
            maps: None,
            masks: None,
            labels: None,
            predictions: None,
            target: Vec::new(),
            reference: None,
            protected: None,
            exclusion_threshold: aiou_core::DEFAULT_EXCLUSION_THRESHOLD,
            label_source: "ground_truth".into(),
            mcc_targets: Vec::new(),
            n_ref: None,
            seed: None,
            images: None,
            size: None,
            mask_scale: None,
            leakage: None,
            inputs: Vec::new(),
            subsets: None,
            output: None,
            format,
        }
    }

    fn with_grouping(mut self, g: &Grouping) -> Self {
        self.labels = path(&g.labels);
        self.predictions = path(&g.predictions);
        self.protected = g.protected.clone();
        self.exclusion_threshold = g.threshold;
        if g.use_predictions {
            self.label_source = "predicted".into();
        }
        self
    }

    fn with_reference_from_protected(mut self) -> Self {
        self.reference = self.protected.clone();
        self
    }

    pub fn resolve(cmd: &Command) -> Self {
        match cmd {
            Command::ScoreMask(a) => Self {
                maps: path(&Some(&a.maps)),
                masks: path(&Some(&a.masks)),
                target: vec![a.target.clone()],
                reference: Some(a.reference.clone()),
                output: path(&a.output.out),
                ..Self::empty("score-mask", a.output.format)
            }
            .with_grouping(&a.grouping),
            Command::ScoreHeatmap(a) => Self {
                maps: path(&Some(&a.maps)),
                target: a.target.clone(),
                n_ref: a.n_ref,
                output: path(&a.output.out),
                ..Self::empty("score-heatmap", a.output.format)
            }
            .with_grouping(&a.grouping)
            .with_reference_from_protected(),
            Command::Plan(a) => Self {
                labels: path(&Some(&a.labels)),
                target: vec![a.target.clone()],
                protected: Some(a.protected.clone()),
                mcc_targets: a.targets.clone(),
                subsets: path(&a.subsets),
                output: path(&a.output.out),
                ..Self::empty("plan", a.output.format)
            },
            Command::Synth(a) => Self {
                seed: Some(a.seed),
                images: Some(a.images),
                size: Some(a.size),
                mask_scale: Some(a.mask_scale),
                leakage: Some(a.leakage),
                output: path(&Some(&a.out)),
                ..Self::empty("synth", Format::Json)
            },
            Command::Validate(a) => Self {
                maps: path(&a.maps),
                masks: path(&a.masks),
                labels: path(&a.labels),
                predictions: path(&a.predictions),
                output: path(&a.output.out),
                ..Self::empty("validate", a.output.format)
            },
            Command::Merge(a) => Self {
                inputs: a.reports.iter().map(|p| p.display().to_string()).collect(),
                output: path(&a.output.out),
                ..Self::empty("merge", a.output.format)
            },
        }
    }
}
