//! Mask and heatmap scores over image sets.
//!
//! Per-image Attention-IoU values are computed in parallel into an
//! image-id-ordered buffer; every reduction afterwards is sequential over
//! that order, so reports do not depend on input order or worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::container::MapSet;
use crate::error::{Error, Result};
use crate::group::{is_excluded, GroupKey, DEFAULT_EXCLUSION_THRESHOLD};
use crate::labels::{LabelSource, LabelTable};
use crate::map::{attention_iou, bilinear_downsample, l1_normalize, Map};
use crate::sum::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Mask,
    Heatmap,
}

/// Score of one image; `None` when either map was degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub image_id: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    #[serde(flatten)]
    pub group: GroupKey,
    /// Scored (non-degenerate) images in the group.
    pub n: usize,
    /// Degenerate images in the group.
    pub skipped: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub score_kind: ScoreKind,
    pub target: String,
    pub reference: String,
    pub overall_mean: f64,
    pub overall_std: f64,
    pub n: usize,
    pub skipped_degenerate: usize,
    /// Images present in only one of the two map sets.
    pub unmatched: usize,
    pub per_group: Vec<GroupStats>,
    #[serde(skip)]
    pub images: Vec<ImageScore>,
}

impl ScoreReport {
    fn from_images(
        score_kind: ScoreKind,
        target: &str,
        reference: &str,
        images: Vec<ImageScore>,
        unmatched: usize,
    ) -> Result<Self> {
        let values: Vec<f64> = images.iter().filter_map(|s| s.value).collect();
        let (overall_mean, overall_std) = mean_std(&values).ok_or(Error::NoScorableImages)?;
        Ok(Self {
            score_kind,
            target: target.to_owned(),
            reference: reference.to_owned(),
            overall_mean,
            overall_std,
            n: values.len(),
            skipped_degenerate: images.len() - values.len(),
            unmatched,
            per_group: Vec::new(),
            images,
        })
    }

    pub fn total_images(&self) -> usize {
        self.n + self.skipped_degenerate
    }

    /// Adds a per-group breakdown.
    pub fn stratified(mut self, strata: &Stratification<'_>) -> Result<Self> {
        self.per_group = stratify(&self, strata)?;
        Ok(self)
    }

    pub fn all_groups_excluded(&self) -> bool {
        !self.per_group.is_empty() && self.per_group.iter().all(|g| g.excluded)
    }
}

/// Image id with its maps from both sets.
type Pair<'a> = (&'a str, &'a Map, &'a Map);

fn matched<'a>(a: &'a MapSet, b: &'a MapSet) -> Result<(Vec<Pair<'a>>, usize)> {
    let pairs: Vec<_> = a
        .iter()
        .filter_map(|(id, m)| b.get(id).map(|other| (id.as_str(), m, other)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoMatchedImages);
    }
    let unmatched = a.len() + b.len() - 2 * pairs.len();
    Ok((pairs, unmatched))
}

fn degenerate_to_none(result: Result<f64>) -> Result<Option<f64>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateMap) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Mean Attention-IoU between attention maps and feature masks, the mask being
/// bilinearly downsampled to the attention map's shape first.
pub fn mask_score(
    target: &str,
    reference: &str,
    attention: &MapSet,
    masks: &MapSet,
) -> Result<ScoreReport> {
    let (pairs, unmatched) = matched(attention, masks)?;
    let images = pairs
        .par_iter()
        .map(|&(id, attn, mask)| {
            if mask.data().iter().any(|&v| v > 1.0) {
                return Err(Error::MaskOutOfRange(id.to_owned()));
            }
            let small = bilinear_downsample(mask, attn.height(), attn.width()).map_err(|e| match e {
                Error::DimensionMismatch(msg) => {
                    Error::DimensionMismatch(format!("image {id}: {msg}"))
                }
                other => other,
            })?;
            Ok(ImageScore {
                image_id: id.to_owned(),
                value: degenerate_to_none(attention_iou(attn, &small))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreReport::from_images(ScoreKind::Mask, target, reference, images, unmatched)
}

/// Mean Attention-IoU between the attention maps of two attributes.
pub fn heatmap_score(
    target: &str,
    reference: &str,
    attention_target: &MapSet,
    attention_reference: &MapSet,
) -> Result<ScoreReport> {
    let (pairs, unmatched) = matched(attention_target, attention_reference)?;
    let images = pairs
        .par_iter()
        .map(|&(id, a, b)| {
            let value = degenerate_to_none(attention_iou(a, b)).map_err(|e| match e {
                Error::DimensionMismatch(msg) => {
                    Error::DimensionMismatch(format!("image {id}: {msg}"))
                }
                other => other,
            })?;
            Ok(ImageScore {
                image_id: id.to_owned(),
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreReport::from_images(ScoreKind::Heatmap, target, reference, images, unmatched)
}

/// How to split a report into (target, protected) label groups.
#[derive(Debug, Clone, Copy)]
pub struct Stratification<'a> {
    pub labels: &'a LabelTable,
    pub target: &'a str,
    pub protected: &'a str,
    pub source: LabelSource,
    pub threshold: f64,
}

impl<'a> Stratification<'a> {
    pub fn new(labels: &'a LabelTable, target: &'a str, protected: &'a str) -> Self {
        Self {
            labels,
            target,
            protected,
            source: LabelSource::GroundTruth,
            threshold: DEFAULT_EXCLUSION_THRESHOLD,
        }
    }
}

/// Per-group mean/std of a report's image scores. Every group is reported;
/// groups holding fewer than `threshold * total` images are flagged excluded.
pub fn stratify(report: &ScoreReport, strata: &Stratification<'_>) -> Result<Vec<GroupStats>> {
    let t = strata.labels.labels(strata.target, strata.source)?;
    let p = strata.labels.labels(strata.protected, strata.source)?;
    let mut values: [Vec<f64>; 4] = Default::default();
    let mut skipped = [0usize; 4];
    for s in &report.images {
        let row = strata
            .labels
            .image_position(&s.image_id)
            .ok_or_else(|| Error::UnknownImage(s.image_id.clone()))?;
        let g = GroupKey::new(t[row], p[row]).index();
        match s.value {
            Some(v) => values[g].push(v),
            None => skipped[g] += 1,
        }
    }
    let total = report.images.len();
    Ok(GroupKey::ALL
        .iter()
        .map(|&group| {
            let i = group.index();
            let ms = mean_std(&values[i]);
            GroupStats {
                group,
                n: values[i].len(),
                skipped: skipped[i],
                mean: ms.map(|m| m.0),
                std: ms.map(|m| m.1),
                excluded: is_excluded(values[i].len() + skipped[i], total, strata.threshold),
            }
        })
        .collect())
}

/// Pixel-wise mean of L1-normalized maps, rescaled so the largest entry is 1.
/// Degenerate maps are left out.
pub fn average_map<'a, I>(maps: I) -> Result<Map>
where
    I: IntoIterator<Item = &'a Map>,
{
    let mut acc: Option<(usize, usize, Vec<f64>)> = None;
    let mut count = 0usize;
    let mut seen_any = false;
    for m in maps {
        seen_any = true;
        if let Some((h, w, _)) = &acc {
            if (*h, *w) != m.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "{h}x{w} vs {}x{}",
                    m.height(),
                    m.width()
                )));
            }
        }
        if m.is_degenerate() {
            continue;
        }
        let n = l1_normalize(m)?;
        let (_, _, sum) = acc.get_or_insert_with(|| (m.height(), m.width(), vec![0.0; m.data().len()]));
        for (s, v) in sum.iter_mut().zip(n.data()) {
            *s += v;
        }
        count += 1;
    }
    if !seen_any {
        return Err(Error::EmptySet("no maps to average"));
    }
    let (h, w, sum) = acc.ok_or(Error::DegenerateMap)?;
    let mean: Vec<f64> = sum.into_iter().map(|v| v / count as f64).collect();
    let peak = mean.iter().copied().fold(0.0, f64::max);
    Map::new(h, w, mean.into_iter().map(|v| v / peak).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    /// Reports that contributed a value.
    pub models: usize,
}

impl MeanStd {
    fn of(values: &[f64]) -> Option<Self> {
        mean_std(values).map(|(mean, std)| Self {
            mean,
            std,
            models: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedGroup {
    #[serde(flatten)]
    pub group: GroupKey,
    pub score: Option<MeanStd>,
}

/// Across-model aggregate of reports that share kind, target and reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub score_kind: ScoreKind,
    pub target: String,
    pub reference: String,
    pub models: usize,
    pub overall: MeanStd,
    pub per_group: Vec<MergedGroup>,
}

/// Mean and population std of each report's means. Excluded groups do not
/// contribute.
pub fn merge_reports(reports: &[ScoreReport]) -> Result<MergedReport> {
    let first = reports.first().ok_or(Error::EmptySet("no reports to merge"))?;
    for r in reports {
        if (r.score_kind, &r.target, &r.reference) != (first.score_kind, &first.target, &first.reference) {
            return Err(Error::IncompatibleReports(format!(
                "{}/{} vs {}/{}",
                first.target, first.reference, r.target, r.reference
            )));
        }
    }
    let overall: Vec<f64> = reports.iter().map(|r| r.overall_mean).collect();
    let per_group = GroupKey::ALL
        .iter()
        .filter(|&&key| reports.iter().any(|r| r.per_group.iter().any(|g| g.group == key)))
        .map(|&group| {
            let values: Vec<f64> = reports
                .iter()
                .flat_map(|r| r.per_group.iter())
                .filter(|g| g.group == group && !g.excluded)
                .filter_map(|g| g.mean)
                .collect();
            MergedGroup {
                group,
                score: MeanStd::of(&values),
            }
        })
        .collect();
    Ok(MergedReport {
        score_kind: first.score_kind,
        target: first.target.clone(),
        reference: first.reference.clone(),
        models: reports.len(),
        overall: MeanStd::of(&overall).expect("nonempty"),
        per_group,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flattens reports to CSV, one row per (target, reference, group); the
/// `all` group carries the overall statistics.
pub fn write_reports_csv<W: Write>(reports: &[ScoreReport], dest: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dest);
    w.write_record([
        "score_kind", "target", "reference", "group", "n", "skipped", "mean", "std", "excluded",
    ])?;
    for r in reports {
        let kind = match r.score_kind {
            ScoreKind::Mask => "mask",
            ScoreKind::Heatmap => "heatmap",
        };
        w.write_record([
            kind,
            &r.target,
            &r.reference,
            "all",
            &r.n.to_string(),
            &r.skipped_degenerate.to_string(),
            &r.overall_mean.to_string(),
            &r.overall_std.to_string(),
            "false",
        ])?;
        for g in &r.per_group {
            w.write_record([
                kind,
                &r.target,
                &r.reference,
                &g.group.label(),
                &g.n.to_string(),
                &g.skipped.to_string(),
                &fmt_opt(g.mean),
                &fmt_opt(g.std),
                if g.excluded { "true" } else { "false" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
