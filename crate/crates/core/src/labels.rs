//! Per-image binary attribute labels and optional model predictions.
//!
//! Both label and prediction files are CSV with `image_id` as the first
//! column and one column per attribute. Label cells must be 0 or 1;
//! prediction cells are real-valued scores in `[0, 1]`.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    image_ids: Vec<String>,
    attributes: Vec<String>,
    /// `truth[attr][image]`
    truth: Vec<Vec<bool>>,
    scores: Vec<Option<Vec<f64>>>,
    predicted: Vec<Option<Vec<bool>>>,
    image_index: HashMap<String, usize>,
    attr_index: HashMap<String, usize>,
}

/// Which labels a statistic is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelSource {
    #[default]
    GroundTruth,
    Predicted,
}

/// Real-valued prediction scores sharing the label CSV schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub image_ids: Vec<String>,
    pub attributes: Vec<String>,
    /// `scores[attr][image]`
    pub scores: Vec<Vec<f64>>,
}

fn index_of(items: &[String]) -> HashMap<String, usize> {
    items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()
}

impl LabelTable {
    /// Builds a table from per-attribute ground-truth columns.
    pub fn new(
        image_ids: Vec<String>,
        attributes: Vec<String>,
        truth: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let image_index = index_of(&image_ids);
        if image_index.len() != image_ids.len() {
            let mut seen = std::collections::HashSet::new();
            let dup = image_ids.iter().find(|id| !seen.insert(*id)).unwrap();
            return Err(Error::DuplicateImageId(dup.clone()));
        }
        let attr_index = index_of(&attributes);
        if attr_index.len() != attributes.len() {
            return Err(Error::MissingColumn("duplicate attribute column".into()));
        }
        if truth.len() != attributes.len() || truth.iter().any(|c| c.len() != image_ids.len()) {
            return Err(Error::LengthMismatch(
                truth.len(),
                attributes.len(),
            ));
        }
        let n_attr = attributes.len();
        Ok(Self {
            image_ids,
            attributes,
            truth,
            scores: vec![None; n_attr],
            predicted: vec![None; n_attr],
            image_index,
            attr_index,
        })
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }

    pub fn image_position(&self, image_id: &str) -> Option<usize> {
        self.image_index.get(image_id).copied()
    }

    pub fn has_attribute(&self, attribute: &str) -> bool {
        self.attr_index.contains_key(attribute)
    }

    fn attr(&self, attribute: &str) -> Result<usize> {
        self.attr_index
            .get(attribute)
            .copied()
            .ok_or_else(|| Error::UnknownAttribute(attribute.to_owned()))
    }

    pub fn truth(&self, attribute: &str) -> Result<&[bool]> {
        Ok(&self.truth[self.attr(attribute)?])
    }

    pub fn scores(&self, attribute: &str) -> Result<Option<&[f64]>> {
        Ok(self.scores[self.attr(attribute)?].as_deref())
    }

    pub fn predicted(&self, attribute: &str) -> Result<&[bool]> {
        self.predicted[self.attr(attribute)?]
            .as_deref()
            .ok_or_else(|| Error::MissingPredictions(attribute.to_owned()))
    }

    pub fn labels(&self, attribute: &str, source: LabelSource) -> Result<&[bool]> {
        match source {
            LabelSource::GroundTruth => self.truth(attribute),
            LabelSource::Predicted => self.predicted(attribute),
        }
    }

    pub fn has_predictions(&self, attribute: &str) -> bool {
        self.attr_index
            .get(attribute)
            .is_some_and(|&a| self.predicted[a].is_some())
    }

    pub fn positive_count(&self, attribute: &str) -> Result<usize> {
        Ok(self.truth(attribute)?.iter().filter(|&&b| b).count())
    }

    /// Attaches prediction scores. Every labelled image must have a score for
    /// each predicted attribute; attributes absent from the labels are ignored.
    /// Predicted labels are `score >= 0.5`.
    pub fn attach_predictions(&mut self, preds: &PredictionTable) -> Result<()> {
        let pred_pos = index_of(&preds.image_ids);
        for (pa, attribute) in preds.attributes.iter().enumerate() {
            let Some(&a) = self.attr_index.get(attribute) else {
                continue;
            };
            let mut scores = Vec::with_capacity(self.image_ids.len());
            for id in &self.image_ids {
                let &row = pred_pos
                    .get(id)
                    .ok_or_else(|| Error::UnknownImage(format!("{id} has no prediction row")))?;
                scores.push(preds.scores[pa][row]);
            }
            self.predicted[a] = Some(scores.iter().map(|&s| s >= 0.5).collect());
            self.scores[a] = Some(scores);
        }
        Ok(())
    }

    /// Overrides predicted labels for one attribute directly.
    pub fn set_predicted_labels(&mut self, attribute: &str, labels: Vec<bool>) -> Result<()> {
        let a = self.attr(attribute)?;
        if labels.len() != self.image_ids.len() {
            return Err(Error::LengthMismatch(labels.len(), self.image_ids.len()));
        }
        self.predicted[a] = Some(labels);
        Ok(())
    }

    /// Rows at the given positions, in the given order, ground truth only.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&r| self.image_ids[r].clone()).collect();
        let truth = self
            .truth
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        Self::new(ids, self.attributes.clone(), truth)
    }

    /// Writes the ground-truth labels in the CSV schema `read_labels` accepts.
    pub fn write_csv<W: Write>(&self, dest: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(dest);
        let mut header = vec!["image_id"];
        header.extend(self.attributes.iter().map(String::as_str));
        w.write_record(&header)?;
        for (i, id) in self.image_ids.iter().enumerate() {
            let mut row = vec![id.as_str()];
            row.extend(self.truth.iter().map(|c| if c[i] { "1" } else { "0" }));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct RawTable {
    image_ids: Vec<String>,
    attributes: Vec<String>,
    /// `cells[attr][image]`
    cells: Vec<Vec<String>>,
}

fn read_raw<R: Read>(source: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("image_id") {
        return Err(Error::MissingColumn("image_id".into()));
    }
    let attributes: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    if attributes.is_empty() {
        return Err(Error::MissingColumn("no attribute columns".into()));
    }
    let mut image_ids = Vec::new();
    let mut cells = vec![Vec::new(); attributes.len()];
    for row in rdr.records() {
        let row = row?;
        image_ids.push(row[0].to_owned());
        for (a, cell) in row.iter().skip(1).enumerate() {
            cells[a].push(cell.to_owned());
        }
    }
    Ok(RawTable {
        image_ids,
        attributes,
        cells,
    })
}

pub fn read_labels<R: Read>(source: R) -> Result<LabelTable> {
    let raw = read_raw(source)?;
    let mut truth = Vec::with_capacity(raw.attributes.len());
    for (attribute, col) in raw.attributes.iter().zip(&raw.cells) {
        let parsed = col
            .iter()
            .zip(&raw.image_ids)
            .map(|(cell, id)| match cell.parse::<f64>() {
                Ok(0.0) => Ok(false),
                Ok(1.0) => Ok(true),
                _ => Err(Error::NonBinaryLabel {
                    image: id.clone(),
                    attribute: attribute.clone(),
                    value: cell.clone(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        truth.push(parsed);
    }
    LabelTable::new(raw.image_ids, raw.attributes, truth)
}

pub fn read_predictions<R: Read>(source: R) -> Result<PredictionTable> {
    let raw = read_raw(source)?;
    if index_of(&raw.image_ids).len() != raw.image_ids.len() {
        let mut seen = std::collections::HashSet::new();
        let dup = raw.image_ids.iter().find(|id| !seen.insert(*id)).unwrap();
        return Err(Error::DuplicateImageId(dup.clone()));
    }
    let mut scores = Vec::with_capacity(raw.attributes.len());
    for (attribute, col) in raw.attributes.iter().zip(&raw.cells) {
        let parsed = col
            .iter()
            .zip(&raw.image_ids)
            .map(|(cell, id)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::InvalidScore {
                    image: id.clone(),
                    attribute: attribute.clone(),
                    value: cell.clone(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        scores.push(parsed);
    }
    Ok(PredictionTable {
        image_ids: raw.image_ids,
        attributes: raw.attributes,
        scores,
    })
}
