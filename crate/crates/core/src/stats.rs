//! Label and prediction statistics: MCC, worst-group accuracy, average
//! precision (plain and normalized) and Kendall's tau-b.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{is_excluded, GroupKey};
use crate::labels::{LabelSource, LabelTable};
use crate::sum::CompensatedSum;

/// 2x2 contingency table of two binary variables A and B. `n10` counts
/// A = 1, B = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ConfusionCounts {
    pub const fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Self {
        Self { n11, n10, n01, n00 }
    }

    pub fn from_labels(a: &[bool], b: &[bool]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch(a.len(), b.len()));
        }
        let mut c = Self::default();
        for (&x, &y) in a.iter().zip(b) {
            match (x, y) {
                (true, true) => c.n11 += 1,
                (true, false) => c.n10 += 1,
                (false, true) => c.n01 += 1,
                (false, false) => c.n00 += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// Counts in `[n11, n10, n01, n00]` order.
    pub fn as_array(&self) -> [u64; 4] {
        [self.n11, self.n10, self.n01, self.n00]
    }

    pub fn from_array(a: [u64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_f64(&self) -> [f64; 4] {
        self.as_array().map(|v| v as f64)
    }

    pub fn count(&self, key: GroupKey) -> u64 {
        self.as_array()[key.index()]
    }
}

/// Matthews correlation coefficient of a contingency table.
pub fn mcc(c: &ConfusionCounts) -> Result<f64> {
    mcc_real(c.as_f64())
}

/// MCC on real-valued (possibly fractional) cell sizes `[n11, n10, n01, n00]`.
pub fn mcc_real(n: [f64; 4]) -> Result<f64> {
    let [n11, n10, n01, n00] = n;
    let marginals = [n11 + n10, n01 + n00, n11 + n01, n10 + n00];
    if marginals.iter().any(|&m| m <= 0.0) {
        return Err(Error::UndefinedMcc);
    }
    let den = (marginals[0] * marginals[1] * marginals[2] * marginals[3]).sqrt();
    Ok(((n11 * n00 - n10 * n01) / den).clamp(-1.0, 1.0))
}

/// MCC between attributes `a` and `b` of a label table.
pub fn mcc_labels(labels: &LabelTable, a: &str, b: &str, source: LabelSource) -> Result<f64> {
    let counts = ConfusionCounts::from_labels(labels.labels(a, source)?, labels.labels(b, source)?)?;
    mcc(&counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub group: GroupKey,
    pub n: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstGroup {
    pub wga: f64,
    pub worst: GroupKey,
    pub groups: Vec<GroupAccuracy>,
}

/// Worst-group accuracy from raw columns. Groups come from the ground-truth
/// target and protected labels; accuracy compares `predicted` to the target.
pub fn worst_group_accuracy_from(
    target: &[bool],
    protected: &[bool],
    predicted: &[bool],
    threshold: f64,
) -> Result<WorstGroup> {
    if target.len() != protected.len() {
        return Err(Error::LengthMismatch(target.len(), protected.len()));
    }
    if target.len() != predicted.len() {
        return Err(Error::LengthMismatch(target.len(), predicted.len()));
    }
    let total = target.len();
    let mut n = [0usize; 4];
    let mut correct = [0usize; 4];
    for ((&t, &p), &y) in target.iter().zip(protected).zip(predicted) {
        let g = GroupKey::new(t, p).index();
        n[g] += 1;
        correct[g] += (t == y) as usize;
    }
    let groups: Vec<GroupAccuracy> = GroupKey::ALL
        .iter()
        .map(|&group| {
            let i = group.index();
            GroupAccuracy {
                group,
                n: n[i],
                correct: correct[i],
                accuracy: (n[i] > 0).then(|| correct[i] as f64 / n[i] as f64),
                excluded: n[i] == 0 || is_excluded(n[i], total, threshold),
            }
        })
        .collect();
    let (worst, wga) = groups
        .iter()
        .filter(|g| !g.excluded)
        .filter_map(|g| g.accuracy.map(|a| (g.group, a)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::AllGroupsExcluded)?;
    Ok(WorstGroup { wga, worst, groups })
}

pub fn worst_group_accuracy(
    labels: &LabelTable,
    target: &str,
    protected: &str,
    threshold: f64,
) -> Result<WorstGroup> {
    worst_group_accuracy_from(
        labels.truth(target)?,
        labels.truth(protected)?,
        labels.predicted(target)?,
        threshold,
    )
}

fn ranking(scores: &[f64], labels: &[bool]) -> Result<(Vec<usize>, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::DegenerateInput("non-finite score"));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: ties keep input order
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    Ok((order, positives))
}

/// Step-interpolated average precision: mean precision at each positive hit,
/// ranking by descending score with ties in input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (order, positives) = ranking(scores, labels)?;
    let mut acc = CompensatedSum::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for i in order {
        if labels[i] {
            tp += 1;
            acc.add(tp as f64 / (tp + fp) as f64);
        } else {
            fp += 1;
        }
    }
    Ok(acc.value() / positives as f64)
}

/// Normalized average precision: precision at each hit is recomputed as if the
/// class had `n_ref` positives, `R*n_ref / (R*n_ref + FP)`. With
/// `n_ref == positives` this is exactly [`average_precision`].
pub fn normalized_average_precision(scores: &[f64], labels: &[bool], n_ref: f64) -> Result<f64> {
    if !(n_ref.is_finite() && n_ref > 0.0) {
        return Err(Error::DegenerateInput("n_ref must be positive"));
    }
    let (order, positives) = ranking(scores, labels)?;
    let positives_f = positives as f64;
    let mut acc = CompensatedSum::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for i in order {
        if labels[i] {
            tp += 1;
            let scaled_tp = tp as f64 * n_ref / positives_f;
            acc.add(scaled_tp / (scaled_tp + fp as f64));
        } else {
            fp += 1;
        }
    }
    Ok(acc.value() / positives_f)
}

/// Reference positive count used when none is given: the mean positive count
/// over the attributes of a batch.
pub fn default_n_ref(positive_counts: &[usize]) -> Option<f64> {
    if positive_counts.is_empty() {
        return None;
    }
    Some(positive_counts.iter().sum::<usize>() as f64 / positive_counts.len() as f64)
}

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateInput("need at least two observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value"));
    }
    let cmp = |a: f64, b: f64| a.partial_cmp(&b).unwrap();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp(x[a], x[b]).then(cmp(y[a], y[b])));

    let x_ties = tie_pairs(&order, |a, b| x[a] == x[b]);
    let joint_ties = tie_pairs(&order, |a, b| x[a] == x[b] && y[a] == y[b]);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut scratch = vec![0.0; n];
    let discordant = count_inversions(&mut ys, &mut scratch);
    let sorted_idx: Vec<usize> = (0..n).collect();
    let y_ties = tie_pairs(&sorted_idx, |a, b| ys[a] == ys[b]);

    let pairs = (n as u64) * (n as u64 - 1) / 2;
    if x_ties == pairs || y_ties == pairs {
        return Err(Error::DegenerateInput("a variable is constant"));
    }
    let numerator = pairs as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64
        - 2.0 * discordant as f64;
    let denominator = ((pairs - x_ties) as f64 * (pairs - y_ties) as f64).sqrt();
    Ok((numerator / denominator).clamp(-1.0, 1.0))
}

/// Sum of `t*(t-1)/2` over runs of adjacent equal items.
fn tie_pairs(order: &[usize], same: impl Fn(usize, usize) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in order.windows(2) {
        if same(w[0], w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` ascending and returns the number of strictly inverted pairs.
fn count_inversions(v: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (left, right) = v.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        count_inversions(left, sl) + count_inversions(right, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            scratch[k] = v[i];
            i += 1;
        } else {
            scratch[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&scratch[..n]);
    inv
}
