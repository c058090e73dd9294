//! Subgroup subsampling plans.
//!
//! Given the four subgroup sizes of a (target, protected) label cross, find
//! sizes that realize a requested MCC while staying as close as possible (L2)
//! to the originals, never exceeding them:
//!
//! ```text
//! minimize   |n - n0|_2
//! subject to mcc(n) = target,  0 <= n <= n0,  [sum(n) = cap]
//! ```
//!
//! Solved by an augmented Lagrangian whose inner problem is a box-projected
//! gradient method with Barzilai-Borwein steps, followed by a Gauss-Newton
//! feasibility polish. Several deterministic starts are tried and the best
//! feasible point wins.
//!
//! MCC is non-decreasing in `n11`, `n00` and non-increasing in `n10`, `n01`,
//! so its range over the box is spanned by the corners `(n11, 0, 0, n00)` and
//! `(0, n10, n01, 0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupKey;
use crate::labels::LabelTable;
use crate::stats::{mcc, mcc_real, ConfusionCounts};

/// Feasibility tolerance on the continuous plan's MCC.
pub const MCC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsamplePlan {
    pub original: ConfusionCounts,
    pub target_mcc: f64,
    /// Continuous solution, `[n11, n10, n01, n00]`.
    pub planned: [f64; 4],
    pub rounded: ConfusionCounts,
    /// MCC of the rounded counts.
    pub achieved_mcc: f64,
    /// L2 distance of the rounded counts to the original.
    pub l2_distance: f64,
    /// Total of the rounded counts.
    pub total: u64,
    pub total_cap: Option<u64>,
}

/// Flat serialized form of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub target_mcc: f64,
    pub planned: [f64; 4],
    pub rounded: [u64; 4],
    pub achieved_mcc: f64,
    pub l2_distance: f64,
    pub total: u64,
}

impl SubsamplePlan {
    pub fn row(&self) -> PlanRow {
        PlanRow {
            target_mcc: self.target_mcc,
            planned: self.planned,
            rounded: self.rounded.as_array(),
            achieved_mcc: self.achieved_mcc,
            l2_distance: self.l2_distance,
            total: self.total,
        }
    }

    pub fn planned_distance(&self) -> f64 {
        distance(&self.planned, &self.original.as_f64())
    }
}

fn distance(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Range of MCC values reachable inside the box `0 <= n <= original`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attainable {
    pub lo: f64,
    pub hi: f64,
    pub lo_attained: bool,
    pub hi_attained: bool,
}

impl Attainable {
    pub fn contains(&self, t: f64) -> bool {
        (t > self.lo || (self.lo_attained && t == self.lo))
            && (t < self.hi || (self.hi_attained && t == self.hi))
    }
}

/// Corner value, or its limit from inside the box when the corner itself has
/// an empty marginal.
fn corner_value(corner: [f64; 4], original: [f64; 4]) -> (f64, bool) {
    if let Ok(v) = mcc_real(corner) {
        return (v, true);
    }
    let eps = 1e-12;
    let nudged = std::array::from_fn(|i| corner[i] + eps * (original[i] - corner[i]));
    (mcc_real(nudged).unwrap_or(0.0), false)
}

pub fn attainable_interval(original: &ConfusionCounts) -> Result<Attainable> {
    let n0 = original.as_f64();
    mcc_real(n0)?;
    let (hi, hi_attained) = corner_value([n0[0], 0.0, 0.0, n0[3]], n0);
    let (lo, lo_attained) = corner_value([0.0, n0[1], n0[2], 0.0], n0);
    Ok(Attainable {
        lo,
        hi,
        lo_attained,
        hi_attained,
    })
}

/// MCC value and gradient; `None` where a marginal vanishes.
fn mcc_grad(y: &[f64; 4]) -> Option<(f64, [f64; 4])> {
    let [a, b, c, d] = *y;
    let (r1, r0, c1, c0) = (a + b, c + d, a + c, b + d);
    if r1 <= 0.0 || r0 <= 0.0 || c1 <= 0.0 || c0 <= 0.0 {
        return None;
    }
    let s = (r1 * r0).sqrt() * (c1 * c0).sqrt();
    let phi = (a * d - b * c) / s;
    let h = 0.5 * phi;
    Some((
        phi,
        [
            d / s - h * (1.0 / r1 + 1.0 / c1),
            -c / s - h * (1.0 / r1 + 1.0 / c0),
            -b / s - h * (1.0 / r0 + 1.0 / c1),
            a / s - h * (1.0 / r0 + 1.0 / c0),
        ],
    ))
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Problem in scaled units (counts divided by the largest original count).
struct Scaled {
    lower: [f64; 4],
    upper: [f64; 4],
    target: f64,
    cap: Option<f64>,
}

struct Eval {
    value: f64,
    grad: [f64; 4],
}

impl Scaled {
    fn project(&self, y: [f64; 4]) -> [f64; 4] {
        std::array::from_fn(|i| y[i].clamp(self.lower[i], self.upper[i]))
    }

    fn residuals(&self, y: &[f64; 4]) -> Option<(f64, f64)> {
        let (phi, _) = mcc_grad(y)?;
        let cap = self.cap.map_or(0.0, |c| y.iter().sum::<f64>() - c);
        Some((phi - self.target, cap))
    }

    fn lagrangian(&self, y: &[f64; 4], mult: (f64, f64), rho: f64) -> Option<Eval> {
        let (phi, dphi) = mcc_grad(y)?;
        let c1 = phi - self.target;
        let c2 = self.cap.map_or(0.0, |c| y.iter().sum::<f64>() - c);
        let w1 = mult.0 + rho * c1;
        let w2 = if self.cap.is_some() { mult.1 + rho * c2 } else { 0.0 };
        let mut value = mult.0 * c1 + mult.1 * c2 + 0.5 * rho * (c1 * c1 + c2 * c2);
        let mut grad = [0.0; 4];
        for i in 0..4 {
            let r = y[i] - self.upper[i];
            value += 0.5 * r * r;
            grad[i] = r + w1 * dphi[i] + w2;
        }
        Some(Eval { value, grad })
    }

    /// Box-projected gradient descent on the augmented Lagrangian.
    fn inner(&self, mut y: [f64; 4], mult: (f64, f64), rho: f64) -> [f64; 4] {
        let Some(mut cur) = self.lagrangian(&y, mult, rho) else {
            return y;
        };
        let mut step = 1.0 / (1.0 + rho);
        for _ in 0..4000 {
            let mut t = step;
            let (next_y, next) = loop {
                let cand = self.project(std::array::from_fn(|i| y[i] - t * cur.grad[i]));
                let delta: [f64; 4] = std::array::from_fn(|i| cand[i] - y[i]);
                if let Some(e) = self.lagrangian(&cand, mult, rho) {
                    if e.value <= cur.value + 1e-4 * dot(&cur.grad, &delta) {
                        break (cand, e);
                    }
                }
                t *= 0.5;
                if t < 1e-20 {
                    return y;
                }
            };
            let s: [f64; 4] = std::array::from_fn(|i| next_y[i] - y[i]);
            let gd: [f64; 4] = std::array::from_fn(|i| next.grad[i] - cur.grad[i]);
            y = next_y;
            cur = next;
            if s.iter().all(|v| v.abs() < 1e-15) {
                break;
            }
            let pg = self.project(std::array::from_fn(|i| y[i] - cur.grad[i]));
            if pg.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-13) {
                break;
            }
            let sy = dot(&s, &gd);
            step = if sy > 0.0 {
                (dot(&s, &s) / sy).clamp(1e-12, 1e6)
            } else {
                1.0 / (1.0 + rho)
            };
        }
        y
    }

    fn augmented_lagrangian(&self, start: [f64; 4]) -> [f64; 4] {
        let mut y = self.project(start);
        let mut mult = (0.0, 0.0);
        let mut rho = 1000.0;
        let mut last_violation = f64::INFINITY;
        for _ in 0..60 {
            y = self.inner(y, mult, rho);
            let Some((c1, c2)) = self.residuals(&y) else {
                break;
            };
            let violation = c1.abs().max(c2.abs());
            if violation < 1e-13 {
                break;
            }
            mult.0 += rho * c1;
            mult.1 += rho * c2;
            if violation > 0.25 * last_violation {
                rho = (rho * 10.0).min(1e10);
            }
            last_violation = violation;
        }
        y
    }

    /// Gauss-Newton projection onto the equality constraints using only
    /// coordinates strictly inside the box.
    fn polish(&self, mut y: [f64; 4]) -> Option<[f64; 4]> {
        for _ in 0..100 {
            let (phi, dphi) = mcc_grad(&y)?;
            let c1 = phi - self.target;
            let c2 = self.cap.map_or(0.0, |c| y.iter().sum::<f64>() - c);
            if c1.abs() <= 1e-14 && c2.abs() <= 1e-14 {
                return Some(y);
            }
            let free: [f64; 4] = std::array::from_fn(|i| {
                let inside = y[i] > self.lower[i] && y[i] < self.upper[i];
                // a coordinate on a bound may still move inward
                let inward = (y[i] <= self.lower[i] && c1 * dphi[i] < 0.0)
                    || (y[i] >= self.upper[i] && c1 * dphi[i] > 0.0);
                if inside || inward {
                    1.0
                } else {
                    0.0
                }
            });
            let g: [f64; 4] = std::array::from_fn(|i| dphi[i] * free[i]);
            let delta: [f64; 4] = if self.cap.is_some() {
                // min-norm solve of [g; free] d = [c1; c2]
                let (a11, a12, a22) = (dot(&g, &g), dot(&g, &free), dot(&free, &free));
                let det = a11 * a22 - a12 * a12;
                if det.abs() <= 1e-14 * a11.max(1e-300) * a22.max(1e-300) {
                    return None;
                }
                let m1 = (a22 * c1 - a12 * c2) / det;
                let m2 = (a11 * c2 - a12 * c1) / det;
                std::array::from_fn(|i| m1 * g[i] + m2 * free[i])
            } else {
                let gg = dot(&g, &g);
                if gg <= 0.0 {
                    return None;
                }
                std::array::from_fn(|i| c1 / gg * g[i])
            };
            let next = self.project(std::array::from_fn(|i| y[i] - delta[i]));
            if next == y {
                return None;
            }
            y = next;
        }
        let (c1, c2) = self.residuals(&y)?;
        (c1.abs() <= MCC_TOLERANCE && c2.abs() <= 1e-12).then_some(y)
    }

    fn feasible(&self, y: &[f64; 4]) -> bool {
        match self.residuals(y) {
            Some((c1, c2)) => c1.abs() <= MCC_TOLERANCE && c2.abs() <= 1e-12,
            None => false,
        }
    }

    fn scale_to_cap(&self, y: [f64; 4]) -> [f64; 4] {
        match self.cap {
            Some(c) => {
                let total: f64 = y.iter().sum();
                if total > 0.0 {
                    self.project(y.map(|v| v * c / total))
                } else {
                    y
                }
            }
            None => y,
        }
    }

    /// Feasible local optima from every start, nearest to the original first.
    fn solve(&self, warm: [f64; 4]) -> Vec<[f64; 4]> {
        let mut found: Vec<([f64; 4], f64)> = self
            .starts(warm)
            .into_iter()
            .filter_map(|start| self.polish(self.augmented_lagrangian(start)))
            .filter(|y| self.feasible(y))
            .map(|y| (y, distance(&y, &self.upper)))
            .collect();
        found.sort_by(|a, b| a.1.total_cmp(&b.1));
        found.into_iter().map(|(y, _)| y).collect()
    }

    /// Warm start, four deterministic perturbations of it, and the warm start
    /// pushed onto each face of the box (optima often sit on a face).
    fn starts(&self, warm: [f64; 4]) -> Vec<[f64; 4]> {
        let (l, u) = (self.lower, self.upper);
        let mid = |a: [f64; 4], b: [f64; 4]| -> [f64; 4] { std::array::from_fn(|i| 0.5 * (a[i] + b[i])) };
        let w = self.project(warm);
        let mut starts = vec![
            w,
            mid(w, [u[0], l[1], l[2], u[3]]),
            mid(w, [l[0], u[1], u[2], l[3]]),
            mid(w, u),
            mid(w, l),
        ];
        for i in 0..4 {
            for bound in [l[i], u[i]] {
                let mut s = w;
                s[i] = bound;
                starts.push(s);
            }
        }
        starts
            .into_iter()
            .map(|s| self.scale_to_cap(s))
            .collect()
    }
}

/// Solves for subgroup sizes with the requested MCC and returns the rounded
/// plan. `warm_start` is in counts, `[n11, n10, n01, n00]`.
pub fn solve_subgroups(
    original: &ConfusionCounts,
    target_mcc: f64,
    warm_start: Option<[f64; 4]>,
    total_cap: Option<u64>,
) -> Result<SubsamplePlan> {
    let range = attainable_interval(original)?;
    if !target_mcc.is_finite() || !range.contains(target_mcc) {
        return Err(Error::UnattainableTarget {
            target: target_mcc,
            lo: range.lo,
            hi: range.hi,
        });
    }
    let n0 = original.as_f64();
    let original_total = original.total();
    let infeasible_cap = |cap: u64| Error::InfeasibleCap {
        cap: cap as f64,
        target: target_mcc,
    };
    if let Some(cap) = total_cap {
        if cap == 0 || cap > original_total {
            return Err(infeasible_cap(cap));
        }
    }

    let cap_is_original = total_cap.is_none_or(|c| c == original_total);
    if cap_is_original && mcc(original)? == target_mcc {
        return round_plan(&SubsamplePlan {
            original: *original,
            target_mcc,
            planned: n0,
            rounded: *original,
            achieved_mcc: target_mcc,
            l2_distance: 0.0,
            total: original_total,
            total_cap,
        });
    }

    let scale = n0.iter().copied().fold(1.0, f64::max);
    let warm = warm_start.unwrap_or(n0).map(|v| v / scale);
    let blank = SubsamplePlan {
        original: *original,
        target_mcc,
        planned: n0,
        rounded: ConfusionCounts::default(),
        achieved_mcc: f64::NAN,
        l2_distance: f64::NAN,
        total: 0,
        total_cap,
    };
    // A continuous optimum next to an empty marginal can have no floor/ceil
    // rounding with a defined MCC. If that happens, solve again keeping some
    // nonempty subgroups at one image or more: fewest raised subgroups first,
    // best rounding within a level.
    for level in 0..=4u32 {
        let mut best: Option<SubsamplePlan> = None;
        for raised in (0..16u32).filter(|m| m.count_ones() == level) {
            let lower: [f64; 4] =
                std::array::from_fn(|i| if raised & (1 << i) != 0 { n0[i].min(1.0) / scale } else { 0.0 });
            if level > 0 && lower.iter().all(|&v| v == 0.0) {
                continue;
            }
            let problem = Scaled {
                lower,
                upper: n0.map(|v| v / scale),
                target: target_mcc,
                cap: total_cap.map(|c| c as f64 / scale),
            };
            let rounded = problem.solve(warm).into_iter().find_map(|y| {
                let planned = std::array::from_fn(|i| (y[i] * scale).clamp(0.0, n0[i]));
                round_plan(&SubsamplePlan { planned, ..blank.clone() }).ok()
            });
            if let Some(plan) = rounded {
                if best.as_ref().is_none_or(|b| rounding_key(&plan) < rounding_key(b)) {
                    best = Some(plan);
                }
            }
        }
        if let Some(plan) = best {
            return Ok(plan);
        }
    }
    Err(match total_cap {
        Some(cap) => infeasible_cap(cap),
        None => Error::UnattainableTarget {
            target: target_mcc,
            lo: range.lo,
            hi: range.hi,
        },
    })
}

/// Order used to compare rounded plans: MCC deviation, then distance.
fn rounding_key(plan: &SubsamplePlan) -> (f64, f64) {
    ((plan.achieved_mcc - plan.target_mcc).abs(), plan.l2_distance)
}

/// Picks integer counts among the 16 floor/ceil combinations of the planned
/// counts: closest MCC to the target first, then closest to the original.
/// With a total cap only combinations summing to the cap qualify.
pub fn round_plan(plan: &SubsamplePlan) -> Result<SubsamplePlan> {
    let original = plan.original.as_array();
    let bounds: [(u64, u64); 4] = std::array::from_fn(|i| {
        let v = plan.planned[i].clamp(0.0, original[i] as f64);
        (v.floor() as u64, (v.ceil() as u64).min(original[i]))
    });
    let n0 = plan.original.as_f64();
    let mut best: Option<(f64, f64, [u64; 4])> = None;
    for mask in 0..16u32 {
        let cand: [u64; 4] = std::array::from_fn(|i| {
            if mask & (1 << i) != 0 {
                bounds[i].1
            } else {
                bounds[i].0
            }
        });
        if let Some(cap) = plan.total_cap {
            if cand.iter().sum::<u64>() != cap {
                continue;
            }
        }
        let Ok(m) = mcc(&ConfusionCounts::from_array(cand)) else {
            continue;
        };
        let dev = (m - plan.target_mcc).abs();
        let dist = distance(&cand.map(|v| v as f64), &n0);
        let better = match &best {
            None => true,
            Some((bdev, bdist, _)) => {
                dev < bdev - 1e-12 || ((dev - bdev).abs() <= 1e-12 && dist < *bdist)
            }
        };
        if better {
            best = Some((dev, dist, cand));
        }
    }
    let (_, dist, cand) = best.ok_or(Error::InfeasibleCap {
        cap: plan.total_cap.unwrap_or(0) as f64,
        target: plan.target_mcc,
    })?;
    let rounded = ConfusionCounts::from_array(cand);
    Ok(SubsamplePlan {
        rounded,
        achieved_mcc: mcc(&rounded)?,
        l2_distance: dist,
        total: rounded.total(),
        ..plan.clone()
    })
}

/// Solves every target twice. Pass 1 runs in order, each solve warm-started
/// from the previous plan (the first from the original sizes). Pass 2 re-solves
/// all targets with the total capped at the smallest pass-1 total, so every
/// plan has the same size.
pub fn sweep(original: &ConfusionCounts, targets: &[f64]) -> Result<Vec<SubsamplePlan>> {
    let mut first_pass = Vec::with_capacity(targets.len());
    let mut warm = original.as_f64();
    for &t in targets {
        let plan = solve_subgroups(original, t, Some(warm), None)?;
        warm = plan.planned;
        first_pass.push(plan);
    }
    let Some(cap) = first_pass
        .iter()
        .map(|p| (p.planned.iter().sum::<f64>() + 1e-9).floor() as u64)
        .min()
    else {
        return Ok(first_pass);
    };
    first_pass
        .par_iter()
        .map(|p| {
            let total: f64 = p.planned.iter().sum();
            let warm = p.planned.map(|v| v * cap as f64 / total);
            solve_subgroups(original, p.target_mcc, Some(warm), Some(cap))
        })
        .collect()
}

/// Subgroup sizes of two ground-truth attributes; `target` is the first index.
pub fn original_counts(labels: &LabelTable, target: &str, protected: &str) -> Result<ConfusionCounts> {
    ConfusionCounts::from_labels(labels.truth(target)?, labels.truth(protected)?)
}

/// Row positions realizing a plan: the first `rounded` images of each
/// subgroup in table order, returned in table order.
pub fn apply_plan(
    labels: &LabelTable,
    target: &str,
    protected: &str,
    plan: &SubsamplePlan,
) -> Result<Vec<usize>> {
    let t = labels.truth(target)?;
    let p = labels.truth(protected)?;
    let quota = plan.rounded.as_array();
    let mut taken = [0u64; 4];
    let rows: Vec<usize> = (0..labels.len())
        .filter(|&i| {
            let g = GroupKey::new(t[i], p[i]).index();
            if taken[g] < quota[g] {
                taken[g] += 1;
                true
            } else {
                false
            }
        })
        .collect();
    if taken != quota {
        return Err(Error::LengthMismatch(
            taken.iter().sum::<u64>() as usize,
            quota.iter().sum::<u64>() as usize,
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(a: [u64; 4]) -> ConfusionCounts {
        ConfusionCounts::from_array(a)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for y in [[3.0, 1.0, 2.0, 5.0], [0.2, 0.7, 0.1, 0.4], [10.0, 0.5, 0.5, 10.0]] {
            let (_, g) = mcc_grad(&y).unwrap();
            for i in 0..4 {
                let h = 1e-6;
                let mut up = y;
                let mut dn = y;
                up[i] += h;
                dn[i] -= h;
                let fd = (mcc_real(up).unwrap() - mcc_real(dn).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7, "{y:?} {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn monotone_in_each_cell() {
        // sign pattern of the gradient: +, -, -, +
        for y in [[3.0, 1.0, 2.0, 5.0], [1.0, 9.0, 8.0, 0.5], [4.0, 4.0, 4.0, 4.0]] {
            let (_, g) = mcc_grad(&y).unwrap();
            assert!(g[0] >= 0.0 && g[1] <= 0.0 && g[2] <= 0.0 && g[3] >= 0.0);
        }
    }

    #[test]
    fn target_equal_to_original() {
        let o = counts([12, 7, 3, 20]);
        let t = mcc(&o).unwrap();
        let p = solve_subgroups(&o, t, None, None).unwrap();
        assert_eq!(p.planned, o.as_f64());
        assert_eq!(p.rounded, o);
        assert_eq!(p.l2_distance, 0.0);
        assert_eq!(p.achieved_mcc, t);
    }

    #[test]
    fn perfect_correlation_targets() {
        let o = counts([10, 10, 10, 10]);
        let p = solve_subgroups(&o, 1.0, None, None).unwrap();
        assert_eq!(p.rounded, counts([10, 0, 0, 10]));
        assert!((p.l2_distance - 200f64.sqrt()).abs() < 1e-12);
        assert!((p.planned_distance() - 200f64.sqrt()).abs() < 1e-6);
        let p = solve_subgroups(&o, -1.0, None, None).unwrap();
        assert_eq!(p.rounded, counts([0, 10, 10, 0]));
    }

    #[test]
    fn unattainable_targets() {
        let o = counts([10, 10, 10, 10]);
        assert!(matches!(
            solve_subgroups(&o, 1.5, None, None),
            Err(Error::UnattainableTarget { .. })
        ));
        // no (1,1) or (0,0) images: mcc <= 0 and 0 itself needs an empty row
        let o = counts([0, 10, 10, 0]);
        let r = attainable_interval(&o).unwrap();
        assert_eq!(r.lo, -1.0);
        assert!(!r.hi_attained);
        assert!(matches!(
            solve_subgroups(&o, 0.2, None, None),
            Err(Error::UnattainableTarget { .. })
        ));
    }

    #[test]
    fn infeasible_caps() {
        let o = counts([10, 10, 10, 10]);
        assert!(matches!(
            solve_subgroups(&o, 0.5, None, Some(41)),
            Err(Error::InfeasibleCap { .. })
        ));
        // mcc 1 leaves at most 20 images
        assert!(matches!(
            solve_subgroups(&o, 1.0, None, Some(30)),
            Err(Error::InfeasibleCap { .. })
        ));
    }

    #[test]
    fn capped_solution_hits_total() {
        let o = counts([30, 12, 9, 25]);
        let p = solve_subgroups(&o, 0.6, None, Some(50)).unwrap();
        assert!((p.planned.iter().sum::<f64>() - 50.0).abs() < 1e-9);
        assert_eq!(p.total, 50);
        assert!((mcc_real(p.planned).unwrap() - 0.6).abs() <= MCC_TOLERANCE);
    }

    #[test]
    fn rounding_enumerates_combinations() {
        let plan = SubsamplePlan {
            original: counts([10, 10, 10, 10]),
            target_mcc: 1.0,
            planned: [9.6, 0.2, 0.2, 9.6],
            rounded: ConfusionCounts::default(),
            achieved_mcc: f64::NAN,
            l2_distance: f64::NAN,
            total: 0,
            total_cap: None,
        };
        let r = round_plan(&plan).unwrap();
        assert_eq!(r.rounded, counts([10, 0, 0, 10]));
        assert_eq!(r.achieved_mcc, 1.0);
        // integral plans are kept
        let int = SubsamplePlan {
            planned: [7.0, 3.0, 2.0, 9.0],
            target_mcc: 0.3,
            ..plan
        };
        assert_eq!(round_plan(&int).unwrap().rounded, counts([7, 3, 2, 9]));
    }

    #[test]
    fn sweep_equalizes_totals() {
        let o = counts([40, 160, 220, 80]);
        let targets = [-0.5, -0.4, -0.3, -0.2, -0.1];
        let plans = sweep(&o, &targets).unwrap();
        assert_eq!(plans.len(), 5);
        let total = plans[0].total;
        for (p, t) in plans.iter().zip(targets) {
            assert_eq!(p.total, total);
            assert_eq!(p.target_mcc, t);
            assert!((mcc_real(p.planned).unwrap() - t).abs() <= MCC_TOLERANCE);
            for i in 0..4 {
                assert!(p.rounded.as_array()[i] <= o.as_array()[i]);
            }
        }
    }

    #[test]
    fn apply_plan_selects_quota() {
        let rows = [(true, true), (false, false), (true, false), (true, true), (false, true)];
        let ids = (0..rows.len()).map(|i| format!("i{i}")).collect();
        let labels = LabelTable::new(
            ids,
            vec!["T".into(), "P".into()],
            vec![rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect()],
        )
        .unwrap();
        let o = original_counts(&labels, "T", "P").unwrap();
        assert_eq!(o, counts([2, 1, 1, 1]));
        let plan = SubsamplePlan {
            rounded: counts([1, 1, 0, 1]),
            ..solve_subgroups(&o, mcc(&o).unwrap(), None, None).unwrap()
        };
        assert_eq!(apply_plan(&labels, "T", "P", &plan).unwrap(), [0, 1, 2]);
    }
}
