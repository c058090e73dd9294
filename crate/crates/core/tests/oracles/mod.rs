//! Slow, direct reference implementations used as test oracles. Nothing here
//! shares code with the library beyond plain data types.
#![allow(dead_code)]

use rand::Rng;

/// Attention-IoU written straight from its definition with naive sums.
pub fn aiou_naive(a: &[f64], b: &[f64]) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (p, q) = (x / sa, y / sb);
        num += p * q;
        den += ((p + q) / 2.0).powi(2);
    }
    num / den
}

/// Closed form for `aiou(lam*a + (1-lam)*d, a)` with `a`, `d` disjoint pdfs,
/// `sq_a = sum a^2`, `sq_d = sum d^2`.
pub fn leakage_closed_form(lam: f64, sq_a: f64, sq_d: f64) -> f64 {
    4.0 * lam * sq_a / ((1.0 + lam).powi(2) * sq_a + (1.0 - lam).powi(2) * sq_d)
}

/// Pearson correlation of two boolean columns; `None` if either is constant.
pub fn mcc_pearson(a: &[bool], b: &[bool]) -> Option<f64> {
    let n = a.len() as f64;
    let x: Vec<f64> = a.iter().map(|&v| v as u8 as f64).collect();
    let y: Vec<f64> = b.iter().map(|&v| v as u8 as f64).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(&y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx).powi(2);
        syy += (yi - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// MCC of a 2x2 table `[n11, n10, n01, n00]` by way of expanded label columns.
pub fn mcc_counts(n: [u64; 4]) -> Option<f64> {
    let (a, b) = expand(n);
    mcc_pearson(&a, &b)
}

pub fn expand(n: [u64; 4]) -> (Vec<bool>, Vec<bool>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (k, (x, y)) in [(true, true), (true, false), (false, true), (false, false)]
        .into_iter()
        .enumerate()
    {
        for _ in 0..n[k] {
            a.push(x);
            b.push(y);
        }
    }
    (a, b)
}

/// Worst-group accuracy: filter each group separately and compare.
pub fn wga_brute(target: &[bool], protected: &[bool], predicted: &[bool], threshold: f64) -> Option<f64> {
    let total = target.len() as f64;
    let mut worst: Option<f64> = None;
    for t in [true, false] {
        for p in [true, false] {
            let members: Vec<usize> = (0..target.len())
                .filter(|&i| target[i] == t && protected[i] == p)
                .collect();
            if members.is_empty() || (members.len() as f64) < threshold * total {
                continue;
            }
            let correct = members.iter().filter(|&&i| predicted[i] == target[i]).count();
            let acc = correct as f64 / members.len() as f64;
            worst = Some(worst.map_or(acc, |w: f64| w.min(acc)));
        }
    }
    worst
}

/// Items ranked at or above item `i`: higher score, or equal score and not
/// later in the input.
fn ranked_above(scores: &[f64], i: usize) -> Vec<usize> {
    (0..scores.len())
        .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j <= i))
        .collect()
}

/// Average precision as the mean over positives of precision at their rank.
pub fn ap_brute(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let npos = labels.iter().filter(|&&l| l).count();
    if npos == 0 {
        return None;
    }
    let mut total = 0.0;
    for i in (0..scores.len()).filter(|&i| labels[i]) {
        let above = ranked_above(scores, i);
        let tp = above.iter().filter(|&&j| labels[j]).count() as f64;
        total += tp / above.len() as f64;
    }
    Some(total / npos as f64)
}

/// Normalized AP: true positives rescaled to a reference positive count.
pub fn ap_n_brute(scores: &[f64], labels: &[bool], n_ref: f64) -> Option<f64> {
    let npos = labels.iter().filter(|&&l| l).count();
    if npos == 0 {
        return None;
    }
    let mut total = 0.0;
    for i in (0..scores.len()).filter(|&i| labels[i]) {
        let above = ranked_above(scores, i);
        let tp = above.iter().filter(|&&j| labels[j]).count() as f64;
        let fp = above.len() as f64 - tp;
        let r = tp / npos as f64;
        total += r * n_ref / (r * n_ref + fp);
    }
    Some(total / npos as f64)
}

/// Kendall tau-b over all pairs.
pub fn kendall_brute(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = (x[i] - x[j]).signum() * (x[i] != x[j]) as u8 as f64;
            let dy = (y[i] - y[j]).signum() * (y[i] != y[j]) as u8 as f64;
            match (dx == 0.0, dy == 0.0) {
                (true, true) => {}
                (true, false) => tx += 1,
                (false, true) => ty += 1,
                (false, false) => {
                    if dx == dy {
                        conc += 1
                    } else {
                        disc += 1
                    }
                }
            }
        }
    }
    let n0 = (conc + disc + tx) as f64;
    let n1 = (conc + disc + ty) as f64;
    if n0 == 0.0 || n1 == 0.0 {
        return None;
    }
    Some((conc - disc) as f64 / (n0 * n1).sqrt())
}

fn l2(a: [u64; 4], b: [u64; 4]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Smallest L2 distance from `original` over integer points in the box whose
/// MCC lies within `tol` of `target` (optionally with a fixed total).
pub fn grid_optimum(original: [u64; 4], target: f64, tol: f64, total: Option<u64>) -> Option<f64> {
    let mut best: Option<f64> = None;
    for a in 0..=original[0] {
        for b in 0..=original[1] {
            for c in 0..=original[2] {
                for d in 0..=original[3] {
                    if total.is_some_and(|t| a + b + c + d != t) {
                        continue;
                    }
                    let n = [a, b, c, d];
                    let Some(m) = mcc_fast(n) else { continue };
                    if (m - target).abs() <= tol {
                        let dist = l2(n, original);
                        best = Some(best.map_or(dist, |x: f64| x.min(dist)));
                    }
                }
            }
        }
    }
    best
}

/// Plain 2x2 formula, used inside the grid search where expanding columns
/// would be too slow.
pub fn mcc_fast(n: [u64; 4]) -> Option<f64> {
    let [a, b, c, d] = n.map(|v| v as f64);
    let den = ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
    (den > 0.0).then(|| (a * d - b * c) / den)
}

/// Continuous optimum of `min |n - n0|` subject to `mcc(n) = target` inside the
/// box, on a grid: three coordinates step through multiples of `h` and the
/// fourth is solved exactly from the (quadratic) constraint. The result is an
/// upper bound on the true optimum that tightens as `h` shrinks.
pub fn continuous_oracle(original: [u64; 4], target: f64, h: f64) -> Option<f64> {
    let o = original.map(|v| v as f64);
    let mut best: Option<f64> = None;
    let steps = |k: usize| (o[k] / h).floor() as usize;
    for solved in 0..4 {
        let free: Vec<usize> = (0..4).filter(|&k| k != solved).collect();
        for i in 0..=steps(free[0]) {
            for j in 0..=steps(free[1]) {
                for l in 0..=steps(free[2]) {
                    let mut n = [0.0; 4];
                    n[free[0]] = (i as f64 * h).min(o[free[0]]);
                    n[free[1]] = (j as f64 * h).min(o[free[1]]);
                    n[free[2]] = (l as f64 * h).min(o[free[2]]);
                    for root in solve_coordinate(n, solved, target) {
                        if (0.0..=o[solved]).contains(&root) {
                            n[solved] = root;
                            let dist = n
                                .iter()
                                .zip(&o)
                                .map(|(x, y)| (x - y).powi(2))
                                .sum::<f64>()
                                .sqrt();
                            best = Some(best.map_or(dist, |b: f64| b.min(dist)));
                        }
                    }
                }
            }
        }
    }
    best
}

/// Roots `x` of `(ad - bc)^2 = t^2 (a+b)(c+d)(a+c)(b+d)` in coordinate `k`,
/// keeping those whose signed MCC equals `t`.
fn solve_coordinate(n: [f64; 4], k: usize, t: f64) -> Vec<f64> {
    // each side is a polynomial of degree <= 2 in x; sample at three points and
    // recover coefficients exactly by interpolation
    let f = |x: f64| {
        let mut m = n;
        m[k] = x;
        let [a, b, c, d] = m;
        (a * d - b * c).powi(2) - t * t * (a + b) * (c + d) * (a + c) * (b + d)
    };
    let (f0, f1, f2) = (f(0.0), f(1.0), f(2.0));
    let qa = (f2 - 2.0 * f1 + f0) / 2.0;
    let qb = f1 - f0 - qa;
    let qc = f0;
    let mut roots = Vec::new();
    if qa.abs() < 1e-12 * (qb.abs() + qc.abs()).max(1.0) {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            roots.push((-qb + s) / (2.0 * qa));
            roots.push((-qb - s) / (2.0 * qa));
        }
    }
    roots
        .into_iter()
        .filter(|&x| {
            let mut m = n;
            m[k] = x;
            let [a, b, c, d] = m;
            let den = ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
            den > 0.0 && ((a * d - b * c) / den - t).abs() < 1e-7
        })
        .collect()
}

/// Random nonnegative map data with at least one positive entry.
pub fn random_map_data<R: Rng>(rng: &mut R, len: usize, sparsity: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            if rng.gen_bool(sparsity) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    let k = rng.gen_range(0..len);
    v[k] = rng.gen_range(0.1..1.0);
    v
}
