mod oracles;

use aiou_core::map::{attention_iou, bilinear_downsample, l1_normalize, nearest_upscale, Map};
use proptest::prelude::*;

/// A nonnegative map of the given shape with at least one positive entry.
fn map_of(h: usize, w: usize) -> impl Strategy<Value = Map> {
    (
        prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], h * w),
        0..h * w,
        0.01..10.0f64,
    )
        .prop_map(move |(mut data, k, v)| {
            data[k] = v;
            Map::new(h, w, data).unwrap()
        })
}

fn map_pair(max: usize) -> impl Strategy<Value = (Map, Map)> {
    (1..=max, 1..=max).prop_flat_map(|(h, w)| (map_of(h, w), map_of(h, w)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn bounded_and_symmetric((a, b) in map_pair(64)) {
        let ab = attention_iou(&a, &b).unwrap();
        let ba = attention_iou(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((ab - oracles::aiou_naive(a.data(), b.data())).abs() < 1e-9);
    }

    #[test]
    fn identity_is_one(a in (1..=64usize, 1..=64usize).prop_flat_map(|(h, w)| map_of(h, w))) {
        prop_assert!((attention_iou(&a, &a).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn equal_after_normalization_is_one(
        a in (1..=32usize, 1..=32usize).prop_flat_map(|(h, w)| map_of(h, w)),
        s in 1e-3..1e3f64,
    ) {
        let b = a.scaled(s).unwrap();
        prop_assert!((attention_iou(&a, &b).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn disjoint_is_exactly_zero(
        (a, mask) in (1..=64usize, 1..=64usize).prop_flat_map(|(h, w)| {
            (map_of(h, w), prop::collection::vec(any::<bool>(), h * w))
        })
    ) {
        // split one map's support by a random mask
        let (h, w) = a.shape();
        let mut left: Vec<f64> = a.data().iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        let mut right: Vec<f64> = a.data().iter().zip(&mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
        if left.iter().all(|&v| v == 0.0) || right.iter().all(|&v| v == 0.0) {
            if h * w < 2 {
                return Ok(());
            }
            left = vec![0.0; h * w];
            right = vec![0.0; h * w];
            left[0] = 1.0;
            right[h * w - 1] = 1.0;
        }
        let l = Map::new(h, w, left).unwrap();
        let r = Map::new(h, w, right).unwrap();
        prop_assert_eq!(attention_iou(&l, &r).unwrap(), 0.0);
    }

    #[test]
    fn scale_invariance((a, b) in map_pair(32), s in 1e-4..1e4f64, t in 1e-4..1e4f64) {
        let base = attention_iou(&a, &b).unwrap();
        let scaled = attention_iou(&a.scaled(s).unwrap(), &b.scaled(t).unwrap()).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-6 * base.max(f64::MIN_POSITIVE) || (scaled - base).abs() < 1e-15);
    }

    #[test]
    fn size_invariance((a, b) in map_pair(16), alpha in 2usize..=4) {
        let base = attention_iou(&a, &b).unwrap();
        let up = attention_iou(&nearest_upscale(&a, alpha).unwrap(), &nearest_upscale(&b, alpha).unwrap()).unwrap();
        prop_assert!((up - base).abs() <= 1e-6 * base || (up - base).abs() < 1e-15);
    }

    #[test]
    fn normalization_sums_to_one(a in (1..=64usize, 1..=64usize).prop_flat_map(|(h, w)| map_of(h, w))) {
        let n = l1_normalize(&a).unwrap();
        prop_assert!(n.data().iter().all(|&v| v >= 0.0));
        prop_assert!((n.data().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn downsampling_stays_in_hull(
        a in (2..=32usize, 2..=32usize).prop_flat_map(|(h, w)| map_of(h, w)),
        fh in 0.1..1.0f64,
        fw in 0.1..1.0f64,
    ) {
        let (h, w) = a.shape();
        let oh = ((h as f64 * fh).ceil() as usize).max(1);
        let ow = ((w as f64 * fw).ceil() as usize).max(1);
        let d = bilinear_downsample(&a, oh, ow).unwrap();
        prop_assert_eq!(d.shape(), (oh, ow));
        let (lo, hi) = a.data().iter().fold((f64::MAX, 0.0f64), |(l, u), &v| (l.min(v), u.max(v)));
        prop_assert!(d.data().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn closed_form_along_leakage(
        (a, d) in (2..=24usize, 2..=24usize, prop::collection::vec(any::<bool>(), 576))
            .prop_flat_map(|(h, w, side)| (map_of(h, w), map_of(h, w), Just(side)))
            .prop_filter_map("both sides need mass", |(x, y, side)| {
                let (h, w) = x.shape();
                let a: Vec<f64> = (0..h * w).map(|i| if side[i] { x.data()[i] } else { 0.0 }).collect();
                let d: Vec<f64> = (0..h * w).map(|i| if side[i] { 0.0 } else { y.data()[i] }).collect();
                let a = Map::new(h, w, a).ok().filter(|m| !m.is_degenerate())?;
                let d = Map::new(h, w, d).ok().filter(|m| !m.is_degenerate())?;
                Some((l1_normalize(&a).unwrap().into_map(), l1_normalize(&d).unwrap().into_map()))
            })
    ) {
        check_leakage_curve(&a, &d)?;
    }
}

fn check_leakage_curve(a: &Map, d: &Map) -> Result<(), TestCaseError> {
    let sq = |m: &Map| m.data().iter().map(|v| v * v).sum::<f64>();
    let (sa, sd) = (sq(a), sq(d));
    let mut prev = -1.0;
    for k in 0..=10 {
        let lam = k as f64 / 10.0;
        let mix: Vec<f64> = a
            .data()
            .iter()
            .zip(d.data())
            .map(|(x, y)| lam * x + (1.0 - lam) * y)
            .collect();
        let mix = Map::new(a.height(), a.width(), mix).unwrap();
        let got = attention_iou(&mix, a).unwrap();
        prop_assert!((got - oracles::leakage_closed_form(lam, sa, sd)).abs() <= 1e-9);
        prop_assert!(got > prev);
        prev = got;
    }
    Ok(())
}

#[test]
fn hand_example() {
    let a = Map::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
    let b = Map::from_rows(&[[0.5, 0.5], [0.0, 0.0]]).unwrap();
    assert!((attention_iou(&a, &b).unwrap() - 0.8).abs() <= 1e-12);
}

#[test]
fn uniform_against_one_hot() {
    // p = e_0, q = 1/n: num = 1/n, den = ((1+1/n)/2)^2 + (n-1)(1/(2n))^2
    for n in 1..50usize {
        let mut one_hot = vec![0.0; n];
        one_hot[0] = 1.0;
        let a = Map::new(1, n, one_hot).unwrap();
        let b = Map::filled(1, n, 1.0).unwrap();
        let nf = n as f64;
        let den = ((1.0 + 1.0 / nf) / 2.0).powi(2) + (nf - 1.0) / (4.0 * nf * nf);
        let expected = (1.0 / nf) / den;
        assert!((attention_iou(&a, &b).unwrap() - expected).abs() < 1e-12);
    }
}
