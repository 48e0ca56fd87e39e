use std::f64::consts::TAU;

use linesketch::fit::*;
use linesketch::geom::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nearest distance from `p` to the stroke: 1000 samples per segment, then
/// a golden-section refinement around the best sample.
fn distance_to_stroke(s: &Stroke, p: Point) -> f64 {
    const SAMPLES: usize = 1000;
    let mut best = f64::INFINITY;
    for c in s.segments() {
        let d = |t: f64| c.eval(t).distance(p);
        let (mut bi, mut bd) = (0, f64::INFINITY);
        for i in 0..=SAMPLES {
            let v = d(i as f64 / SAMPLES as f64);
            if v < bd {
                (bi, bd) = (i, v);
            }
        }
        let (mut lo, mut hi) = ((bi.saturating_sub(1)) as f64 / SAMPLES as f64, ((bi + 1).min(SAMPLES)) as f64 / SAMPLES as f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if d(m1) < d(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(bd).min(d((lo + hi) / 2.0));
    }
    best
}

fn max_deviation(s: &Stroke, pts: &[Point]) -> f64 {
    pts.iter().map(|&p| distance_to_stroke(s, p)).fold(0.0, f64::max)
}

/// Smooth random curve (sum of a few harmonics), sampled with 0.2–1 mm spacing.
fn smooth_polyline(seed: u64) -> Polyline {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let closed = rng.random_bool(0.3);
    let harmonics: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|k| {
            let amp = rng.random_range(2.0..20.0) / (k as f64 + 1.0);
            (amp, rng.random_range(0.0..TAU), amp * rng.random_range(0.5..1.5), rng.random_range(0.0..TAU))
        })
        .collect();
    let n = rng.random_range(20..160);
    let span = if closed { TAU } else { rng.random_range(1.0..TAU) };
    let base = rng.random_range(10.0..40.0);
    let mut pts: Vec<Point> = Vec::new();
    for i in 0..n {
        let t = span * i as f64 / n as f64;
        let mut x = 100.0 + base * t.cos();
        let mut y = 100.0 + base * t.sin();
        for (k, &(ax, px, ay, py)) in harmonics.iter().enumerate() {
            let f = (k + 2) as f64;
            x += 0.15 * ax * (f * t + px).sin();
            y += 0.15 * ay * (f * t + py).cos();
        }
        let p = Point::new(x, y);
        if pts.last().is_none_or(|q| q.distance(p) > 1e-9) {
            pts.push(p);
        }
    }
    Polyline::new(pts, closed).unwrap()
}

#[test]
fn fitted_strokes_stay_within_tolerance() {
    let opts = FitOptions::default();
    let mut worst: f64 = 0.0;
    for seed in 0..200 {
        let line = smooth_polyline(seed);
        let stroke = fit_stroke(&line, opts).unwrap();
        let dev = max_deviation(&stroke, line.points());
        worst = worst.max(dev);
        assert!(dev <= opts.max_err, "seed {seed}: deviation {dev}");
        assert_eq!(stroke.is_closed(), line.is_closed());
    }
    assert!(worst > 0.0);
}

#[test]
fn halving_tolerance_never_saves_segments() {
    for seed in 0..60 {
        let line = smooth_polyline(1000 + seed);
        let mut last = 0;
        for err in [1.6, 0.8, 0.4, 0.2, 0.1, 0.05] {
            let n = fit_stroke(&line, FitOptions { max_err: err, corner_deg: 100.0 }).unwrap().segments().len();
            assert!(n >= last, "seed {seed}: {n} segments at {err} < {last}");
            last = n;
        }
    }
}

#[test]
fn simplify_then_fit_stays_within_summed_tolerance() {
    for seed in 0..100 {
        let line = smooth_polyline(2000 + seed);
        for (eps, err) in [(0.05, 0.35), (0.2, 0.35), (0.5, 0.2)] {
            let stroke = fit_stroke(&simplify(&line, eps), FitOptions { max_err: err, corner_deg: 100.0 }).unwrap();
            let dev = max_deviation(&stroke, line.points());
            assert!(dev <= eps + err, "seed {seed} eps {eps} err {err}: {dev}");
        }
    }
}

proptest! {
    #[test]
    fn stroke_length_is_additive_and_reversal_invariant(seed in any::<u64>()) {
        let stroke = fit_stroke(&smooth_polyline(seed), FitOptions::default()).unwrap();
        let sum: f64 = stroke.segments().iter().map(CubicBezier::length).sum();
        prop_assert!((stroke_length(&stroke) - sum).abs() <= 1e-9);
        prop_assert!(stroke_length(&stroke) > 0.0);
        prop_assert!((stroke.reversed().length() - stroke.length()).abs() <= 1e-9);
    }

    #[test]
    fn simplification_keeps_every_point_close(pts in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 2..60), eps in 0.0f64..3.0) {
        let mut v: Vec<Point> = Vec::new();
        for (x, y) in pts {
            let p = Point::new(x, y);
            if v.last() != Some(&p) {
                v.push(p);
            }
        }
        prop_assume!(v.len() >= 2);
        let line = Polyline::new(v, false).unwrap();
        let s = simplify(&line, eps);
        prop_assert_eq!(s.points().first(), line.points().first());
        prop_assert_eq!(s.points().last(), line.points().last());
        for &p in line.points() {
            prop_assert!(s.distance_to(p) <= eps + 1e-12);
        }
    }
}
