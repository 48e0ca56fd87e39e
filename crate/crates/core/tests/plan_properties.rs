use linesketch::fit::{CubicBezier, Stroke};
use linesketch::geom::Point;
use linesketch::plan::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_strokes(rng: &mut ChaCha8Rng, n: usize) -> Vec<Stroke> {
    (0..n)
        .map(|_| {
            let mut p = || Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let (a, b, c, d) = (p(), p(), p(), p());
            Stroke::new(vec![CubicBezier::new(a, b, c, d)], false).unwrap()
        })
        .collect()
}

/// Pen-like strokes: 1–20 mm long, mildly curved, anywhere in a 100 mm field.
fn pen_strokes(rng: &mut ChaCha8Rng, n: usize) -> Vec<Stroke> {
    (0..n)
        .map(|_| {
            let a = Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let len = rng.random_range(1.0..20.0);
            let dir = Point::new(ang.cos(), ang.sin());
            let normal = Point::new(-dir.y, dir.x);
            let bend = rng.random_range(-0.3..0.3) * len;
            let b = a + dir * len;
            let c1 = a + dir * (len / 3.0) + normal * bend;
            let c2 = a + dir * (2.0 * len / 3.0) + normal * bend;
            Stroke::new(vec![CubicBezier::new(a, c1, c2, b)], false).unwrap()
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum travel over all n!·2ⁿ orders and orientations.
fn exhaustive_optimum(strokes: &[Stroke], start: Point) -> f64 {
    let n = strokes.len();
    let mut best = f64::INFINITY;
    for perm in permutations(n) {
        for mask in 0..(1u32 << n) {
            let mut pen = start;
            let mut travel = 0.0;
            for &i in &perm {
                let rev = mask >> i & 1 == 1;
                let (entry, exit) = if rev { (strokes[i].end(), strokes[i].start()) } else { (strokes[i].start(), strokes[i].end()) };
                travel += pen.distance(entry);
                pen = exit;
            }
            best = best.min(travel);
        }
    }
    best
}

/// Exact optimum by dynamic programming over (visited set, last stroke, orientation).
fn dp_optimum(strokes: &[Stroke], start: Point) -> f64 {
    let n = strokes.len();
    if n == 0 {
        return 0.0;
    }
    let ends = |i: usize, rev: usize| if rev == 1 { (strokes[i].end(), strokes[i].start()) } else { (strokes[i].start(), strokes[i].end()) };
    let mut dp = vec![f64::INFINITY; (1 << n) * n * 2];
    let at = |mask: usize, i: usize, r: usize| (mask * n + i) * 2 + r;
    for i in 0..n {
        for r in 0..2 {
            dp[at(1 << i, i, r)] = start.distance(ends(i, r).0);
        }
    }
    for mask in 1..(1usize << n) {
        for i in 0..n {
            for r in 0..2 {
                let cur = dp[at(mask, i, r)];
                if !cur.is_finite() {
                    continue;
                }
                let exit = ends(i, r).1;
                for j in (0..n).filter(|j| mask >> j & 1 == 0) {
                    for s in 0..2 {
                        let v = cur + exit.distance(ends(j, s).0);
                        let k = at(mask | 1 << j, j, s);
                        if v < dp[k] {
                            dp[k] = v;
                        }
                    }
                }
            }
        }
    }
    let full = (1 << n) - 1;
    (0..n).flat_map(|i| (0..2).map(move |r| (i, r))).map(|(i, r)| dp[at(full, i, r)]).fold(f64::INFINITY, f64::min)
}

#[test]
fn dp_oracle_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 0..=5 {
        let s = random_strokes(&mut rng, n);
        let start = Point::new(0.0, 0.0);
        assert!((dp_optimum(&s, start) - exhaustive_optimum(&s, start)).abs() < 1e-9);
    }
}

#[test]
fn small_instances_mostly_reach_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut exact = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let s = pen_strokes(&mut rng, n);
        let start = Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        let greedy = greedy_plan(&s, start);
        let improved = two_opt_improve(&greedy, &s, 50).unwrap();
        assert!(improved.total_travel <= greedy.total_travel + 1e-9);
        let opt = exhaustive_optimum(&s, start);
        assert!(improved.total_travel >= opt - 1e-9);
        if improved.total_travel <= opt + 1e-9 {
            exact += 1;
        }
    }
    assert!(exact >= 180, "exact on {exact}/200");
}

#[test]
fn up_to_eight_strokes_within_five_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut close = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let s = pen_strokes(&mut rng, n);
        let plan = two_opt_improve(&greedy_plan(&s, Point::new(0.0, 0.0)), &s, 50).unwrap();
        if plan.total_travel <= 1.05 * dp_optimum(&s, Point::new(0.0, 0.0)) + 1e-9 {
            close += 1;
        }
    }
    assert!(close >= 190, "within 5% on {close}/200");
}

#[test]
fn crossing_tour_is_uncrossed() {
    // Greedy from the origin takes A, then the nearer end of C, leaving a
    // crossing back-track; 2-opt must find the exhaustive optimum.
    let seg = |a: (f64, f64), b: (f64, f64)| Stroke::new(vec![CubicBezier::line(Point::new(a.0, a.1), Point::new(b.0, b.1))], false).unwrap();
    let s = vec![seg((0.0, 0.0), (10.0, 0.0)), seg((30.0, 10.0), (40.0, 10.0)), seg((12.0, 6.0), (20.0, 12.0)), seg((40.0, 0.0), (50.0, 0.0))];
    let start = Point::new(0.0, 0.0);
    let greedy = greedy_plan(&s, start);
    let improved = two_opt_improve(&greedy, &s, 50).unwrap();
    let opt = exhaustive_optimum(&s, start);
    assert!((improved.total_travel - opt).abs() < 1e-9, "{} vs {opt}", improved.total_travel);
    assert!(improved.total_travel <= greedy.total_travel);
}

fn sample(s: &Stroke, per: usize) -> Vec<Point> {
    s.segments().iter().flat_map(|c| (0..=per).map(move |k| c.eval(k as f64 / per as f64))).collect()
}

fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| x.iter().map(|p| y.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

proptest! {
    #[test]
    fn plans_are_permutations_with_consistent_travel(seed in any::<u64>(), n in 0usize..12, passes in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_strokes(&mut rng, n);
        let greedy = greedy_plan(&s, Point::new(50.0, 50.0));
        let mut prev = greedy.total_travel;
        let mut plan = greedy.clone();
        for _ in 0..passes {
            plan = two_opt_improve(&plan, &s, 1).unwrap();
            let mut seen: Vec<usize> = plan.items.iter().map(|i| i.stroke).collect();
            seen.sort();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            prop_assert!(plan.total_travel <= prev + 1e-9);
            prop_assert!((travel_cost(&plan, &s).unwrap() - plan.total_travel).abs() <= 1e-9);
            prev = plan.total_travel;
        }
        let ink: f64 = s.iter().map(Stroke::length).sum();
        prop_assert!((plan.total_ink - ink).abs() <= 1e-9);
    }

    #[test]
    fn converged_plans_admit_no_improving_reversal(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = pen_strokes(&mut rng, n);
        let plan = two_opt_improve(&greedy_plan(&s, Point::new(0.0, 0.0)), &s, 1000).unwrap();
        for i in 0..n {
            for j in i..n {
                let mut items = plan.items.clone();
                items[i..=j].reverse();
                for it in &mut items[i..=j] {
                    it.reversed = !it.reversed;
                }
                let moved = StrokePlan::from_items(plan.start, items, &s).unwrap();
                prop_assert!(moved.total_travel >= plan.total_travel - 1e-6, "move ({i},{j}) improves");
            }
        }
    }

    #[test]
    fn reversal_keeps_the_point_set(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &random_strokes(&mut rng, 1)[0];
        let r = s.reversed();
        prop_assert_eq!(r.start(), s.end());
        prop_assert_eq!(r.end(), s.start());
        let c = s.segments()[0];
        let rc = r.segments()[0];
        prop_assert_eq!((rc.p0, rc.p1, rc.p2, rc.p3), (c.p3, c.p2, c.p1, c.p0));
        // c(t) = rc(1 − t), so aligned samples coincide.
        prop_assert!(hausdorff(&sample(s, 400), &sample(&r, 400)) < 1e-9);
    }
}
