use crate::fit::{CubicBezier, Stroke};
use crate::geom::{point_segment_distance, Point};

/// Polyline approximation of a stroke. A dot flattens to a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenedStroke {
    pub points: Vec<Point>,
}

impl FlattenedStroke {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

const MAX_DEPTH: u32 = 24;

fn flatten_cubic(c: &CubicBezier, tol: f64, depth: u32, out: &mut Vec<Point>) {
    let flat = point_segment_distance(c.p1, c.p0, c.p3).max(point_segment_distance(c.p2, c.p0, c.p3));
    if flat <= tol || depth >= MAX_DEPTH {
        if out.last() != Some(&c.p3) {
            out.push(c.p3);
        }
        return;
    }
    let (l, r) = c.split(0.5);
    flatten_cubic(&l, tol, depth + 1, out);
    flatten_cubic(&r, tol, depth + 1, out);
}

/// Adaptive de Casteljau subdivision: a piece becomes a chord once both
/// inner control points lie within `tol` of it. The curve stays inside
/// the control hull, so every curve point is within `tol` of the result.
pub fn flatten(s: &Stroke, tol: f64) -> FlattenedStroke {
    let tol = if tol > 0.0 { tol } else { f64::MIN_POSITIVE };
    let mut points = vec![s.start()];
    for c in s.segments() {
        flatten_cubic(c, tol, 0, &mut points);
    }
    FlattenedStroke { points }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter(r: f64) -> Stroke {
        let k = 0.5523 * r;
        Stroke::new(
            vec![CubicBezier::new(Point::new(r, 0.0), Point::new(r, k), Point::new(k, r), Point::new(0.0, r))],
            false,
        )
        .unwrap()
    }

    #[test]
    fn straight_cubic_flattens_to_endpoints() {
        let s = Stroke::new(vec![CubicBezier::line(Point::new(0.0, 0.0), Point::new(30.0, 0.0))], false).unwrap();
        assert_eq!(flatten(&s, 0.2).points, vec![Point::new(0.0, 0.0), Point::new(30.0, 0.0)]);
    }

    #[test]
    fn huge_tolerance_gives_chord() {
        assert_eq!(flatten(&quarter(5.0), 1000.0).points.len(), 2);
    }

    #[test]
    fn quarter_circle_within_tolerance() {
        let s = quarter(50.0);
        let f = flatten(&s, 0.1);
        let c = s.segments()[0];
        assert_eq!(f.points[0], c.p0);
        assert_eq!(*f.points.last().unwrap(), c.p3);
        for k in 0..=10_000 {
            let q = c.eval(k as f64 / 10_000.0);
            let d = f
                .points
                .windows(2)
                .map(|w| point_segment_distance(q, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 0.1, "deviation {d}");
        }
    }

    #[test]
    fn dot_flattens_to_one_point() {
        assert_eq!(flatten(&Stroke::dot(Point::new(1.0, 2.0)), 0.2).points.len(), 1);
    }
}
