//! Least-squares cubic fitting with recursive splitting.

use serde::{Deserialize, Serialize};

use super::{CubicBezier, FitError, Polyline, Stroke};
use crate::geom::{angle_between_deg, Point};

/// Newton–Raphson reparameterization rounds tried before splitting.
pub const MAX_REPARAMETERIZATIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Maximum distance (mm) of any input point from the fitted curve.
    pub max_err: f64,
    /// Vertices whose interior angle is below this become segment joints.
    pub corner_deg: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_err: 0.35,
            corner_deg: 100.0,
        }
    }
}

/// Fit a chain of cubic segments through `line`.
///
/// Every input point, and every check point spaced 0.1 mm along the input
/// chords, lies within `max_err` of the curve at the parameter the fitter
/// assigned to it, so the curve follows the whole polyline and not just
/// its vertices. The split structure depends only on the
/// data, never on `max_err`, so tightening the tolerance can only add
/// segments.
pub fn fit_stroke(line: &Polyline, opts: FitOptions) -> Result<Stroke, FitError> {
    if !(opts.max_err > 0.0) {
        return Err(FitError::NonPositiveTolerance(opts.max_err));
    }
    let mut pts = line.points().to_vec();
    if pts.len() < 2 {
        return Err(FitError::TooFewPoints(pts.len()));
    }
    if line.is_closed() {
        let seam = sharpest_vertex(&pts);
        pts.rotate_left(seam);
        pts.push(pts[0]);
    }

    let mut breaks = vec![0];
    for i in 1..pts.len() - 1 {
        if interior_angle(pts[i - 1], pts[i], pts[i + 1]) < opts.corner_deg {
            breaks.push(i);
        }
    }
    breaks.push(pts.len() - 1);

    let mut segments = Vec::new();
    for w in breaks.windows(2) {
        let piece = &pts[w[0]..=w[1]];
        let t1 = (piece[1] - piece[0]).normalized();
        let t2 = (piece[piece.len() - 2] - piece[piece.len() - 1]).normalized();
        fit_range(piece, t1, t2, opts.max_err, &mut segments);
    }
    Stroke::new(segments, line.is_closed())
}

fn interior_angle(prev: Point, at: Point, next: Point) -> f64 {
    angle_between_deg(prev - at, next - at)
}

/// Index of the vertex with the smallest interior angle on a closed loop.
fn sharpest_vertex(pts: &[Point]) -> usize {
    let n = pts.len();
    (0..n)
        .map(|i| (interior_angle(pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .unwrap_or(0)
}

fn fit_range(pts: &[Point], t1: Point, t2: Point, max_err: f64, out: &mut Vec<CubicBezier>) {
    let n = pts.len();
    if n == 2 {
        out.push(CubicBezier::line(pts[0], pts[1]));
        return;
    }
    let mut u = chord_length_parameters(pts);
    let mut curve = generate(pts, &u, t1, t2);
    let (mut err, mut split) = max_error(pts, &curve, &u);
    if err <= max_err {
        out.push(curve);
        return;
    }
    for _ in 0..MAX_REPARAMETERIZATIONS {
        u = reparameterize(pts, &u, &curve);
        curve = generate(pts, &u, t1, t2);
        (err, split) = max_error(pts, &curve, &u);
        if err <= max_err {
            out.push(curve);
            return;
        }
    }
    let mut center = (pts[split - 1] - pts[split + 1]).normalized();
    if center.norm() == 0.0 {
        center = (pts[split - 1] - pts[split]).normalized();
    }
    fit_range(&pts[..=split], t1, center, max_err, out);
    fit_range(&pts[split..], center * -1.0, t2, max_err, out);
}

fn chord_length_parameters(pts: &[Point]) -> Vec<f64> {
    let mut u = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    u.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].distance(w[1]);
        u.push(acc);
    }
    let total = acc;
    for v in u.iter_mut() {
        *v /= total;
    }
    u
}

/// Least-squares control points with fixed end tangent directions.
fn generate(pts: &[Point], u: &[f64], t1: Point, t2: Point) -> CubicBezier {
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let mut c = [[0.0; 2]; 2];
    let mut x = [0.0; 2];
    for (&p, &t) in pts.iter().zip(u) {
        let s = 1.0 - t;
        let b0 = s * s * s;
        let b1 = 3.0 * s * s * t;
        let b2 = 3.0 * s * t * t;
        let b3 = t * t * t;
        let a1 = t1 * b1;
        let a2 = t2 * b2;
        c[0][0] += a1.dot(a1);
        c[0][1] += a1.dot(a2);
        c[1][1] += a2.dot(a2);
        let tmp = p - (first * (b0 + b1) + last * (b2 + b3));
        x[0] += a1.dot(tmp);
        x[1] += a2.dot(tmp);
    }
    c[1][0] = c[0][1];
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let (mut alpha_l, mut alpha_r) = if det.abs() > 1e-12 {
        (
            (x[0] * c[1][1] - x[1] * c[0][1]) / det,
            (c[0][0] * x[1] - c[1][0] * x[0]) / det,
        )
    } else {
        (0.0, 0.0)
    };
    let chord = first.distance(last);
    let floor = 1e-6 * chord;
    if alpha_l < floor || alpha_r < floor || !alpha_l.is_finite() || !alpha_r.is_finite() {
        alpha_l = chord / 3.0;
        alpha_r = chord / 3.0;
    }
    CubicBezier::new(first, first + t1 * alpha_l, last + t2 * alpha_r, last)
}

/// Spacing of the checks along each input chord.
const CHORD_CHECK_STEP: f64 = 0.1;
const MAX_CHORD_CHECKS: usize = 256;

/// Largest distance between the input and the curve at the assigned
/// parameters, over the vertices and points spaced `CHORD_CHECK_STEP`
/// along each chord (parameters interpolated), with the interior vertex
/// nearest to where it occurs.
fn max_error(pts: &[Point], curve: &CubicBezier, u: &[f64]) -> (f64, usize) {
    let n = pts.len();
    let mut best = (0.0, n / 2);
    for i in 1..n - 1 {
        let d = curve.eval(u[i]).distance(pts[i]);
        if d > best.0 {
            best = (d, i);
        }
    }
    for i in 0..n - 1 {
        let checks = ((pts[i].distance(pts[i + 1]) / CHORD_CHECK_STEP).ceil() as usize).clamp(1, MAX_CHORD_CHECKS);
        for k in 1..checks {
            let l = k as f64 / checks as f64;
            let d = curve.eval(u[i] + (u[i + 1] - u[i]) * l).distance(pts[i].lerp(pts[i + 1], l));
            if d > best.0 {
                let nearest = if l < 0.5 { i } else { i + 1 };
                best = (d, nearest.clamp(1, n - 2));
            }
        }
    }
    best
}

fn reparameterize(pts: &[Point], u: &[f64], curve: &CubicBezier) -> Vec<f64> {
    pts.iter()
        .zip(u)
        .map(|(&p, &t)| {
            let q = curve.eval(t) - p;
            let d1 = curve.derivative(t);
            let d2 = curve.second_derivative(t);
            let num = q.dot(d1);
            let den = d1.dot(d1) + q.dot(d2);
            if den.abs() < 1e-12 {
                t
            } else {
                (t - num / den).clamp(0.0, 1.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Nearest distance from `p` to the curve, by dense Bernstein sampling.
    fn sampled_distance(s: &Stroke, p: Point, per_segment: usize) -> f64 {
        let mut best = f64::INFINITY;
        for c in s.segments() {
            for k in 0..=per_segment {
                let t = k as f64 / per_segment as f64;
                let w = [(1.0 - t).powi(3), 3.0 * t * (1.0 - t).powi(2), 3.0 * t * t * (1.0 - t), t.powi(3)];
                let q = Point::new(
                    w[0] * c.p0.x + w[1] * c.p1.x + w[2] * c.p2.x + w[3] * c.p3.x,
                    w[0] * c.p0.y + w[1] * c.p1.y + w[2] * c.p2.y + w[3] * c.p3.y,
                );
                best = best.min(p.distance(q));
            }
        }
        best
    }

    #[test]
    fn straight_line_is_exact() {
        let pts: Vec<Point> = (0..=30).map(|i| Point::new(i as f64, 0.0)).collect();
        let s = fit_stroke(&Polyline::new(pts, false).unwrap(), FitOptions::default()).unwrap();
        assert_eq!(s.segments().len(), 1);
        let c = s.segments()[0];
        assert!((c.p1 - Point::new(10.0, 0.0)).norm() < 1e-9);
        assert!((c.p2 - Point::new(20.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn two_points_give_chord_thirds() {
        let line = Polyline::new(vec![Point::new(0.0, 0.0), Point::new(30.0, 0.0)], false).unwrap();
        let s = fit_stroke(&line, FitOptions::default()).unwrap();
        assert_eq!(s.segments(), &[CubicBezier::line(Point::new(0.0, 0.0), Point::new(30.0, 0.0))]);
        assert_eq!(s.segments()[0].p1, Point::new(10.0, 0.0));
    }

    #[test]
    fn semicircle_needs_at_most_two_segments() {
        let pts: Vec<Point> = (0..64)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 63.0;
                Point::new(50.0 * a.cos(), 50.0 * a.sin())
            })
            .collect();
        let s = fit_stroke(&Polyline::new(pts.clone(), false).unwrap(), FitOptions { max_err: 0.5, corner_deg: 170.0 }).unwrap();
        assert!(s.segments().len() <= 2, "{} segments", s.segments().len());
        for p in &pts {
            assert!(sampled_distance(&s, *p, 1000) <= 0.5);
        }
    }

    #[test]
    fn right_angle_splits_at_corner() {
        let mut pts: Vec<Point> = (0..=10).map(|i| Point::new(i as f64, 0.0)).collect();
        pts.extend((1..=10).map(|i| Point::new(10.0, i as f64)));
        let s = fit_stroke(&Polyline::new(pts, false).unwrap(), FitOptions { max_err: 0.35, corner_deg: 100.0 }).unwrap();
        assert_eq!(s.segments().len(), 2);
        assert_eq!(s.segments()[0].p3, Point::new(10.0, 0.0));
    }

    #[test]
    fn closed_square_is_closed_with_corner_joints() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(Point::new(i as f64, 0.0));
        }
        for i in 0..10 {
            pts.push(Point::new(10.0, i as f64));
        }
        for i in 0..10 {
            pts.push(Point::new(10.0 - i as f64, 10.0));
        }
        for i in 0..10 {
            pts.push(Point::new(0.0, 10.0 - i as f64));
        }
        let s = fit_stroke(&Polyline::new(pts, true).unwrap(), FitOptions::default()).unwrap();
        assert!(s.is_closed());
        assert_eq!(s.segments().len(), 4);
        assert_eq!(s.start(), s.end());
    }

    #[test]
    fn rejects_bad_tolerance() {
        let line = Polyline::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], false).unwrap();
        assert_eq!(
            fit_stroke(&line, FitOptions { max_err: 0.0, corner_deg: 100.0 }),
            Err(FitError::NonPositiveTolerance(0.0))
        );
    }
}
