use serde::{Deserialize, Serialize};

use super::FitError;
use crate::geom::{point_segment_distance, Point};
use crate::raster::PixelPath;

/// Ordered millimeter points. Closed polylines do not repeat the first
/// point at the end; the closing segment is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<Point>,
    closed: bool,
}

impl Polyline {
    pub fn new(points: Vec<Point>, closed: bool) -> Result<Self, FitError> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(FitError::NonFinite);
        }
        if points.len() < 2 {
            return Err(FitError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(FitError::RepeatedPoint(i + 1));
        }
        Ok(Self { points, closed })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segments including the closing one for closed polylines.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    /// Distance from `p` to the nearest point of the polyline.
    pub fn distance_to(&self, p: Point) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pixel-to-millimeter affine map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelToMm {
    pub scale: f64,
    pub origin: Point,
    pub flip_y: bool,
    /// Source image height in pixels, used when flipping.
    pub image_height: usize,
}

impl PixelToMm {
    pub fn apply(&self, x: u32, y: u32) -> Point {
        let py = if self.flip_y {
            (self.image_height as f64 - 1.0) - y as f64
        } else {
            y as f64
        };
        Point::new(self.origin.x + x as f64 * self.scale, self.origin.y + py * self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorkspacePath {
    Line(Polyline),
    Dot(Point),
}

/// Map a pixel path into workspace millimeters, collapsing repeated points.
pub fn to_workspace(path: &PixelPath, map: &PixelToMm) -> Result<WorkspacePath, FitError> {
    if !(map.scale > 0.0) {
        return Err(FitError::NonPositiveScale(map.scale));
    }
    let mut pts: Vec<Point> = Vec::with_capacity(path.points.len());
    for q in &path.points {
        let p = map.apply(q.x, q.y);
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    if path.closed {
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
    }
    if path.is_dot() {
        return Ok(WorkspacePath::Dot(pts[0]));
    }
    Polyline::new(pts, path.closed).map(WorkspacePath::Line)
}

fn rdp_open(points: &[Point], epsilon: f64) -> Vec<Point> {
    let n = points.len();
    if n <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (points[lo], points[hi]);
        let mut best = (0.0, lo);
        for (i, &p) in points.iter().enumerate().take(hi).skip(lo + 1) {
            let d = point_segment_distance(p, a, b);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > epsilon {
            keep[best.1] = true;
            stack.push((lo, best.1));
            stack.push((best.1, hi));
        }
    }
    points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()
}

/// Ramer–Douglas–Peucker. Closed polylines are cut at the point farthest
/// from the start, both halves simplified, and the result rejoined.
pub fn simplify(line: &Polyline, epsilon: f64) -> Polyline {
    let pts = line.points();
    if !line.is_closed() {
        return Polyline {
            points: rdp_open(pts, epsilon),
            closed: false,
        };
    }
    if pts.len() < 3 {
        return line.clone();
    }
    let far = (1..pts.len())
        .max_by(|&i, &j| pts[0].distance(pts[i]).total_cmp(&pts[0].distance(pts[j])).then(j.cmp(&i)))
        .unwrap_or(1);
    let first = rdp_open(&pts[..=far], epsilon);
    let mut second_input = pts[far..].to_vec();
    second_input.push(pts[0]);
    let second = rdp_open(&second_input, epsilon);
    let mut points = first;
    points.extend_from_slice(&second[1..second.len() - 1]);
    Polyline { points, closed: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Pixel;
    use proptest::prelude::*;

    fn path(px: &[(u32, u32)]) -> PixelPath {
        PixelPath {
            points: px.iter().map(|&(x, y)| Pixel::new(x, y)).collect(),
            closed: false,
        }
    }

    #[test]
    fn affine_mapping() {
        let map = PixelToMm { scale: 0.5, origin: Point::new(100.0, 100.0), flip_y: false, image_height: 20 };
        let WorkspacePath::Line(l) = to_workspace(&path(&[(0, 0), (10, 0)]), &map).unwrap() else { panic!() };
        assert_eq!(l.points(), &[Point::new(100.0, 100.0), Point::new(105.0, 100.0)]);

        let flipped = PixelToMm { flip_y: true, ..map };
        let WorkspacePath::Line(l) = to_workspace(&path(&[(0, 0), (10, 0)]), &flipped).unwrap() else { panic!() };
        assert_eq!(l.points()[0], Point::new(100.0, 100.0 + 19.0 * 0.5));
    }

    #[test]
    fn repeated_pixels_collapse() {
        let map = PixelToMm { scale: 1.0, origin: Point::default(), flip_y: false, image_height: 5 };
        let WorkspacePath::Line(l) = to_workspace(&path(&[(0, 0), (1, 0), (1, 0), (2, 0)]), &map).unwrap() else { panic!() };
        assert_eq!(l.len(), 3);
        assert_eq!(to_workspace(&path(&[(1, 1), (1, 1)]), &map), Err(FitError::TooFewPoints(1)));
        assert_eq!(
            to_workspace(&path(&[(1, 1)]), &map),
            Ok(WorkspacePath::Dot(Point::new(1.0, 1.0)))
        );
        let bad = PixelToMm { scale: 0.0, ..map };
        assert!(matches!(to_workspace(&path(&[(0, 0), (1, 0)]), &bad), Err(FitError::NonPositiveScale(_))));
    }

    #[test]
    fn collinear_points_reduce_to_endpoints() {
        let pts: Vec<Point> = (0..100).map(|i| Point::new(i as f64 * 0.7, i as f64 * 0.3)).collect();
        let s = simplify(&Polyline::new(pts.clone(), false).unwrap(), 0.1);
        assert_eq!(s.points(), &[pts[0], pts[99]]);
    }

    #[test]
    fn square_wave_keeps_extrema() {
        let mut pts = Vec::new();
        for k in 0..10 {
            let y = if k % 2 == 0 { 0.0 } else { 5.0 };
            pts.push(Point::new(k as f64 * 4.0, y));
            pts.push(Point::new(k as f64 * 4.0 + 2.0, y));
        }
        let s = simplify(&Polyline::new(pts.clone(), false).unwrap(), 0.1);
        assert_eq!(s.points(), pts.as_slice());
    }

    #[test]
    fn closed_square_survives() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(5.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ];
        let s = simplify(&Polyline::new(pts, true).unwrap(), 0.1);
        assert!(s.is_closed());
        assert_eq!(s.len(), 4);
    }

    fn polyline_strategy() -> impl Strategy<Value = (Vec<Point>, bool)> {
        (prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 3..60), any::<bool>())
            .prop_map(|(v, c)| (v.into_iter().map(|(x, y)| Point::new(x, y)).collect(), c))
    }

    proptest! {
        #[test]
        fn removed_points_stay_within_epsilon((pts, closed) in polyline_strategy(), eps in 0.0..5.0f64) {
            let line = Polyline::new(pts.clone(), closed).unwrap();
            let s = simplify(&line, eps);
            prop_assert_eq!(s.points().first(), pts.first());
            if !closed {
                prop_assert_eq!(s.points().last(), pts.last());
            }
            // brute-force point-to-segment oracle
            for p in &pts {
                let d = s.segments()
                    .map(|(a, b)| {
                        let ab = b - a;
                        let t = if ab.dot(ab) == 0.0 { 0.0 } else { ((*p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0) };
                        (*p - (a + ab * t)).norm()
                    })
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(d <= eps + 1e-9, "deviation {} > {}", d, eps);
            }
        }
    }
}
