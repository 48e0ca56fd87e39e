use serde::{Deserialize, Serialize};

use super::FitError;
use crate::geom::Point;

/// Leaf criterion for arc-length subdivision: control polygon length minus
/// chord length, in millimeters.
pub const LENGTH_FLATNESS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

impl CubicBezier {
    pub const fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Self {
        Self { p0, p1, p2, p3 }
    }

    /// Exact straight segment with control points at the chord thirds.
    pub fn line(a: Point, b: Point) -> Self {
        Self::new(a, a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0), b)
    }

    pub fn eval(&self, t: f64) -> Point {
        let s = 1.0 - t;
        self.p0 * (s * s * s) + self.p1 * (3.0 * s * s * t) + self.p2 * (3.0 * s * t * t) + self.p3 * (t * t * t)
    }

    pub fn derivative(&self, t: f64) -> Point {
        let s = 1.0 - t;
        (self.p1 - self.p0) * (3.0 * s * s) + (self.p2 - self.p1) * (6.0 * s * t) + (self.p3 - self.p2) * (3.0 * t * t)
    }

    pub fn second_derivative(&self, t: f64) -> Point {
        let s = 1.0 - t;
        (self.p2 - self.p1 * 2.0 + self.p0) * (6.0 * s) + (self.p3 - self.p2 * 2.0 + self.p1) * (6.0 * t)
    }

    /// de Casteljau split.
    pub fn split(&self, t: f64) -> (CubicBezier, CubicBezier) {
        let a = self.p0.lerp(self.p1, t);
        let b = self.p1.lerp(self.p2, t);
        let c = self.p2.lerp(self.p3, t);
        let ab = a.lerp(b, t);
        let bc = b.lerp(c, t);
        let m = ab.lerp(bc, t);
        (CubicBezier::new(self.p0, a, ab, m), CubicBezier::new(m, bc, c, self.p3))
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.p3, self.p2, self.p1, self.p0)
    }

    pub fn control_polygon_length(&self) -> f64 {
        self.p0.distance(self.p1) + self.p1.distance(self.p2) + self.p2.distance(self.p3)
    }

    pub fn chord_length(&self) -> f64 {
        self.p0.distance(self.p3)
    }

    pub fn is_degenerate(&self) -> bool {
        self.p0 == self.p1 && self.p1 == self.p2 && self.p2 == self.p3
    }

    pub fn is_finite(&self) -> bool {
        self.p0.is_finite() && self.p1.is_finite() && self.p2.is_finite() && self.p3.is_finite()
    }

    /// Arc length by adaptive midpoint subdivision.
    pub fn length(&self) -> f64 {
        fn rec(c: &CubicBezier, depth: u32) -> f64 {
            let poly = c.control_polygon_length();
            let chord = c.chord_length();
            if poly - chord < LENGTH_FLATNESS || depth >= 40 {
                return 0.5 * (poly + chord);
            }
            let (l, r) = c.split(0.5);
            rec(&l, depth + 1) + rec(&r, depth + 1)
        }
        rec(self, 0)
    }
}

/// A pen-down path: G0-continuous cubic segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    segments: Vec<CubicBezier>,
    closed: bool,
}

impl Stroke {
    pub fn new(segments: Vec<CubicBezier>, closed: bool) -> Result<Self, FitError> {
        if segments.is_empty() {
            return Err(FitError::EmptyStroke);
        }
        if segments.iter().any(|s| !s.is_finite()) {
            return Err(FitError::NonFinite);
        }
        for i in 1..segments.len() {
            if segments[i - 1].p3 != segments[i].p0 {
                return Err(FitError::Discontinuous(i - 1, i));
            }
        }
        if closed && segments[segments.len() - 1].p3 != segments[0].p0 {
            return Err(FitError::OpenClosedStroke);
        }
        Ok(Self { segments, closed })
    }

    /// Zero-length stroke marking a pen stamp at `p`.
    pub fn dot(p: Point) -> Self {
        Self {
            segments: vec![CubicBezier::new(p, p, p, p)],
            closed: false,
        }
    }

    pub fn segments(&self) -> &[CubicBezier] {
        &self.segments
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_dot(&self) -> bool {
        self.segments.iter().all(|s| s.is_degenerate() && s.p0 == self.segments[0].p0)
    }

    pub fn start(&self) -> Point {
        self.segments[0].p0
    }

    pub fn end(&self) -> Point {
        self.segments[self.segments.len() - 1].p3
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Stroke {
        Stroke {
            segments: self.segments.iter().rev().map(CubicBezier::reversed).collect(),
            closed: self.closed,
        }
    }

    pub fn length(&self) -> f64 {
        stroke_length(self)
    }
}

/// Sum of segment arc lengths.
pub fn stroke_length(s: &Stroke) -> f64 {
    s.segments.iter().map(CubicBezier::length).sum()
}
