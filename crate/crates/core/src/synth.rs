//! Programmatic line-art rasters: black ink on white.

use std::f64::consts::{PI, TAU};

use crate::raster::GrayRaster;

const INK: u8 = 0;
const PAPER: u8 = 255;

/// White canvas with simple ink primitives.
#[derive(Debug, Clone)]
pub struct Canvas {
    image: GrayRaster,
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> Self {
        Self { image: GrayRaster::filled(width, height, PAPER).expect("non-empty canvas") }
    }

    pub fn into_image(self) -> GrayRaster {
        self.image
    }

    pub fn plot(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.image.width() && (y as usize) < self.image.height() {
            self.image.set(x as usize, y as usize, INK);
        }
    }

    fn stamp(&mut self, x: i64, y: i64, width: u32) {
        if width <= 1 {
            return self.plot(x, y);
        }
        let r = width as f64 / 2.0;
        let ri = r.ceil() as i64;
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                if ((dx * dx + dy * dy) as f64) <= r * r {
                    self.plot(x + dx, y + dy);
                }
            }
        }
    }

    /// Bresenham segment between pixel centers.
    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), width: u32) {
        let (mut x0, mut y0) = (a.0.round() as i64, a.1.round() as i64);
        let (x1, y1) = (b.0.round() as i64, b.1.round() as i64);
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let mut err = dx + dy;
        loop {
            self.stamp(x0, y0, width);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], width: u32) {
        for w in pts.windows(2) {
            self.line(w[0], w[1], width);
        }
    }

    /// Curve sampled at `n + 1` parameter values in `[0, 1]`.
    pub fn curve(&mut self, n: usize, width: u32, f: impl Fn(f64) -> (f64, f64)) {
        let pts: Vec<(f64, f64)> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        self.polyline(&pts, width);
    }

    /// Single-pixel circle via the midpoint algorithm.
    pub fn circle(&mut self, cx: i64, cy: i64, r: i64) {
        let (mut x, mut y, mut d) = (r, 0i64, 1 - r);
        while x >= y {
            for (px, py) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
                self.plot(cx + px, cy + py);
            }
            y += 1;
            if d < 0 {
                d += 2 * y + 1;
            } else {
                x -= 1;
                d += 2 * (y - x) + 1;
            }
        }
    }

    pub fn ellipse(&mut self, c: (f64, f64), rx: f64, ry: f64, width: u32) {
        self.curve(((rx + ry) * 4.0) as usize, width, |t| (c.0 + rx * (TAU * t).cos(), c.1 + ry * (TAU * t).sin()));
    }
}

#[derive(Debug, Clone)]
pub struct SynthShape {
    pub name: String,
    pub image: GrayRaster,
    /// Contains straight-through crossings of 1-px lines.
    pub junction: bool,
}

fn shape(name: impl Into<String>, canvas: Canvas, junction: bool) -> SynthShape {
    SynthShape { name: name.into(), image: canvas.into_image(), junction }
}

/// Two diagonals of the given half extent crossing at the canvas center.
pub fn x_cross(half: i64) -> SynthShape {
    let s = (2 * half + 21) as usize;
    let c = s as f64 / 2.0;
    let h = half as f64;
    let mut cv = Canvas::new(s, s);
    cv.line((c - h, c - h), (c + h, c + h), 1);
    cv.line((c - h, c + h), (c + h, c - h), 1);
    shape(format!("x_{half}"), cv, true)
}

pub fn plus(half: i64) -> SynthShape {
    let s = (2 * half + 21) as usize;
    let c = (s / 2) as f64;
    let h = half as f64;
    let mut cv = Canvas::new(s, s);
    cv.line((c - h, c), (c + h, c), 1);
    cv.line((c, c - h), (c, c + h), 1);
    shape(format!("plus_{half}"), cv, true)
}

/// `n × n` lines at `spacing`, overhanging the outer crossings by half a cell.
pub fn grid(n: usize, spacing: usize) -> SynthShape {
    let extent = (n - 1) * spacing + spacing;
    let s = extent + 20;
    let mut cv = Canvas::new(s, s);
    let lo = 10.0;
    let hi = (10 + extent) as f64;
    for i in 0..n {
        let p = (10 + spacing / 2 + i * spacing) as f64;
        cv.line((lo, p), (hi, p), 1);
        cv.line((p, lo), (p, hi), 1);
    }
    shape(format!("grid_{n}x{n}_{spacing}"), cv, true)
}

/// `lines` straight lines through one center at evenly spaced angles.
pub fn star(lines: usize, radius: f64) -> SynthShape {
    let s = (2.0 * radius) as usize + 21;
    let c = (s / 2) as f64;
    let mut cv = Canvas::new(s, s);
    for i in 0..lines {
        let a = PI * i as f64 / lines as f64;
        let (dx, dy) = ((radius * a.cos()).round(), (radius * a.sin()).round());
        cv.line((c - dx, c - dy), (c + dx, c + dy), 1);
    }
    shape(format!("star_{lines}_{radius}"), cv, true)
}

pub fn tee(half: i64) -> SynthShape {
    let s = (2 * half + 21) as usize;
    let c = (s / 2) as f64;
    let h = half as f64;
    let mut cv = Canvas::new(s, s);
    cv.line((c - h, c - h), (c + h, c - h), 1);
    cv.line((c, c - h), (c, c + h), 1);
    shape(format!("tee_{half}"), cv, false)
}

/// Clean single-pixel circle.
pub fn circle(radius: i64) -> SynthShape {
    let s = (2 * radius + 21) as usize;
    let mut cv = Canvas::new(s, s);
    cv.circle((s / 2) as i64, (s / 2) as i64, radius);
    shape(format!("circle_{radius}"), cv, false)
}

pub fn line_at(angle_deg: f64, length: f64, width: u32) -> SynthShape {
    let s = length as usize + 21;
    let c = (s / 2) as f64;
    let (dx, dy) = (length / 2.0 * angle_deg.to_radians().cos(), length / 2.0 * angle_deg.to_radians().sin());
    let mut cv = Canvas::new(s, s);
    cv.line((c - dx, c - dy), (c + dx, c + dy), width);
    shape(format!("line_{angle_deg}_{length}_w{width}"), cv, false)
}

pub fn spiral(turns: f64, radius: f64, width: u32) -> SynthShape {
    let s = (2.0 * radius) as usize + 21;
    let c = (s / 2) as f64;
    let mut cv = Canvas::new(s, s);
    cv.curve((turns * radius * 8.0) as usize, width, |t| {
        let r = 3.0 + (radius - 3.0) * t;
        let a = TAU * turns * t;
        (c + r * a.cos(), c + r * a.sin())
    });
    shape(format!("spiral_{turns}_{radius}_w{width}"), cv, false)
}

pub fn wave(periods: f64, amplitude: f64, length: f64, width: u32) -> SynthShape {
    let (w, h) = (length as usize + 21, (2.0 * amplitude) as usize + 21);
    let cy = (h / 2) as f64;
    let mut cv = Canvas::new(w, h);
    cv.curve((length * 2.0) as usize, width, |t| (10.0 + length * t, cy + amplitude * (TAU * periods * t).sin()));
    shape(format!("wave_{periods}_{amplitude}_w{width}"), cv, false)
}

pub fn zigzag(teeth: usize, tooth: f64) -> SynthShape {
    let length = teeth as f64 * tooth;
    let mut cv = Canvas::new(length as usize + 21, tooth as usize + 21);
    let pts: Vec<(f64, f64)> =
        (0..=teeth).map(|i| (10.0 + i as f64 * tooth, if i % 2 == 0 { 10.0 } else { 10.0 + tooth })).collect();
    cv.polyline(&pts, 1);
    shape(format!("zigzag_{teeth}_{tooth}"), cv, false)
}

pub fn rectangle(w: f64, h: f64) -> SynthShape {
    let mut cv = Canvas::new(w as usize + 21, h as usize + 21);
    cv.polyline(&[(10.0, 10.0), (10.0 + w, 10.0), (10.0 + w, 10.0 + h), (10.0, 10.0 + h), (10.0, 10.0)], 1);
    shape(format!("rect_{w}x{h}"), cv, false)
}

pub fn ellipse(rx: f64, ry: f64, width: u32) -> SynthShape {
    let mut cv = Canvas::new((2.0 * rx) as usize + 21, (2.0 * ry) as usize + 21);
    cv.ellipse((rx + 10.0, ry + 10.0), rx, ry, width);
    shape(format!("ellipse_{rx}_{ry}_w{width}"), cv, false)
}

pub fn arc(radius: f64, sweep_deg: f64) -> SynthShape {
    let s = (2.0 * radius) as usize + 21;
    let c = (s / 2) as f64;
    let mut cv = Canvas::new(s, s);
    let sweep = sweep_deg.to_radians();
    cv.curve((radius * sweep * 2.0) as usize, 1, |t| (c + radius * (sweep * t).cos(), c + radius * (sweep * t).sin()));
    shape(format!("arc_{radius}_{sweep_deg}"), cv, false)
}

pub fn concentric(rings: i64, step: i64) -> SynthShape {
    let s = (2 * rings * step + 21) as usize;
    let mut cv = Canvas::new(s, s);
    for k in 1..=rings {
        cv.circle((s / 2) as i64, (s / 2) as i64, k * step);
    }
    shape(format!("concentric_{rings}_{step}"), cv, false)
}

pub fn dots(n: usize) -> SynthShape {
    let mut cv = Canvas::new(20 + 10 * n, 30);
    for i in 0..n {
        cv.plot(10 + 10 * i as i64, 15);
    }
    shape(format!("dots_{n}"), cv, false)
}

/// Face-like line drawing on a `size × size` canvas.
pub fn portrait(size: usize, width: u32) -> SynthShape {
    let s = size as f64;
    let k = s / 128.0;
    let mut cv = Canvas::new(size, size);
    let (cx, cy) = (s / 2.0, s * 0.52);
    cv.ellipse((cx, cy), 34.0 * k, 44.0 * k, width);
    for side in [-1.0, 1.0] {
        let ex = cx + side * 13.0 * k;
        let ey = cy - 10.0 * k;
        cv.ellipse((ex, ey), 6.0 * k, 3.5 * k, width);
        cv.curve(24, width, |t| (ex - 8.0 * k + 16.0 * k * t, ey - 9.0 * k - 3.0 * k * (PI * t).sin()));
        cv.curve(20, width, |t| {
            let a = PI * (0.6 + 0.8 * t);
            (cx + side * (34.0 * k * a.sin().abs() + 4.0 * k), cy + 12.0 * k * a.cos())
        });
    }
    cv.polyline(&[(cx, cy - 4.0 * k), (cx - 4.0 * k, cy + 10.0 * k), (cx + 2.0 * k, cy + 12.0 * k)], width);
    cv.curve(32, width, |t| (cx - 14.0 * k + 28.0 * k * t, cy + 24.0 * k + 5.0 * k * (PI * t).sin()));
    for i in 0..7 {
        let off = -27.0 * k + 9.0 * k * i as f64;
        cv.curve(40, width, |t| {
            let a = PI * (1.05 + 0.9 * t);
            (cx + off * 0.6 + 30.0 * k * a.cos() * 0.4, cy - 44.0 * k - 6.0 * k + 10.0 * k * a.sin() + off * 0.1)
        });
    }
    cv.line((cx - 10.0 * k, cy + 44.0 * k), (cx - 14.0 * k, s - 4.0 * k), width);
    cv.line((cx + 10.0 * k, cy + 44.0 * k), (cx + 14.0 * k, s - 4.0 * k), width);
    shape(format!("portrait_{size}_w{width}"), cv, false)
}

/// Junction-bearing shapes: straight 1-px crossings whose arms are shorter
/// than 10 mm at 0.25 mm/px while each full line is longer.
pub fn junction_corpus() -> Vec<SynthShape> {
    vec![
        x_cross(16),
        x_cross(20),
        x_cross(25),
        plus(22),
        plus(30),
        plus(36),
        grid(2, 30),
        grid(3, 30),
        grid(3, 36),
        star(3, 30.0),
        star(4, 30.0),
        star(4, 36.0),
    ]
}

/// Full test corpus (≥ 50 shapes).
pub fn corpus() -> Vec<SynthShape> {
    let mut out = junction_corpus();
    for a in [0.0, 15.0, 30.0, 45.0, 60.0, 90.0, 120.0, 160.0] {
        out.push(line_at(a, 60.0, 1));
    }
    out.extend([line_at(20.0, 80.0, 3), line_at(70.0, 50.0, 4)]);
    out.extend([circle(8), circle(20), circle(35), concentric(3, 8)]);
    out.extend([tee(15), tee(25), tee(35)]);
    out.extend([spiral(2.0, 40.0, 1), spiral(3.0, 50.0, 2), spiral(1.5, 30.0, 3)]);
    out.extend([wave(1.0, 15.0, 120.0, 1), wave(2.0, 10.0, 120.0, 1), wave(3.0, 20.0, 160.0, 2), wave(0.5, 25.0, 90.0, 3)]);
    out.extend([zigzag(4, 20.0), zigzag(6, 14.0), zigzag(3, 30.0)]);
    out.extend([rectangle(60.0, 40.0), rectangle(30.0, 70.0)]);
    out.extend([ellipse(40.0, 20.0, 1), ellipse(25.0, 45.0, 2), ellipse(30.0, 30.0, 3)]);
    out.extend([arc(30.0, 90.0), arc(40.0, 200.0), arc(25.0, 300.0)]);
    out.push(dots(4));
    out.extend([portrait(128, 1), portrait(128, 3), portrait(192, 2)]);
    out
}

/// 512 × 512 line-art portrait for throughput runs.
pub fn large_portrait() -> SynthShape {
    portrait(512, 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_large_and_named_uniquely() {
        let c = corpus();
        assert!(c.len() >= 50, "{}", c.len());
        let mut names: Vec<&str> = c.iter().map(|s| s.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), c.len());
        assert!(c.iter().all(|s| s.image.data().contains(&INK)));
    }

    #[test]
    fn bresenham_endpoints() {
        let mut cv = Canvas::new(10, 10);
        cv.line((1.0, 1.0), (8.0, 4.0), 1);
        let img = cv.into_image();
        assert_eq!(img.get(1, 1), INK);
        assert_eq!(img.get(8, 4), INK);
        assert_eq!(img.data().iter().filter(|v| **v == INK).count(), 8);
    }
}
