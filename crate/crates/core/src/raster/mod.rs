//! Raster stage: grayscale input, binarization, thinning, skeleton graphs
//! and extraction of maximal continuous pixel paths.

mod graph;
mod paths;
mod pgm;
mod thin;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{build_skeleton_graph, EdgeEnd, NodeKind, SkeletonEdge, SkeletonGraph, SkeletonNode};
pub use paths::{extract_paths, junction_pairings, JunctionPairing, PathOptions, PixelPath, TANGENT_WINDOW};
pub use pgm::{read_pgm, write_pgm};
pub use thin::{find_reducible_block_pixel, is_simple, is_zhang_suen_deletable, thin};

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("raster dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("raster of {width}x{height} needs {expected} intensities, got {actual}")]
    SizeMismatch {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("input is not thinned: removable pixel ({x}, {y}) in a solid 2x2 block")]
    NotThinned { x: u32, y: u32 },
    #[error("malformed PGM: {0}")]
    Pgm(String),
}

/// Integer pixel coordinate; `x` grows rightwards, `y` downwards.
/// Ordering is lexicographic on `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// True when the two pixels are distinct 8-neighbors.
    pub fn is_adjacent(self, o: Pixel) -> bool {
        let dx = self.x.abs_diff(o.x);
        let dy = self.y.abs_diff(o.y);
        dx <= 1 && dy <= 1 && (dx | dy) != 0
    }
}

/// Offsets of the 8-neighborhood in clockwise order starting north
/// (P2..P9 in the usual thinning notation).
pub(crate) const RING: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// 8-bit grayscale image, 0 = black ink, 255 = white paper.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(RasterError::SizeMismatch {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    /// A blank sheet filled with `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Light-on-dark to dark-on-light.
    pub fn inverted(&self) -> GrayRaster {
        GrayRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| 255 - v).collect(),
        }
    }
}

/// Binary ink mask (`true` = ink).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            data: vec![false; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self, RasterError> {
        let mut r = Self::new(width, height)?;
        if data.len() != width * height {
            return Err(RasterError::SizeMismatch {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        r.data = data;
        Ok(r)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    /// Bounds-checked read; anything outside the grid is background.
    pub fn at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// All foreground pixels in row-major order.
    pub fn foreground(&self) -> Vec<Pixel> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.push(Pixel::new(x as u32, y as u32));
                }
            }
        }
        out
    }

    /// Foreground 8-neighbors of `p`, in ring order starting north.
    pub fn neighbors(&self, p: Pixel) -> impl Iterator<Item = Pixel> + '_ {
        RING.iter().filter_map(move |&(dx, dy)| {
            let nx = p.x as i64 + dx;
            let ny = p.y as i64 + dy;
            self.at(nx, ny).then(|| Pixel::new(nx as u32, ny as u32))
        })
    }

    pub fn neighbor_count(&self, p: Pixel) -> usize {
        self.neighbors(p).count()
    }

    /// Number of 8-connected foreground components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.data.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in self.foreground() {
            let si = start.y as usize * self.width + start.x as usize;
            if seen[si] {
                continue;
            }
            count += 1;
            seen[si] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                for q in self.neighbors(p) {
                    let qi = q.y as usize * self.width + q.x as usize;
                    if !seen[qi] {
                        seen[qi] = true;
                        stack.push(q);
                    }
                }
            }
        }
        count
    }

    /// Top-left pixel of the first fully-inked 2x2 block, scanning row-major.
    pub fn find_solid_block(&self) -> Option<Pixel> {
        for y in 0..self.height.saturating_sub(1) {
            for x in 0..self.width.saturating_sub(1) {
                if self.get(x, y) && self.get(x + 1, y) && self.get(x, y + 1) && self.get(x + 1, y + 1) {
                    return Some(Pixel::new(x as u32, y as u32));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Fixed(u8),
    Otsu,
}

/// Threshold used by Otsu's method when the histogram has a single level.
pub const DEGENERATE_OTSU_THRESHOLD: u8 = 127;

/// Otsu threshold over the intensity histogram. Ink is the class at or
/// below the threshold. When several thresholds reach the maximal
/// between-class variance, the midpoint of the first and last of them is
/// returned.
pub fn otsu_threshold(image: &GrayRaster) -> u8 {
    let mut hist = [0u64; 256];
    for &v in image.data() {
        hist[v as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() <= 1 {
        return DEGENERATE_OTSU_THRESHOLD;
    }
    let total = image.data().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut variances = [0.0f64; 256];
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for t in 0..256 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        variances[t] = w0 * w1 * (m0 - m1) * (m0 - m1);
    }
    let best = variances.iter().cloned().fold(0.0, f64::max);
    let tol = best * 1e-12;
    let first = variances.iter().position(|&v| v >= best - tol).unwrap_or(0);
    let last = variances.iter().rposition(|&v| v >= best - tol).unwrap_or(first);
    ((first + last) / 2) as u8
}

/// Pixels at or below the threshold become ink.
pub fn binarize(image: &GrayRaster, policy: Threshold) -> BinaryRaster {
    let threshold = match policy {
        Threshold::Fixed(t) => t,
        Threshold::Otsu => otsu_threshold(image),
    };
    BinaryRaster {
        width: image.width,
        height: image.height,
        data: image.data.iter().map(|&v| v <= threshold).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force Otsu: between-class variance straight from the
    /// definition, no running sums.
    fn brute_variance(data: &[u8], t: u8) -> f64 {
        let (lo, hi): (Vec<f64>, Vec<f64>) = {
            let lo = data.iter().filter(|&&v| v <= t).map(|&v| v as f64).collect::<Vec<_>>();
            let hi = data.iter().filter(|&&v| v > t).map(|&v| v as f64).collect::<Vec<_>>();
            (lo, hi)
        };
        if lo.is_empty() || hi.is_empty() {
            return 0.0;
        }
        let n = data.len() as f64;
        let w0 = lo.len() as f64 / n;
        let w1 = hi.len() as f64 / n;
        let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
        let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
        w0 * w1 * (m0 - m1).powi(2)
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(GrayRaster::new(0, 3, vec![]), Err(RasterError::EmptyDimensions { .. })));
        assert!(matches!(GrayRaster::new(2, 2, vec![0; 3]), Err(RasterError::SizeMismatch { .. })));
    }

    #[test]
    fn otsu_on_blank_page_finds_no_ink() {
        let img = GrayRaster::filled(16, 16, 255).unwrap();
        assert_eq!(otsu_threshold(&img), DEGENERATE_OTSU_THRESHOLD);
        assert_eq!(binarize(&img, Threshold::Otsu).count(), 0);
    }

    #[test]
    fn fixed_threshold_is_inclusive() {
        let img = GrayRaster::new(1, 1, vec![128]).unwrap();
        assert!(binarize(&img, Threshold::Fixed(128)).get(0, 0));
        assert!(!binarize(&img, Threshold::Fixed(127)).get(0, 0));
    }

    #[test]
    fn otsu_bimodal_matches_brute_force() {
        let data: Vec<u8> = (0..64).map(|i| if i % 2 == 0 { 10 } else { 240 }).collect();
        let img = GrayRaster::new(8, 8, data.clone()).unwrap();
        let t = otsu_threshold(&img);
        assert!(t > 10 && t < 240, "threshold {t}");
        let best = (0..=255u8).map(|t| brute_variance(&data, t)).fold(0.0, f64::max);
        assert!((brute_variance(&data, t) - best).abs() <= best * 1e-9);
        let bin = binarize(&img, Threshold::Otsu);
        for (i, &v) in data.iter().enumerate() {
            assert_eq!(bin.get(i % 8, i / 8), v == 10);
        }
    }

    #[test]
    fn otsu_is_a_variance_maximizer_on_ramps() {
        let data: Vec<u8> = (0..200u32).map(|i| ((i * 37 + i * i) % 256) as u8).collect();
        let img = GrayRaster::new(20, 10, data.clone()).unwrap();
        let t = otsu_threshold(&img);
        let best = (0..=255u8).map(|t| brute_variance(&data, t)).fold(0.0, f64::max);
        assert!((brute_variance(&data, t) - best).abs() <= best * 1e-9);
    }

    #[test]
    fn components_and_blocks() {
        let mut r = BinaryRaster::new(6, 6).unwrap();
        r.set(0, 0, true);
        r.set(1, 1, true);
        r.set(4, 4, true);
        assert_eq!(r.component_count(), 2);
        assert_eq!(r.find_solid_block(), None);
        r.set(4, 5, true);
        r.set(5, 4, true);
        r.set(5, 5, true);
        assert_eq!(r.find_solid_block(), Some(Pixel::new(4, 4)));
    }
}
