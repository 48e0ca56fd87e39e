use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{BinaryRaster, Pixel, RasterError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Endpoint,
    Junction,
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    /// Endpoint/isolated pixel, or the rounded centroid of a junction cluster.
    pub position: Pixel,
    pub kind: NodeKind,
    /// Skeleton pixels owned by the node (one, except for junction clusters).
    pub pixels: Vec<Pixel>,
}

/// A pixel chain between two nodes. `chain` holds the interior pixels
/// only; `a_pixel`/`b_pixel` are the node pixels the chain attaches to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonEdge {
    pub a: usize,
    pub b: usize,
    pub a_pixel: Pixel,
    pub b_pixel: Pixel,
    pub chain: Vec<Pixel>,
}

impl SkeletonEdge {
    /// Attachment pixel, chain and far attachment pixel, walked from `a`.
    pub fn full_pixels(&self) -> Vec<Pixel> {
        let mut v = Vec::with_capacity(self.chain.len() + 2);
        v.push(self.a_pixel);
        v.extend_from_slice(&self.chain);
        if self.b_pixel != self.a_pixel || !self.chain.is_empty() {
            v.push(self.b_pixel);
        }
        v
    }
}

/// One end of an edge: `at_b` selects the `b` side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeEnd {
    pub edge: usize,
    pub at_b: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkeletonGraph {
    pub width: usize,
    pub height: usize,
    pub nodes: Vec<SkeletonNode>,
    pub edges: Vec<SkeletonEdge>,
    /// Closed chains that touch no node, each starting at its smallest pixel.
    pub cycles: Vec<Vec<Pixel>>,
}

impl SkeletonGraph {
    /// Number of edge ends incident to `node` (self-loops count twice).
    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.a == node) as usize + (e.b == node) as usize)
            .sum()
    }

    /// Edge ends incident to `node`, ordered by edge index then side.
    pub fn incident_ends(&self, node: usize) -> Vec<EdgeEnd> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.a == node {
                out.push(EdgeEnd { edge: i, at_b: false });
            }
            if e.b == node {
                out.push(EdgeEnd { edge: i, at_b: true });
            }
        }
        out
    }
}

/// Classify skeleton pixels by 8-neighbor count and trace the chains
/// between nodes. Adjacent junction pixels are merged into one node.
pub fn build_skeleton_graph(skeleton: &BinaryRaster) -> Result<SkeletonGraph, RasterError> {
    if let Some(p) = super::thin::find_reducible_block_pixel(skeleton) {
        return Err(RasterError::NotThinned { x: p.x, y: p.y });
    }
    let w = skeleton.width();
    let idx = |p: Pixel| p.y as usize * w + p.x as usize;
    let foreground = skeleton.foreground();
    let counts: HashMap<Pixel, usize> = foreground.iter().map(|&p| (p, skeleton.neighbor_count(p))).collect();

    let mut node_of: Vec<Option<usize>> = vec![None; w * skeleton.height()];
    let mut nodes: Vec<SkeletonNode> = Vec::new();
    for &p in &foreground {
        if node_of[idx(p)].is_some() {
            continue;
        }
        let kind = match counts[&p] {
            0 => NodeKind::Isolated,
            1 => NodeKind::Endpoint,
            2 => continue,
            _ => NodeKind::Junction,
        };
        let id = nodes.len();
        let pixels = if kind == NodeKind::Junction {
            let mut cluster = vec![p];
            node_of[idx(p)] = Some(id);
            let mut i = 0;
            while i < cluster.len() {
                let q = cluster[i];
                for r in skeleton.neighbors(q) {
                    if counts[&r] >= 3 && node_of[idx(r)].is_none() {
                        node_of[idx(r)] = Some(id);
                        cluster.push(r);
                    }
                }
                i += 1;
            }
            cluster.sort();
            cluster
        } else {
            node_of[idx(p)] = Some(id);
            vec![p]
        };
        let n = pixels.len() as f64;
        let cx = pixels.iter().map(|q| q.x as f64).sum::<f64>() / n;
        let cy = pixels.iter().map(|q| q.y as f64).sum::<f64>() / n;
        nodes.push(SkeletonNode {
            position: Pixel::new(cx.round() as u32, cy.round() as u32),
            kind,
            pixels,
        });
    }

    let mut visited = vec![false; w * skeleton.height()];
    let mut direct_links: HashSet<(Pixel, Pixel)> = HashSet::new();
    let mut edges = Vec::new();
    for (a, node) in nodes.iter().enumerate() {
        for &q in &node.pixels {
            for r in skeleton.neighbors(q) {
                if node_of[idx(r)] == Some(a) {
                    continue;
                }
                if let Some(b) = node_of[idx(r)] {
                    let key = if q < r { (q, r) } else { (r, q) };
                    if direct_links.insert(key) {
                        edges.push(SkeletonEdge { a, b, a_pixel: q, b_pixel: r, chain: Vec::new() });
                    }
                    continue;
                }
                if visited[idx(r)] {
                    continue;
                }
                let mut chain = vec![r];
                visited[idx(r)] = true;
                let mut prev = q;
                let mut cur = r;
                let end = loop {
                    let next = skeleton.neighbors(cur).find(|&n| n != prev);
                    let Some(next) = next else {
                        // unreachable for thinned input: chain pixels have two neighbors
                        break None;
                    };
                    if let Some(b) = node_of[idx(next)] {
                        break Some((b, next));
                    }
                    if visited[idx(next)] {
                        break None;
                    }
                    visited[idx(next)] = true;
                    chain.push(next);
                    prev = cur;
                    cur = next;
                };
                let (b, b_pixel) = end.unwrap_or((a, q));
                edges.push(SkeletonEdge { a, b, a_pixel: q, b_pixel, chain });
            }
        }
    }

    let mut cycles = Vec::new();
    let mut rest: Vec<Pixel> = foreground
        .iter()
        .copied()
        .filter(|&p| node_of[idx(p)].is_none() && !visited[idx(p)])
        .collect();
    rest.sort();
    for s in rest {
        if visited[idx(s)] {
            continue;
        }
        visited[idx(s)] = true;
        let mut cycle = vec![s];
        let mut cur = s;
        while let Some(next) = skeleton.neighbors(cur).find(|&n| !visited[idx(n)]) {
            visited[idx(next)] = true;
            cycle.push(next);
            cur = next;
        }
        cycles.push(cycle);
    }

    Ok(SkeletonGraph {
        width: w,
        height: skeleton.height(),
        nodes,
        edges,
        cycles,
    })
}
