use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{EdgeEnd, NodeKind, Pixel, SkeletonGraph};
use crate::geom::{angle_between_deg, Point};

/// Number of chain pixels used to estimate the direction an edge leaves
/// a junction.
pub const TANGENT_WINDOW: usize = 5;

/// An ordered run of 8-connected pixels. A single pixel is an isolated dot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelPath {
    pub points: Vec<Pixel>,
    pub closed: bool,
}

impl PixelPath {
    pub fn is_dot(&self) -> bool {
        self.points.len() == 1
    }

    /// Consecutive points (and the closing pair, if closed) are 8-neighbors.
    pub fn is_continuous(&self) -> bool {
        let ok = self.points.windows(2).all(|w| w[0].is_adjacent(w[1]));
        let closing = !self.closed
            || self.points.len() < 2
            || self.points[0].is_adjacent(*self.points.last().unwrap());
        ok && closing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub max_turn_deg: f64,
    pub min_path_px: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            max_turn_deg: 45.0,
            min_path_px: 4,
        }
    }
}

/// Two edge ends joined through a junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionPairing {
    pub first: EdgeEnd,
    pub second: EdgeEnd,
    pub turn_deg: f64,
}

fn end_pixels(graph: &SkeletonGraph, end: EdgeEnd) -> Vec<Pixel> {
    let mut px = graph.edges[end.edge].full_pixels();
    if end.at_b {
        px.reverse();
    }
    px
}

fn attachment(graph: &SkeletonGraph, end: EdgeEnd) -> Pixel {
    let e = &graph.edges[end.edge];
    if end.at_b {
        e.b_pixel
    } else {
        e.a_pixel
    }
}

/// Direction pointing away from the node along the edge.
fn outgoing_direction(graph: &SkeletonGraph, end: EdgeEnd) -> Point {
    let px = end_pixels(graph, end);
    let k = TANGENT_WINDOW.min(px.len() - 1);
    let (a, b) = (px[0], px[k]);
    Point::new(b.x as f64 - a.x as f64, b.y as f64 - a.y as f64)
}

/// Turning angle (degrees) when arriving along `from` and leaving along `to`.
pub(crate) fn turn_between(graph: &SkeletonGraph, from: EdgeEnd, to: EdgeEnd) -> f64 {
    let d1 = outgoing_direction(graph, from);
    let d2 = outgoing_direction(graph, to);
    if d1.norm() == 0.0 || d2.norm() == 0.0 {
        return 180.0;
    }
    180.0 - angle_between_deg(d1, d2)
}

/// Greedy pairing of the edge ends meeting at `node`: the pair with the
/// smallest turning angle is joined first, as long as the turn is strictly
/// below `max_turn_deg` (so a limit of 0 disables merging). Returned in the
/// order chosen.
pub fn junction_pairings(graph: &SkeletonGraph, node: usize, max_turn_deg: f64) -> Vec<JunctionPairing> {
    let ends = graph.incident_ends(node);
    let mut candidates = Vec::new();
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            candidates.push((turn_between(graph, ends[i], ends[j]), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = vec![false; ends.len()];
    let mut out = Vec::new();
    for (turn, i, j) in candidates {
        if turn >= max_turn_deg || used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        out.push(JunctionPairing {
            first: ends[i],
            second: ends[j],
            turn_deg: turn,
        });
    }
    out
}

/// Shortest 8-connected route between two pixels of one node.
fn route_within(pixels: &[Pixel], from: Pixel, to: Pixel) -> Vec<Pixel> {
    if from == to {
        return vec![from];
    }
    let mut prev: HashMap<Pixel, Pixel> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    prev.insert(from, from);
    while let Some(p) = queue.pop_front() {
        if p == to {
            break;
        }
        for &q in pixels {
            if p.is_adjacent(q) && !prev.contains_key(&q) {
                prev.insert(q, p);
                queue.push_back(q);
            }
        }
    }
    let mut route = vec![to];
    let mut cur = to;
    while cur != from {
        match prev.get(&cur) {
            Some(&p) => cur = p,
            None => return vec![from, to],
        }
        route.push(cur);
    }
    route.reverse();
    route
}

fn push_dedup(points: &mut Vec<Pixel>, p: Pixel) {
    if points.last() != Some(&p) {
        points.push(p);
    }
}

fn rotate_to_smallest(points: &mut [Pixel]) {
    if let Some(k) = points.iter().enumerate().min_by_key(|(_, p)| **p).map(|(k, _)| k) {
        points.rotate_left(k);
    }
}

/// Join skeleton edges into maximal pixel paths. At every junction the
/// edge ends are paired by [`junction_pairings`]; unpaired ends terminate
/// paths. Cycles become closed paths starting at their smallest pixel;
/// isolated nodes become one-pixel dots. Paths with fewer than
/// `min_path_px` points are dropped.
pub fn extract_paths(graph: &SkeletonGraph, opts: PathOptions) -> Vec<PixelPath> {
    let mut link: HashMap<EdgeEnd, EdgeEnd> = HashMap::new();
    for (id, node) in graph.nodes.iter().enumerate() {
        if node.kind != NodeKind::Junction {
            continue;
        }
        for pair in junction_pairings(graph, id, opts.max_turn_deg) {
            link.insert(pair.first, pair.second);
            link.insert(pair.second, pair.first);
        }
    }

    let node_at = |end: EdgeEnd| {
        let e = &graph.edges[end.edge];
        if end.at_b {
            e.b
        } else {
            e.a
        }
    };

    let mut used = vec![false; graph.edges.len()];
    // Walk from `start` (an end we enter through) until an unlinked end or
    // until the walk returns to `start`.
    let walk = |start: EdgeEnd, used: &mut Vec<bool>| -> (Vec<Pixel>, bool) {
        let mut points = Vec::new();
        let mut enter = start;
        loop {
            used[enter.edge] = true;
            for p in end_pixels(graph, enter) {
                push_dedup(&mut points, p);
            }
            let exit = EdgeEnd {
                edge: enter.edge,
                at_b: !enter.at_b,
            };
            let Some(&next) = link.get(&exit) else {
                return (points, false);
            };
            let node = &graph.nodes[node_at(exit)];
            for p in route_within(&node.pixels, attachment(graph, exit), attachment(graph, next)) {
                push_dedup(&mut points, p);
            }
            if next == start {
                if points.len() > 1 && points.first() == points.last() {
                    points.pop();
                }
                return (points, true);
            }
            if used[next.edge] {
                return (points, false);
            }
            enter = next;
        }
    };

    let mut out = Vec::new();
    for i in 0..graph.edges.len() {
        if used[i] {
            continue;
        }
        let a = EdgeEnd { edge: i, at_b: false };
        let b = EdgeEnd { edge: i, at_b: true };
        let start = if !link.contains_key(&a) {
            a
        } else if !link.contains_key(&b) {
            b
        } else {
            continue;
        };
        let (points, closed) = walk(start, &mut used);
        out.push(PixelPath { points, closed });
    }
    for i in 0..graph.edges.len() {
        if used[i] {
            continue;
        }
        let (mut points, closed) = walk(EdgeEnd { edge: i, at_b: false }, &mut used);
        if closed {
            rotate_to_smallest(&mut points);
        }
        out.push(PixelPath { points, closed });
    }
    for cycle in &graph.cycles {
        let mut points = cycle.clone();
        rotate_to_smallest(&mut points);
        out.push(PixelPath { points, closed: true });
    }
    for node in &graph.nodes {
        if node.kind == NodeKind::Isolated {
            out.push(PixelPath {
                points: vec![node.position],
                closed: false,
            });
        }
    }
    out.retain(|p| p.points.len() >= opts.min_path_px);
    out
}
