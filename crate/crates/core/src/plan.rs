//! Stroke ordering and orientation to minimize pen-up travel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::Stroke;
use crate::geom::Point;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("plan references stroke {index} but only {count} strokes exist")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("plan visits stroke {0} more than once")]
    DuplicateIndex(usize),
    #[error("plan covers {planned} strokes, expected {count}")]
    IncompleteCoverage { planned: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub stroke: usize,
    pub reversed: bool,
}

/// One pen-up move between strokes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelMove {
    pub from: Point,
    pub to: Point,
}

impl TravelMove {
    pub fn length(&self) -> f64 {
        self.from.distance(self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokePlan {
    pub start: Point,
    pub items: Vec<PlanItem>,
    pub travel: Vec<TravelMove>,
    pub total_travel: f64,
    pub total_ink: f64,
}

fn entry(strokes: &[Stroke], item: PlanItem) -> Point {
    let s = &strokes[item.stroke];
    if item.reversed {
        s.end()
    } else {
        s.start()
    }
}

fn exit(strokes: &[Stroke], item: PlanItem) -> Point {
    let s = &strokes[item.stroke];
    if item.reversed {
        s.start()
    } else {
        s.end()
    }
}

fn travel_moves(start: Point, items: &[PlanItem], strokes: &[Stroke]) -> Vec<TravelMove> {
    let mut pen = start;
    items
        .iter()
        .map(|&it| {
            let m = TravelMove { from: pen, to: entry(strokes, it) };
            pen = exit(strokes, it);
            m
        })
        .collect()
}

impl StrokePlan {
    /// Builds a plan from an explicit order, computing travel and ink.
    pub fn from_items(start: Point, items: Vec<PlanItem>, strokes: &[Stroke]) -> Result<Self, PlanError> {
        validate(&items, strokes.len())?;
        let travel = travel_moves(start, &items, strokes);
        Ok(Self {
            start,
            total_travel: travel.iter().map(TravelMove::length).fold(0.0, |a, b| a + b),
            total_ink: strokes.iter().map(Stroke::length).fold(0.0, |a, b| a + b),
            travel,
            items,
        })
    }

    /// Strokes in drawing order, each oriented as planned.
    pub fn oriented_strokes(&self, strokes: &[Stroke]) -> Vec<Stroke> {
        self.items
            .iter()
            .map(|it| {
                let s = &strokes[it.stroke];
                if it.reversed {
                    s.reversed()
                } else {
                    s.clone()
                }
            })
            .collect()
    }
}

fn validate(items: &[PlanItem], count: usize) -> Result<(), PlanError> {
    let mut seen = vec![false; count];
    for it in items {
        if it.stroke >= count {
            return Err(PlanError::IndexOutOfRange { index: it.stroke, count });
        }
        if std::mem::replace(&mut seen[it.stroke], true) {
            return Err(PlanError::DuplicateIndex(it.stroke));
        }
    }
    if items.len() != count {
        return Err(PlanError::IncompleteCoverage { planned: items.len(), count });
    }
    Ok(())
}

/// Nearest-endpoint greedy ordering from `start`. Ties go to the lower
/// stroke index, then to forward orientation.
pub fn greedy_plan(strokes: &[Stroke], start: Point) -> StrokePlan {
    let mut visited = vec![false; strokes.len()];
    let mut items = Vec::with_capacity(strokes.len());
    let mut pen = start;
    for _ in 0..strokes.len() {
        let mut best: Option<(f64, PlanItem)> = None;
        for (i, s) in strokes.iter().enumerate() {
            if visited[i] {
                continue;
            }
            for (reversed, p) in [(false, s.start()), (true, s.end())] {
                let d = pen.distance(p);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, PlanItem { stroke: i, reversed }));
                }
            }
        }
        let (_, item) = best.expect("unvisited stroke remains");
        visited[item.stroke] = true;
        pen = exit(strokes, item);
        items.push(item);
    }
    StrokePlan::from_items(start, items, strokes).expect("greedy plan is a permutation")
}

/// Recompute total pen-up travel from scratch.
pub fn travel_cost(plan: &StrokePlan, strokes: &[Stroke]) -> Result<f64, PlanError> {
    for it in &plan.items {
        if it.stroke >= strokes.len() {
            return Err(PlanError::IndexOutOfRange { index: it.stroke, count: strokes.len() });
        }
    }
    Ok(travel_moves(plan.start, &plan.items, strokes).iter().map(TravelMove::length).fold(0.0, |a, b| a + b))
}

/// Smallest travel reduction accepted as an improvement.
const IMPROVEMENT_EPS: f64 = 1e-9;

/// Open-tour 2-opt. A move reverses `items[i..=j]` and flips each member's
/// orientation; single-item moves just flip one stroke. Scans `i` then
/// `j` in increasing order and applies the first improving move found,
/// continuing the scan. Stops after a pass with no improvement or after
/// `max_passes` passes.
pub fn two_opt_improve(plan: &StrokePlan, strokes: &[Stroke], max_passes: usize) -> Result<StrokePlan, PlanError> {
    validate(&plan.items, strokes.len())?;
    let mut items = plan.items.clone();
    let mut total = plan.total_travel;
    let n = items.len();
    let gap = |a: Point, b: Point| a.distance(b);
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n {
            for j in i..n {
                let before_pt = if i == 0 { plan.start } else { exit(strokes, items[i - 1]) };
                let first_in = entry(strokes, items[i]);
                let last_out = exit(strokes, items[j]);
                let mut old = gap(before_pt, first_in);
                let mut new = gap(before_pt, last_out);
                if j + 1 < n {
                    let after = entry(strokes, items[j + 1]);
                    old += gap(last_out, after);
                    new += gap(first_in, after);
                }
                if new < old - IMPROVEMENT_EPS {
                    items[i..=j].reverse();
                    for it in &mut items[i..=j] {
                        it.reversed = !it.reversed;
                    }
                    total += new - old;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let travel = travel_moves(plan.start, &items, strokes);
    Ok(StrokePlan {
        start: plan.start,
        items,
        travel,
        total_travel: total,
        total_ink: plan.total_ink,
    })
}
