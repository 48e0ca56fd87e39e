//! Pixel paths to millimeter polylines to cubic Bezier strokes.

mod bezier;
mod polyline;
mod schneider;

use thiserror::Error;

pub use bezier::{stroke_length, CubicBezier, Stroke, LENGTH_FLATNESS};
pub use polyline::{simplify, to_workspace, PixelToMm, Polyline, WorkspacePath};
pub use schneider::{fit_stroke, FitOptions, MAX_REPARAMETERIZATIONS};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("polyline needs at least 2 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline has identical consecutive points at index {0}")]
    RepeatedPoint(usize),
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("stroke needs at least one segment")]
    EmptyStroke,
    #[error("segments {0} and {1} do not share an endpoint")]
    Discontinuous(usize, usize),
    #[error("closed stroke does not end where it starts")]
    OpenClosedStroke,
}
