use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::refine::StepRecord;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),

    #[error("degenerate segment: endpoints closer than 1e-9 m")]
    DegenerateSegment,

    #[error("segments are not adjacent: next.a must equal prev.b")]
    NotAdjacent,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density {density} is below the minimum of {min}")]
    InvalidDensity { density: usize, min: usize },

    #[error("density mismatch: expected {expected} vertices, got {actual}")]
    DensityMismatch { expected: usize, actual: usize },

    #[error("invalid density schedule: {0}")]
    InvalidSchedule(String),

    #[error("cannot move from density {from} to {to}: only d -> d or d -> 2d-1 is allowed")]
    ScheduleViolation { from: usize, to: usize },

    #[error("invalid map element: {0}")]
    InvalidElement(String),

    #[error("cost matrix must be square: {rows} rows, {cols} columns")]
    NonSquare { rows: usize, cols: usize },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("set size mismatch: {0}")]
    SizeMismatch(String),

    #[error("predicted edge {edge} is degenerate")]
    DegenerateEdge { edge: usize },

    #[error("loss diverged at layer {layer}, step {step}")]
    Diverged {
        layer: usize,
        step: usize,
        trajectory: Box<Vec<StepRecord>>,
    },
}
