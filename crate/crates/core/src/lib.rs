//! Geometric core for vectorized HD-map construction.
//!
//! Map elements are ordered polylines in the bird's-eye-view plane. The crate
//! renders them at arbitrary vertex densities, matches predicted element sets
//! to ground truth under vertex-order equivalence, evaluates the progressive
//! polyline supervision losses with analytic gradients, runs a coarse-to-fine
//! fitting harness over free vertex coordinates, and scores predictions with
//! Chamfer-distance average precision.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command
//! line live in the companion `hdmap` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod eval;
pub mod geometry;
pub mod gradcheck;
pub mod hsmr;
pub mod losses;
pub mod matching;
pub mod refine;
pub mod scenegen;

pub use error::{Error, Result};
pub use geometry::{Point2, Polyline, Segment};
pub use hsmr::{DensitySchedule, ElementCategory, MapElement, PermutationSet};
pub use matching::{Assignment, CostMatrix, GroundTruthSet, MatchTarget, PredictedElement};
