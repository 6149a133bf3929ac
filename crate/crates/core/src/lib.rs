//! Coarse geometry of Heintze, Sol-type and lamplighter groups.
//!
//! - [`model`]: group arithmetic and left-invariant metrics.
//! - [`coarse`]: closed-form coarse distances and critical heights.
//! - [`numeric`]: lattice Dijkstra distances and geodesic shooting.
//! - [`similarity`]: sampling and rough-similarity verdicts.
//! - [`lamplighter`]: word metrics on `Z/m ≀ Z`.

pub mod coarse;
pub mod lamplighter;
pub mod model;
pub mod numeric;
pub mod par;
pub mod similarity;

pub use coarse::{CoarseError, CoarsePath};
pub use model::{FrameMetric, GroupPoint, HeintzeModel, Model, ModelError, ModelSpec, SolTypeModel};
pub use numeric::{DistanceEstimate, GridSpec, NumericError};
