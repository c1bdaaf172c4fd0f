//! Exact simulation of the finite-radius dynamics.
//!
//! A particle never changes direction, so only obstacles whose centres lie
//! within `ε` of its ray matter. Those are sampled lazily along the ray
//! ([`sample_tube`]), their chords are merged ([`union_coverage`]) and the
//! speed is integrated exactly in the `a` coordinate, which drops by `κ/ε`
//! per unit of covered arc length ([`advance_micro`]).

mod coverage;
mod engine;
mod ensemble;
mod overlap;
mod tube;

pub use coverage::{union_coverage, CoverageFunction};
pub use engine::{advance_micro, jacobian_factor, EventKind, TrajectoryEvent, TrajectoryLog};
pub use ensemble::{run_micro_ensemble, MicroOptions};
pub use overlap::{estimate_overlap, overlap_statistics, sample_overlap_tubes, OverlapEstimate};
pub use tube::{sample_impact, sample_tube, sample_tube_with_offsets, Crossing, SeedRecord, TubeRealization};
