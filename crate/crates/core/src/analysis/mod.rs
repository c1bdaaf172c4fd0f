//! Statistical comparison and invariant checks shared by the three engines.

mod distribution;
mod invariants;
pub mod stats;

pub use distribution::{cdf_noise_scale, wasserstein1, Provenance, SpeedDistribution, StoppedMass};
pub use invariants::{check_invariants, CheckResult, InvariantReport, InvariantSpec, Offender};
