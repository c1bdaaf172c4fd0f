//! Simulation of particles slowed down by a random field of spherical
//! obstacles with Poisson centres.
//!
//! Three engines describe the same speed law at different levels:
//!
//! - [`micro`]: exact dynamics at finite obstacle radius `ε`, integrated
//!   through the overlapping chords of the obstacles crossed by a straight
//!   tube;
//! - [`meso`]: the velocity-jump process obtained as `ε → 0` at fixed
//!   `σ = λ B^{d−1}`, absorbed at zero speed;
//! - [`kinetic`]: deterministic solvers for the limit equation.
//!
//! [`analysis`] compares them and checks structural invariants; [`config`]
//! and [`experiment`] drive runs from a TOML file.

pub mod analysis;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod kinetic;
pub mod meso;
pub mod micro;
pub mod params;
pub mod profile;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
