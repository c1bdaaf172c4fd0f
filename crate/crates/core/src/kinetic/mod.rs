//! Deterministic solvers for the limit equation in the spatially homogeneous
//! setting: the per-collision stopping probability `k(u)`, the stopping rate
//! `λ_F`, a backward (mild-solution) recursion for expectations and a
//! forward Markov-chain solver on a speed grid.
//!
//! `λ_F` carries the factor `σ`: with collision rate `ℓ(v) = σ|v|` this is
//! what makes moving plus stopped mass constant in time.

mod backward;
mod forward;
mod kernel;
mod series;

pub use backward::{backward_expectation, backward_expectation_with, BackwardOptions, BackwardResult};
pub use forward::{solve_forward, ForwardSolution, SpeedGrid};
pub use kernel::{lambda_f, CollisionKernel, KERNEL_RULE_DEGREE};
pub use series::forward_series;
