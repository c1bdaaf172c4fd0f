//! Deterministic views of the limit equation: the stopping rate, the
//! backward expectation with its truncation bound and the forward grid
//! solution for a monokinetic start.
//!
//! `cargo run --release --example kinetic_oracles -- [r0] [t]`

use obstacle_slowing::analysis::{Provenance, SpeedDistribution};
use obstacle_slowing::ensemble::InitialLaw;
use obstacle_slowing::kinetic::{backward_expectation, forward_series, lambda_f, solve_forward, CollisionKernel, SpeedGrid};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::profile::SlowingProfile;

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let r0 = args.first().copied().unwrap_or(0.6);
    let t = args.get(1).copied().unwrap_or(1.0);
    let params = ModelParams::new(2, 0.05, 0.5, 1.0)?;
    let profile = SlowingProfile::constant(1.0)?;
    let kernel = CollisionKernel::new(&profile, &params);

    println!("k(u): per-collision stopping probability");
    for u in [0.1, 0.3, 0.6, 0.9, 1.0] {
        println!("  u={u:<4} k={:.6}", kernel.k_of_u(u));
    }
    let point = SpeedDistribution::from_weighted(vec![(r0, 1.0)], Provenance::Kinetic)?;
    println!("lambda_F of a point mass at {r0}: {:.6}", lambda_f(&kernel, &point));

    let stopped = |r: f64| if r == 0.0 { 1.0 } else { 0.0 };
    println!("stopped mass at t={t} from speed {r0}:");
    for n in [1, 2, 4, 8] {
        let b = backward_expectation(&kernel, stopped, r0, t, n)?;
        println!("  N={n}: {:.6} (+- {:.2e})", b.value, b.remainder_bound);
    }
    println!("  direct series N=2: {:.6}", forward_series(&kernel, stopped, r0, t, 2)?);

    let grid = SpeedGrid::from_initial(&InitialLaw::Point { speed: r0 }, 1.0, 1000)?;
    let sol = solve_forward(&kernel, &grid, t, 1e-3 / kernel.sigma(), &[])?;
    let last = sol.final_grid();
    println!(
        "forward grid: stopped {:.6}, moving {:.6}, {} steps, drift {:.1e}",
        last.stopped_mass(),
        last.moving_mass(),
        sol.steps,
        sol.max_step_drift
    );
    Ok(())
}
