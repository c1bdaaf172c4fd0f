//! The same initial law pushed through the finite-radius engine, the jump
//! process and the forward grid solver, compared pairwise at the end time.
//!
//! `cargo run --release --example cross_engine_compare -- [epsilon] [replicas]`

use obstacle_slowing::ensemble::InitialLaw;
use obstacle_slowing::experiment::{compare_runs, compare_with_grid};
use obstacle_slowing::kinetic::{solve_forward, CollisionKernel, SpeedGrid};
use obstacle_slowing::meso::{run_meso_ensemble, MesoOptions};
use obstacle_slowing::micro::{run_micro_ensemble, MicroOptions};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::profile::SlowingProfile;

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let eps = args.first().copied().unwrap_or(0.02);
    let replicas = args.get(1).copied().unwrap_or(50_000.0) as u64;
    let params = ModelParams::new(2, eps, 0.5, 1.0)?;
    let profile = SlowingProfile::affine(1.0, 0.5, None)?;
    let law = InitialLaw::Uniform { min: 0.3, max: 1.0 };
    let t = 1.0;

    let micro = run_micro_ensemble(&profile, &params, &law, &MicroOptions::new(t, replicas, 5))?;
    let meso = run_meso_ensemble(&profile, &params, &law, &MesoOptions::new(t, replicas, 6))?;
    let kernel = CollisionKernel::new(&profile, &params);
    let grid = SpeedGrid::from_initial(&law, 1.0, 1000)?;
    let forward = solve_forward(&kernel, &grid, t, 1e-3 / kernel.sigma(), &[])?;

    let rows = [
        ("micro-meso", compare_runs(micro.final_snapshot(), meso.final_snapshot())),
        ("micro-kinetic", compare_with_grid(micro.final_snapshot(), forward.final_grid())),
        ("meso-kinetic", compare_with_grid(meso.final_snapshot(), forward.final_grid())),
    ];
    println!("eps={eps} replicas={replicas} t={t}");
    println!("{:>14} {:>11} {:>11} {:>11} {:>11}", "pair", "W1", "W1 noise", "stop gap", "gap se");
    for (name, d) in rows {
        println!(
            "{name:>14} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
            d.w1, d.w1_noise, d.stopped_gap, d.stopped_gap_stderr
        );
    }
    Ok(())
}
