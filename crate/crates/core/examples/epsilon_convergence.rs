//! Distance between the finite-radius ensemble and the limit jump process
//! as the obstacle radius shrinks at fixed collision rate. Micro runs share
//! their seed, so the interior obstacle positions are coupled across radii.
//!
//! `cargo run --release --example epsilon_convergence -- [replicas] [stop_threshold]`

use obstacle_slowing::ensemble::InitialLaw;
use obstacle_slowing::experiment::convergence_table;
use obstacle_slowing::meso::{run_meso_ensemble, MesoOptions};
use obstacle_slowing::micro::{run_micro_ensemble, MicroOptions};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::profile::SlowingProfile;

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let replicas = args.first().copied().unwrap_or(100_000.0) as u64;
    let threshold = args.get(1).copied();
    let profile = SlowingProfile::constant(1.0)?;
    let base = ModelParams::new(2, 0.08, 0.5, 1.0)?;
    let law = InitialLaw::Point { speed: 1.0 };
    let t = 1.0;
    let meso = run_meso_ensemble(&profile, &base, &law, &MesoOptions::new(t, replicas, 8))?;
    let mut micro = Vec::new();
    for eps in [0.08, 0.04, 0.02, 0.01, 0.005] {
        let mut options = MicroOptions::new(t, replicas, 8);
        options.stop_threshold = threshold;
        micro.push((eps, run_micro_ensemble(&profile, &base.with_epsilon(eps)?, &law, &options)?));
    }
    println!("{:>8} {:>11} {:>11} {:>11} {:>11} {:>9}", "eps", "W1", "W1 noise", "stop gap", "gap se", "W1/eps");
    for row in convergence_table(&meso, &micro) {
        let d = row.discrepancy;
        println!(
            "{:>8} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>9.3}",
            row.epsilon,
            d.w1,
            d.w1_noise,
            d.stopped_gap,
            d.stopped_gap_stderr,
            d.w1 / row.epsilon
        );
    }
    Ok(())
}
