//! Ensemble of the limit jump process: stopped fraction and mean speed at
//! several times, for a uniform initial speed law.
//!
//! `cargo run --release --example meso_ensemble -- [replicas] [dimension]`

use obstacle_slowing::analysis::Provenance;
use obstacle_slowing::ensemble::InitialLaw;
use obstacle_slowing::meso::{run_meso_ensemble, MesoOptions};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::profile::SlowingProfile;

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let replicas = args.first().copied().unwrap_or(100_000.0) as u64;
    let d = args.get(1).copied().unwrap_or(3.0) as usize;
    let params = ModelParams::new(d, 0.05, 0.4, 1.0)?;
    let profile = SlowingProfile::constant(1.0)?;
    let law = InitialLaw::Uniform { min: 0.2, max: 1.0 };
    let mut options = MesoOptions::new(3.0, replicas, 2024);
    options.snapshot_times = vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
    let run = run_meso_ensemble(&profile, &params, &law, &options)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "stopped", "ci half", "mean speed");
    for snap in &run.snapshots {
        let stopped = snap.stopped_fraction();
        let mean = snap.mean_of(|v| v);
        let moving = snap.moving_law(Provenance::Meso);
        println!(
            "{:>6.2} {:>12.5} {:>12.5} {:>12.5}   (moving mean {:.5})",
            snap.t,
            stopped.estimate,
            0.5 * (stopped.upper - stopped.lower),
            mean.mean,
            moving.mean().unwrap_or(0.0)
        );
    }
    Ok(())
}
