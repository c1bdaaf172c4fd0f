//! Event history of a single particle in a frozen obstacle field at finite
//! radius: entries, exits and the speed at each.
//!
//! `cargo run --example micro_trajectory -- [epsilon] [seed]`

use obstacle_slowing::micro::{advance_micro, jacobian_factor, sample_tube};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::profile::SlowingProfile;
use obstacle_slowing::rng::{stream, Lane};

fn main() -> obstacle_slowing::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map(|a| a.parse().expect("epsilon")).unwrap_or(0.05);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(1);
    let params = ModelParams::new(2, eps, 0.5, 1.0)?;
    let profile = SlowingProfile::affine(1.0, 0.5, None)?;
    let (v0, t_final) = (1.0, 2.0);
    let tube = sample_tube(&mut stream(seed, Lane::Tube, 0), &params, v0 * t_final)?;
    let log = advance_micro(&profile, &params, &tube, v0, t_final, 1e-6 * v0, &[0.5, 1.0, 1.5])?;
    println!("{:>10} {:>10} {:>12}  kind", "time", "arc", "speed");
    for e in &log.events {
        println!("{:>10.5} {:>10.5} {:>12.6e}  {:?}", e.time, e.arc_length, e.speed, e.kind);
    }
    for (t, r) in &log.samples {
        println!("t={t:<4} speed={:.6} arc={:.5} stopped={}", r.speed, r.arc_length, r.stopped);
    }
    let last = log.final_event();
    if last.speed > 0.0 {
        println!("jacobian factor of the velocity map: {:.6}", jacobian_factor(&profile, v0, last.speed, 2)?);
    }
    Ok(())
}
