//! Probability that two obstacles met by one segment intersect, across a
//! sweep of radii at fixed intensity.
//!
//! `cargo run --release --example overlap_scaling -- [lambda] [length] [tubes]`

use obstacle_slowing::micro::estimate_overlap;
use obstacle_slowing::params::ModelParams;

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let lambda = args.first().copied().unwrap_or(1.0);
    let length = args.get(1).copied().unwrap_or(1.0);
    let tubes = args.get(2).copied().unwrap_or(200_000.0) as u64;
    println!("lambda={lambda} L={length} tubes={tubes}");
    println!("{:>8} {:>12} {:>12} {:>12} {:>12} {:>12}", "eps", "P(overlap)", "P/eps", "ci/eps", "pairs", "pairs/eps");
    for eps in [0.08, 0.04, 0.02, 0.01] {
        let params = ModelParams::new(2, eps, 0.5, lambda)?;
        let est = estimate_overlap(&params, length, tubes, 7, None)?;
        let p = est.probability;
        println!(
            "{eps:>8} {:>12.5e} {:>12.5} {:>12.5} {:>12.5e} {:>12.5}",
            p.estimate,
            p.estimate / eps,
            0.5 * (p.upper - p.lower) / eps,
            est.pairs_per_tube.mean,
            est.pairs_per_tube.mean / eps
        );
    }
    Ok(())
}
