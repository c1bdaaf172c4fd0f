//! Obstacles met by a straight segment: crossing positions, impact
//! parameters and reconstructed centres for one seeded realisation, plus
//! the mean crossing count over many.
//!
//! `cargo run --example tube_sampling -- [dimension] [lambda] [length]`

use obstacle_slowing::micro::{sample_tube, sample_tube_with_offsets, union_coverage};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::rng::{stream, Lane};

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let d = args.first().copied().unwrap_or(2.0) as usize;
    let lambda = args.get(1).copied().unwrap_or(1.0);
    let length = args.get(2).copied().unwrap_or(5.0);
    let params = ModelParams::new(d, 0.05, 0.5, lambda)?;

    let tube = sample_tube_with_offsets(&mut stream(3, Lane::Tube, 0), &params, length)?;
    println!("d={d} lambda={lambda} L={length} sigma={:.4}", params.sigma());
    println!("{:>10} {:>8}  centre", "position", "h");
    for (j, c) in tube.crossings.iter().enumerate() {
        let centre = tube.centre(j).expect("offsets were sampled");
        let shown: Vec<String> = centre.iter().map(|x| format!("{x:.4}")).collect();
        println!("{:>10.4} {:>8.4}  ({})", c.arc_position, c.impact, shown.join(", "));
    }
    let coverage = union_coverage(&tube.crossings);
    println!("covered length in [0, L]: {:.4}", coverage.measure_up_to(length));

    let n = 20_000;
    let total: usize = (0..n)
        .map(|i| sample_tube(&mut stream(4, Lane::Tube, i), &params, length).map(|t| t.count_in(0.0, length)))
        .sum::<obstacle_slowing::Result<usize>>()?;
    println!(
        "mean crossings over {n} tubes: {:.4} (sigma L = {:.4})",
        total as f64 / n as f64,
        params.sigma() * length
    );
    Ok(())
}
