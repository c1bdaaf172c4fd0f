//! Exit speed after crossing one obstacle, as a function of the impact
//! parameter, for three slowing profiles.
//!
//! `cargo run --example crossing_law -- [v_in] [kappa]`

use obstacle_slowing::profile::SlowingProfile;

fn main() -> obstacle_slowing::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let v_in = args.first().copied().unwrap_or(1.0);
    let kappa = args.get(1).copied().unwrap_or(0.5);
    let profiles = [
        ("S=1", SlowingProfile::constant(1.0)?),
        ("S=1+u", SlowingProfile::affine(1.0, 1.0, None)?),
        ("S=1.5+0.5cos(3u)", SlowingProfile::tabulate(|u| 1.5 + 0.5 * (3.0 * u).cos(), 4.0, 400)?),
    ];
    println!("v_in={v_in} kappa={kappa}");
    print!("{:>6}", "h");
    for (name, _) in &profiles {
        print!(" {name:>18}");
    }
    println!();
    for i in 0..=10 {
        let h = i as f64 / 10.0;
        print!("{h:>6.2}");
        for (_, p) in &profiles {
            print!(" {:>18.6}", p.exit_speed(v_in, kappa, h)?);
        }
        println!();
    }
    Ok(())
}
