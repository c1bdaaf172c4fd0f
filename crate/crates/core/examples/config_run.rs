//! Loads a TOML experiment and runs one command through the library, the
//! same path the command-line tool takes.
//!
//! `cargo run --release --example config_run -- [config] [command] [out_dir]`

use obstacle_slowing::config::ExperimentConfig;
use obstacle_slowing::experiment::{run, Command, RunOptions};

fn main() -> obstacle_slowing::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/baseline.toml").into());
    let command = match args.next().as_deref().unwrap_or("compare") {
        "micro" => Command::Micro,
        "meso" => Command::Meso,
        "kinetic" => Command::Kinetic,
        "converge" => Command::Converge,
        _ => Command::Compare,
    };
    let loaded = ExperimentConfig::load(std::path::Path::new(&path))?;
    println!("config {path} sha256={}", loaded.sha256);
    let options = RunOptions {
        threads: None,
        seed: None,
        out_dir: args.next().map(Into::into),
    };
    let artifacts = run(command, &loaded, &options)?;
    for f in &artifacts.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
