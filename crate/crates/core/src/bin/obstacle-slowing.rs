use clap::{Args, Parser, Subcommand};
use obstacle_slowing::config::ExperimentConfig;
use obstacle_slowing::experiment::{run, Command, RunOptions};
use obstacle_slowing::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(version, about = "Particles slowed by Poisson obstacles: micro, meso and kinetic engines")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Finite-radius obstacle dynamics at every configured epsilon
    Micro(Common),
    /// Limit velocity-jump process
    Meso(Common),
    /// Forward grid solver and backward oracle
    Kinetic(Common),
    /// Micro (finest epsilon), meso and kinetic on one config
    Compare(Common),
    /// Micro-to-meso distance across the epsilon list
    Converge(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Micro(c) => (Command::Micro, c),
        Sub::Meso(c) => (Command::Meso, c),
        Sub::Kinetic(c) => (Command::Kinetic, c),
        Sub::Compare(c) => (Command::Compare, c),
        Sub::Converge(c) => (Command::Converge, c),
    };
    let result = ExperimentConfig::load(&common.config).and_then(|loaded| {
        let options = RunOptions {
            threads: common.threads,
            seed: common.seed,
            out_dir: common.out,
        };
        run(command, &loaded, &options)
    });
    match result {
        Ok(artifacts) => {
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                Error::NumericContract(_) => 3,
                _ => 1,
            })
        }
    }
}
