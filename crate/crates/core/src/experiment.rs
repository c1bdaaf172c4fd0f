//! Orchestration of the `micro`, `meso`, `kinetic`, `compare` and `converge`
//! runs. Every CSV starts with a `#` line carrying the config hash and the
//! seed; wall-clock times go to `metadata.json` only, so CSV bodies are a
//! pure function of (config, seed).

use crate::analysis::{cdf_noise_scale, wasserstein1, Provenance, SpeedDistribution};
use crate::config::LoadedConfig;
use crate::ensemble::{EnsembleRun, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::kinetic::{backward_expectation, lambda_f, solve_forward, CollisionKernel, ForwardSolution, SpeedGrid};
use crate::meso::{run_meso_ensemble, MesoOptions};
use crate::micro::{run_micro_ensemble, MicroOptions};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Micro,
    Meso,
    Kinetic,
    Compare,
    Converge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Micro => "micro",
            Command::Meso => "meso",
            Command::Kinetic => "kinetic",
            Command::Compare => "compare",
            Command::Converge => "converge",
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'static str,
    config_sha256: &'a str,
    seed: u64,
    threads: Option<usize>,
    version: &'static str,
    started_unix: f64,
    finished_unix: f64,
    files: Vec<String>,
}

struct Writer {
    dir: PathBuf,
    header: String,
    files: Vec<PathBuf>,
}

impl Writer {
    fn csv<F: FnOnce(&mut dyn Write) -> Result<()>>(&mut self, name: &str, body: F) -> Result<()> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "{}", self.header)?;
        body(&mut out)?;
        out.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
        self.files.push(path);
        Ok(())
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Runs `command` and writes its artifacts to the output directory.
pub fn run(command: Command, loaded: &LoadedConfig, options: &RunOptions) -> Result<Artifacts> {
    let started = unix_now();
    let config = &loaded.config;
    let seed = options.seed.unwrap_or(config.master_seed);
    let dir = options.out_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    std::fs::create_dir_all(&dir)?;
    let mut writer = Writer {
        header: format!("# config_sha256={},seed={},command={}", loaded.sha256, seed, command.name()),
        dir: dir.clone(),
        files: Vec::new(),
    };
    let ctx = Context {
        loaded,
        seed,
        threads: options.threads,
    };
    match command {
        Command::Micro => run_micro(&ctx, &mut writer)?,
        Command::Meso => run_meso(&ctx, &mut writer)?,
        Command::Kinetic => run_kinetic(&ctx, &mut writer)?,
        Command::Compare => run_compare(&ctx, &mut writer)?,
        Command::Converge => run_converge(&ctx, &mut writer)?,
    }
    let files: Vec<String> = writer
        .files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let meta = Metadata {
        command: command.name(),
        config_sha256: &loaded.sha256,
        seed,
        threads: options.threads,
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
        files,
    };
    writer.json("metadata.json", &meta)?;
    Ok(Artifacts {
        dir,
        files: writer.files,
    })
}

struct Context<'a> {
    loaded: &'a LoadedConfig,
    seed: u64,
    threads: Option<usize>,
}

impl Context<'_> {
    fn micro(&self, epsilon: f64) -> Result<EnsembleRun> {
        let c = &self.loaded.config;
        let mut opts = MicroOptions::new(c.t_final, c.replicas, self.seed);
        opts.snapshot_times = c.snapshots.clone();
        opts.stop_threshold = c.stop_threshold;
        opts.threads = self.threads;
        run_micro_ensemble(&c.slowing_profile()?, &c.params(epsilon)?, &c.initial.law, &opts)
    }

    fn meso(&self) -> Result<EnsembleRun> {
        let c = &self.loaded.config;
        let mut opts = MesoOptions::new(c.t_final, c.replicas, self.seed);
        opts.snapshot_times = c.snapshots.clone();
        opts.threads = self.threads;
        run_meso_ensemble(&c.slowing_profile()?, &c.finest_params()?, &c.initial.law, &opts)
    }

    fn kernel(&self) -> Result<CollisionKernel> {
        let c = &self.loaded.config;
        Ok(CollisionKernel::new(&c.slowing_profile()?, &c.finest_params()?))
    }

    fn forward(&self) -> Result<ForwardSolution> {
        let c = &self.loaded.config;
        let grid = SpeedGrid::from_initial(&c.initial.law, c.initial.bound(), c.kinetic.cells)?;
        solve_forward(&self.kernel()?, &grid, c.t_final, c.forward_dt()?, &c.snapshots)
    }
}

fn write_ensemble(writer: &mut Writer, prefix: &str, run: &EnsembleRun) -> Result<()> {
    writer.csv(&format!("{prefix}_samples.csv"), |out| run.write_samples_csv(out))?;
    writer.csv(&format!("{prefix}_snapshots.csv"), |out| run.write_snapshot_csv(out))?;
    writer.json(&format!("{prefix}_summary.json"), &run.summary())
}

fn run_micro(ctx: &Context, writer: &mut Writer) -> Result<()> {
    for &eps in &ctx.loaded.config.epsilons {
        let run = ctx.micro(eps)?;
        write_ensemble(writer, &format!("micro_eps{eps}"), &run)?;
    }
    Ok(())
}

fn run_meso(ctx: &Context, writer: &mut Writer) -> Result<()> {
    write_ensemble(writer, "meso", &ctx.meso()?)
}

#[derive(Serialize)]
struct KineticRow {
    t: f64,
    moving_mass: f64,
    stopped_mass: f64,
    mean_speed: f64,
    lambda_f: f64,
    /// Backward-recursion values for a point initial law.
    backward_stopped: Option<f64>,
    backward_mean_speed: Option<f64>,
    backward_remainder: Option<f64>,
}

#[derive(Serialize)]
struct KineticSummary {
    steps: usize,
    max_step_drift: f64,
    rows: Vec<KineticRow>,
}

fn run_kinetic(ctx: &Context, writer: &mut Writer) -> Result<()> {
    let c = &ctx.loaded.config;
    let kernel = ctx.kernel()?;
    let sol = ctx.forward()?;
    writer.csv("kinetic_grid.csv", |out| sol.write_csv(out))?;
    let point = match c.initial.law {
        crate::ensemble::InitialLaw::Point { speed } => Some(speed),
        _ => None,
    };
    let mut rows = Vec::with_capacity(sol.snapshots.len());
    for (t, grid) in &sol.snapshots {
        let (mut bs, mut bm, mut br) = (None, None, None);
        if let Some(r0) = point {
            let stopped = backward_expectation(&kernel, |r| f64::from(u8::from(r == 0.0)), r0, *t, c.kinetic.n_max)?;
            let mean = backward_expectation(&kernel, |r| r, r0, *t, c.kinetic.n_max)?;
            bs = Some(stopped.value);
            bm = Some(mean.value);
            br = Some(stopped.remainder_bound.max(mean.remainder_bound));
        }
        rows.push(KineticRow {
            t: *t,
            moving_mass: grid.moving_mass(),
            stopped_mass: grid.stopped_mass(),
            mean_speed: grid.mean_of(|r| r),
            lambda_f: lambda_f(&kernel, &grid.as_distribution()),
            backward_stopped: bs,
            backward_mean_speed: bm,
            backward_remainder: br,
        });
    }
    writer.json(
        "kinetic_summary.json",
        &KineticSummary {
            steps: sol.steps,
            max_step_drift: sol.max_step_drift,
            rows,
        },
    )
}

/// Distance between the moving parts of two laws and the gap in stopped fractions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Discrepancy {
    pub w1: f64,
    pub w1_noise: f64,
    pub stopped_gap: f64,
    pub stopped_gap_stderr: f64,
}

/// A law split into its moving part and stopped fraction, with the sample
/// size behind it (infinite for deterministic laws).
struct Split {
    moving: SpeedDistribution,
    stopped: f64,
    samples: f64,
}

impl Split {
    fn from_snapshot(snap: &EnsembleSnapshot, provenance: Provenance) -> Self {
        Self {
            moving: snap.moving_law(provenance),
            stopped: snap.stopped_fraction().estimate,
            samples: snap.records.len() as f64,
        }
    }

    fn from_grid(grid: &SpeedGrid) -> Self {
        Self {
            moving: grid.as_distribution(),
            stopped: grid.stopped_mass() / grid.total_mass(),
            samples: f64::INFINITY,
        }
    }
}

fn discrepancy(p: &Split, q: &Split) -> Discrepancy {
    let (w1, w1_noise) = if p.moving.is_empty() || q.moving.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (
            wasserstein1(&p.moving, &q.moving).expect("non-empty"),
            cdf_noise_scale(&p.moving, &q.moving).expect("non-empty"),
        )
    };
    let var = |s: &Split| s.stopped * (1.0 - s.stopped) / s.samples;
    Discrepancy {
        w1,
        w1_noise,
        stopped_gap: (p.stopped - q.stopped).abs(),
        stopped_gap_stderr: (var(p) + var(q)).sqrt(),
    }
}

/// Micro at one radius against meso, on matching snapshots.
pub fn compare_runs(a: &EnsembleSnapshot, b: &EnsembleSnapshot) -> Discrepancy {
    discrepancy(
        &Split::from_snapshot(a, Provenance::Micro),
        &Split::from_snapshot(b, Provenance::Meso),
    )
}

/// An ensemble snapshot against a forward-solver grid.
pub fn compare_with_grid(a: &EnsembleSnapshot, grid: &SpeedGrid) -> Discrepancy {
    discrepancy(&Split::from_snapshot(a, Provenance::Meso), &Split::from_grid(grid))
}

fn run_compare(ctx: &Context, writer: &mut Writer) -> Result<()> {
    let c = &ctx.loaded.config;
    let eps = *c.epsilons.last().expect("validated");
    let micro = ctx.micro(eps)?;
    let meso = ctx.meso()?;
    let forward = ctx.forward()?;
    let mut rows: Vec<(f64, &'static str, Discrepancy)> = Vec::new();
    for ((mi, me), (t, grid)) in micro.snapshots.iter().zip(&meso.snapshots).zip(&forward.snapshots) {
        if mi.t != *t || me.t != *t {
            return Err(Error::Precondition("engines disagree on snapshot times".into()));
        }
        let split_mi = Split::from_snapshot(mi, Provenance::Micro);
        let split_me = Split::from_snapshot(me, Provenance::Meso);
        let split_ki = Split::from_grid(grid);
        rows.push((*t, "micro-meso", discrepancy(&split_mi, &split_me)));
        rows.push((*t, "micro-kinetic", discrepancy(&split_mi, &split_ki)));
        rows.push((*t, "meso-kinetic", discrepancy(&split_me, &split_ki)));
    }
    writer.csv("compare.csv", |out| {
        writeln!(out, "t,pair,epsilon,w1,w1_noise,stopped_gap,stopped_gap_stderr")?;
        for (t, pair, d) in &rows {
            writeln!(
                out,
                "{t},{pair},{eps},{},{},{},{}",
                d.w1, d.w1_noise, d.stopped_gap, d.stopped_gap_stderr
            )?;
        }
        Ok(())
    })?;
    print_table(&rows);
    Ok(())
}

fn print_table(rows: &[(f64, &'static str, Discrepancy)]) {
    println!("{:>8} {:>14} {:>12} {:>12} {:>12} {:>12}", "t", "pair", "W1", "W1 noise", "stop gap", "gap se");
    for (t, pair, d) in rows {
        println!(
            "{t:>8.4} {pair:>14} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            d.w1, d.w1_noise, d.stopped_gap, d.stopped_gap_stderr
        );
    }
}

/// One row of an ε sweep at `t_final`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub discrepancy: Discrepancy,
}

/// Micro runs at each radius (sharing `seed`, hence coupled) against one meso run.
pub fn convergence_table(meso: &EnsembleRun, micro_runs: &[(f64, EnsembleRun)]) -> Vec<ConvergenceRow> {
    micro_runs
        .iter()
        .map(|(eps, run)| ConvergenceRow {
            epsilon: *eps,
            discrepancy: compare_runs(run.final_snapshot(), meso.final_snapshot()),
        })
        .collect()
}

fn run_converge(ctx: &Context, writer: &mut Writer) -> Result<()> {
    let c = &ctx.loaded.config;
    let meso = ctx.meso()?;
    let mut micro_runs = Vec::with_capacity(c.epsilons.len());
    for &eps in &c.epsilons {
        micro_runs.push((eps, ctx.micro(eps)?));
    }
    let table = convergence_table(&meso, &micro_runs);
    writer.csv("converge.csv", |out| {
        writeln!(out, "epsilon,w1_to_meso,stopped_fraction_gap,w1_mc_stderr,gap_mc_stderr")?;
        for row in &table {
            let d = row.discrepancy;
            writeln!(
                out,
                "{},{},{},{},{}",
                row.epsilon, d.w1, d.stopped_gap, d.w1_noise, d.stopped_gap_stderr
            )?;
        }
        Ok(())
    })?;
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "epsilon", "W1", "W1 se", "stop gap", "gap se");
    for row in &table {
        let d = row.discrepancy;
        println!(
            "{:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            row.epsilon, d.w1, d.w1_noise, d.stopped_gap, d.stopped_gap_stderr
        );
    }
    Ok(())
}

/// Strips the leading `#` provenance line of an artifact.
pub fn csv_body(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect())
}
