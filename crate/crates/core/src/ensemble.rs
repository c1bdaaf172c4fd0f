//! Types and plumbing shared by the micro and meso ensemble runners: the
//! initial law, per-particle records at snapshot times, CSV output and the
//! schedule-independent parallel replica map.

use crate::analysis::{stats, Provenance, SpeedDistribution, StoppedMass};
use crate::error::{Error, Result};
use crate::micro::TrajectoryLog;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Law of the initial speed. Directions are isotropic; positions start at
/// the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialLaw {
    Point { speed: f64 },
    Uniform { min: f64, max: f64 },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialLaw::Point { speed } if speed > 0.0 && speed.is_finite() => Ok(()),
            InitialLaw::Point { speed } => Err(Error::config(
                "initial.speed",
                format!("must be > 0, got {speed}"),
            )),
            InitialLaw::Uniform { min, max } if min > 0.0 && max >= min && max.is_finite() => Ok(()),
            InitialLaw::Uniform { min, max } => Err(Error::config(
                "initial",
                format!("uniform law needs 0 < min <= max, got [{min}, {max}]"),
            )),
        }
    }

    /// Largest speed in the support.
    pub fn max_speed(&self) -> f64 {
        match *self {
            InitialLaw::Point { speed } => speed,
            InitialLaw::Uniform { max, .. } => max,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialLaw::Point { speed } => speed,
            InitialLaw::Uniform { min, max } => {
                if max == min {
                    min
                } else {
                    min + (max - min) * rng.random::<f64>()
                }
            }
        }
    }

    /// `E[f(speed)]` by the exact law (Gauss-Legendre for the uniform case).
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match *self {
            InitialLaw::Point { speed } => f(speed),
            InitialLaw::Uniform { min, max } => {
                if max == min {
                    f(min)
                } else {
                    crate::quad::UnitRule::new(64).integrate(min, max, f) / (max - min)
                }
            }
        }
    }
}

/// Uniform direction on the unit sphere in `d` dimensions.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// One particle at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleRecord {
    pub replica: u64,
    pub speed: f64,
    pub arc_length: f64,
    pub stopped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSnapshot {
    pub t: f64,
    pub records: Vec<ParticleRecord>,
}

impl EnsembleSnapshot {
    pub fn stopped_count(&self) -> u64 {
        self.records.iter().filter(|r| r.stopped).count() as u64
    }

    pub fn moving_count(&self) -> u64 {
        self.records.len() as u64 - self.stopped_count()
    }

    pub fn stopped_mass(&self) -> StoppedMass {
        StoppedMass(self.stopped_count() as f64)
    }

    pub fn stopped_fraction(&self) -> stats::Proportion {
        stats::proportion(self.stopped_count(), self.records.len() as u64, 1.96)
    }

    /// Unit-weight law of the speeds of moving particles.
    pub fn moving_law(&self, provenance: Provenance) -> SpeedDistribution {
        SpeedDistribution::from_speeds(
            self.records.iter().filter(|r| !r.stopped).map(|r| r.speed),
            provenance,
        )
        .expect("engine speeds are finite and non-negative")
    }

    /// Per-particle average of `f(speed)`, counting stopped particles at `f(0)`.
    pub fn mean_of<F: Fn(f64) -> f64>(&self, f: F) -> stats::MeanEstimate {
        stats::mean_stderr(
            self.records
                .iter()
                .map(|r| if r.stopped { f(0.0) } else { f(r.speed) }),
        )
    }
}

/// Output of a micro or meso ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub provenance: Provenance,
    pub master_seed: u64,
    pub replicas: u64,
    pub snapshots: Vec<EnsembleSnapshot>,
    /// Full event logs, present when requested.
    pub logs: Vec<TrajectoryLog>,
}

impl EnsembleRun {
    pub fn final_snapshot(&self) -> &EnsembleSnapshot {
        self.snapshots.last().expect("at least one snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&EnsembleSnapshot> {
        self.snapshots.iter().find(|s| s.t == t)
    }

    /// CSV with header `replica,t,speed,arc_length,stopped_flag`, rows ordered
    /// by snapshot then replica. Floats use Rust's shortest round-trip format,
    /// so the body is a pure function of the results.
    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replica,t,speed,arc_length,stopped_flag")?;
        for snap in &self.snapshots {
            for r in &snap.records {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.replica,
                    snap.t,
                    r.speed,
                    r.arc_length,
                    u8::from(r.stopped)
                )?;
            }
        }
        Ok(())
    }

    /// Per-snapshot summary CSV: masses, stopped fraction and speed moments.
    pub fn write_snapshot_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "t,moving_mass,stopped_mass,stopped_fraction,stopped_fraction_stderr,mean_speed,mean_speed_stderr"
        )?;
        for snap in &self.snapshots {
            let frac = snap.stopped_fraction();
            let mean = snap.mean_of(|s| s);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                snap.t,
                snap.moving_count(),
                snap.stopped_count(),
                frac.estimate,
                frac.stderr,
                mean.mean,
                mean.stderr
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            provenance: self.provenance,
            master_seed: self.master_seed,
            replicas: self.replicas,
            snapshots: self
                .snapshots
                .iter()
                .map(|s| SnapshotSummary {
                    t: s.t,
                    moving_mass: s.moving_count(),
                    stopped_mass: s.stopped_count(),
                    stopped_fraction: s.stopped_fraction(),
                    mean_speed: s.mean_of(|v| v),
                    mean_speed_squared: s.mean_of(|v| v * v),
                    mean_arc_length: stats::mean_stderr(s.records.iter().map(|r| r.arc_length)),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotSummary {
    pub t: f64,
    pub moving_mass: u64,
    pub stopped_mass: u64,
    pub stopped_fraction: stats::Proportion,
    pub mean_speed: stats::MeanEstimate,
    pub mean_speed_squared: stats::MeanEstimate,
    pub mean_arc_length: stats::MeanEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub provenance: Provenance,
    pub master_seed: u64,
    pub replicas: u64,
    pub snapshots: Vec<SnapshotSummary>,
}

/// Validates and sorts snapshot times; every time must lie in `[0, t_final]`
/// and `t_final` is always included.
pub fn normalize_snapshots(times: &[f64], t_final: f64) -> Result<Vec<f64>> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::domain(format!("t_final must be >= 0, got {t_final}")));
    }
    let mut out: Vec<f64> = times.to_vec();
    if out.iter().any(|&t| !(t >= 0.0 && t <= t_final)) {
        return Err(Error::domain("snapshot times must lie in [0, t_final]"));
    }
    out.push(t_final);
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Maps `work` over replica indices `0..replicas`, in parallel, returning
/// results in index order. With `threads = Some(n)` a dedicated pool of `n`
/// workers is used. Each replica must derive its randomness from its own
/// index, which makes the output independent of the schedule.
pub fn map_replicas<T, F>(replicas: u64, threads: Option<usize>, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let run = || (0..replicas).into_par_iter().map(&work).collect::<Vec<T>>();
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    }
}

/// Regroups per-replica snapshot rows into per-time snapshots.
pub(crate) fn transpose(times: &[f64], per_replica: Vec<Vec<ParticleRecord>>) -> Vec<EnsembleSnapshot> {
    let mut snaps: Vec<EnsembleSnapshot> = times
        .iter()
        .map(|&t| EnsembleSnapshot {
            t,
            records: Vec::with_capacity(per_replica.len()),
        })
        .collect();
    for rows in per_replica {
        for (snap, rec) in snaps.iter_mut().zip(rows) {
            snap.records.push(rec);
        }
    }
    snaps
}
