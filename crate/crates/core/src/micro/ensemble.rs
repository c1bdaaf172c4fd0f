use super::{advance_micro, sample_tube, SeedRecord, TrajectoryLog};
use crate::analysis::Provenance;
use crate::ensemble::{
    map_replicas, normalize_snapshots, random_direction, transpose, EnsembleRun, InitialLaw, ParticleRecord,
};
use crate::error::Result;
use crate::params::ModelParams;
use crate::profile::SlowingProfile;
use crate::rng::{stream, Lane};

#[derive(Debug, Clone)]
pub struct MicroOptions {
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    pub replicas: u64,
    pub master_seed: u64,
    /// Speed at or below which a particle counts as stopped. Defaults to
    /// `1e−6 ·` the largest initial speed.
    pub stop_threshold: Option<f64>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Keep the full event log of every replica.
    pub keep_logs: bool,
    /// Draw an isotropic direction per particle instead of the first axis.
    pub full_positions: bool,
}

impl MicroOptions {
    pub fn new(t_final: f64, replicas: u64, master_seed: u64) -> Self {
        Self {
            t_final,
            snapshot_times: Vec::new(),
            replicas,
            master_seed,
            stop_threshold: None,
            threads: None,
            keep_logs: false,
            full_positions: false,
        }
    }
}

/// Monte Carlo over obstacle configurations and initial speeds.
///
/// Replica `i` draws its speed, direction and tube from streams keyed by
/// `(master_seed, i)`; the result is independent of the thread count.
pub fn run_micro_ensemble(
    profile: &SlowingProfile,
    params: &ModelParams,
    initial: &InitialLaw,
    options: &MicroOptions,
) -> Result<EnsembleRun> {
    initial.validate()?;
    let times = normalize_snapshots(&options.snapshot_times, options.t_final)?;
    let threshold = options
        .stop_threshold
        .unwrap_or(1e-6 * initial.max_speed());
    let seed = options.master_seed;

    let per_replica: Vec<Result<(Vec<ParticleRecord>, Option<TrajectoryLog>)>> =
        map_replicas(options.replicas, options.threads, |i| {
            let v0 = initial.sample(&mut stream(seed, Lane::InitialState, i));
            let direction = options
                .full_positions
                .then(|| random_direction(&mut stream(seed, Lane::Direction, i), params.dimension));
            let record = |speed, arc_length, stopped| ParticleRecord {
                replica: i,
                speed,
                arc_length,
                stopped,
            };
            if options.t_final == 0.0 {
                return Ok((times.iter().map(|_| record(v0, 0.0, false)).collect(), None));
            }
            let length = v0 * options.t_final * (1.0 + 1e-9);
            let mut tube = sample_tube(&mut stream(seed, Lane::Tube, i), params, length)?;
            tube.seed = Some(SeedRecord {
                master_seed: seed,
                replica: i,
            });
            if let Some(dir) = direction {
                tube.direction = dir;
            }
            let mut log = advance_micro(profile, params, &tube, v0, options.t_final, threshold, &times)?;
            log.replica = i;
            log.master_seed = seed;
            let rows = log
                .samples
                .iter()
                .map(|(_, r)| record(r.speed, r.arc_length, r.stopped))
                .collect();
            Ok((rows, options.keep_logs.then_some(log)))
        });

    let mut rows = Vec::with_capacity(per_replica.len());
    let mut logs = Vec::new();
    for item in per_replica {
        let (r, log) = item?;
        rows.push(r);
        logs.extend(log);
    }
    Ok(EnsembleRun {
        provenance: Provenance::Micro,
        master_seed: seed,
        replicas: options.replicas,
        snapshots: transpose(&times, rows),
        logs,
    })
}
