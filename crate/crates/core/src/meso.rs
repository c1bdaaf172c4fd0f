//! The limit velocity-jump process: straight flight at constant speed,
//! collisions at rate `σ|v|`, and at each collision an instantaneous speed
//! loss `a(|v|) ↦ a(|v|) − 2κ√(1−h²)` with `h` distributed as `h^{d−1}`.
//! A particle whose `a` value is exhausted stops for good.

use crate::analysis::Provenance;
use crate::ensemble::{
    map_replicas, normalize_snapshots, random_direction, transpose, EnsembleRun, InitialLaw, ParticleRecord,
};
use crate::error::{Error, Result};
use crate::micro::{EventKind, TrajectoryEvent, TrajectoryLog};
use crate::params::ModelParams;
use crate::profile::SlowingProfile;
use crate::rng::{stream, Lane};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Debug, Clone, PartialEq)]
pub struct JumpState {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    /// Distance travelled along `direction`.
    pub arc_length: f64,
    pub speed: f64,
    pub stopped: bool,
    pub jump_count: u64,
}

impl JumpState {
    /// A particle at the origin moving along the first axis.
    pub fn along_axis(dimension: usize, speed: f64) -> Self {
        let mut direction = vec![0.0; dimension];
        direction[0] = 1.0;
        Self {
            origin: vec![0.0; dimension],
            direction,
            arc_length: 0.0,
            speed,
            stopped: speed == 0.0,
            jump_count: 0,
        }
    }

    pub fn position(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(x, v)| x + self.arc_length * v)
            .collect()
    }
}

/// What ended a call to [`meso_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// A collision happened; the speed may have dropped to zero.
    Collision,
    /// No collision before the horizon.
    Horizon,
}

/// Speed after one collision of a particle moving at `speed`.
pub fn collide<R: Rng + ?Sized>(rng: &mut R, profile: &SlowingProfile, params: &ModelParams, speed: f64) -> Result<f64> {
    let h = crate::micro::sample_impact(rng, params.dimension);
    profile.exit_speed(speed, params.kappa, h)
}

/// Advances `state` to its next collision or by `t_remaining`, whichever
/// comes first, and returns the elapsed time with what happened.
pub fn meso_step<R: Rng + ?Sized>(
    rng: &mut R,
    profile: &SlowingProfile,
    params: &ModelParams,
    state: &mut JumpState,
    t_remaining: f64,
) -> Result<(f64, StepOutcome)> {
    if state.stopped {
        return Err(Error::Precondition("meso_step called on a stopped particle".into()));
    }
    if !(t_remaining > 0.0) {
        return Err(Error::domain(format!("t_remaining must be > 0, got {t_remaining}")));
    }
    let rate = params.sigma() * state.speed;
    let wait = if rate > 0.0 {
        Distribution::<f64>::sample(&Exp1, rng) / rate
    } else {
        f64::INFINITY
    };
    if wait > t_remaining {
        state.arc_length += state.speed * t_remaining;
        return Ok((t_remaining, StepOutcome::Horizon));
    }
    state.arc_length += state.speed * wait;
    state.speed = collide(rng, profile, params, state.speed)?;
    state.jump_count += 1;
    if state.speed == 0.0 {
        state.stopped = true;
    }
    Ok((wait, StepOutcome::Collision))
}

#[derive(Debug, Clone)]
pub struct MesoOptions {
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    pub replicas: u64,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub keep_logs: bool,
    pub full_positions: bool,
}

impl MesoOptions {
    pub fn new(t_final: f64, replicas: u64, master_seed: u64) -> Self {
        Self {
            t_final,
            snapshot_times: Vec::new(),
            replicas,
            master_seed,
            threads: None,
            keep_logs: false,
            full_positions: false,
        }
    }
}

/// Simulates `replicas` independent particles of the jump process and
/// records them at each snapshot time. Stopped particles stay in the
/// ensemble at their stopping point.
pub fn run_meso_ensemble(
    profile: &SlowingProfile,
    params: &ModelParams,
    initial: &InitialLaw,
    options: &MesoOptions,
) -> Result<EnsembleRun> {
    initial.validate()?;
    let times = normalize_snapshots(&options.snapshot_times, options.t_final)?;
    let seed = options.master_seed;

    let per_replica: Vec<Result<(Vec<ParticleRecord>, Option<TrajectoryLog>)>> =
        map_replicas(options.replicas, options.threads, |i| {
            let v0 = initial.sample(&mut stream(seed, Lane::InitialState, i));
            let mut state = JumpState::along_axis(params.dimension, v0);
            if options.full_positions {
                state.direction = random_direction(&mut stream(seed, Lane::Direction, i), params.dimension);
            }
            let mut rng = stream(seed, Lane::Jumps, i);
            let mut events = vec![TrajectoryEvent {
                time: 0.0,
                arc_length: 0.0,
                speed: v0,
                kind: EventKind::Start,
            }];
            let mut rows = Vec::with_capacity(times.len());
            let mut t = 0.0;
            for &target in &times {
                while t < target && !state.stopped {
                    let (dt, outcome) = meso_step(&mut rng, profile, params, &mut state, target - t)?;
                    if outcome == StepOutcome::Horizon {
                        t = target;
                        break;
                    }
                    t += dt;
                    events.push(TrajectoryEvent {
                        time: t,
                        arc_length: state.arc_length,
                        speed: state.speed,
                        kind: if state.stopped { EventKind::Stop } else { EventKind::Jump },
                    });
                }
                rows.push(ParticleRecord {
                    replica: i,
                    speed: state.speed,
                    arc_length: state.arc_length,
                    stopped: state.stopped,
                });
            }
            if !state.stopped {
                events.push(TrajectoryEvent {
                    time: options.t_final,
                    arc_length: state.arc_length,
                    speed: state.speed,
                    kind: EventKind::Final,
                });
            }
            let log = options.keep_logs.then(|| TrajectoryLog {
                replica: i,
                master_seed: seed,
                origin: state.origin.clone(),
                direction: state.direction.clone(),
                initial_speed: v0,
                events,
                samples: times.iter().copied().zip(rows.iter().copied()).collect(),
                stopped: state.stopped,
            });
            Ok((rows, log))
        });

    let mut rows = Vec::with_capacity(per_replica.len());
    let mut logs = Vec::new();
    for item in per_replica {
        let (r, log) = item?;
        rows.push(r);
        logs.extend(log);
    }
    Ok(EnsembleRun {
        provenance: Provenance::Meso,
        master_seed: seed,
        replicas: options.replicas,
        snapshots: transpose(&times, rows),
        logs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stats;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(21)
    }

    #[test]
    fn mean_waiting_time() {
        let profile = SlowingProfile::constant(1.0).unwrap();
        let params = ModelParams::new(2, 0.1, 0.0, 1.0).unwrap();
        let mut r = rng();
        let waits: Vec<f64> = (0..50_000)
            .map(|_| {
                let mut s = JumpState::along_axis(2, 0.5);
                meso_step(&mut r, &profile, &params, &mut s, 1e9).unwrap().0
            })
            .collect();
        let m = stats::mean_stderr(waits);
        assert!((m.mean - 1.0).abs() < 4.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn no_clamping_when_deficit_is_small() {
        let profile = SlowingProfile::constant(1.0).unwrap();
        let params = ModelParams::new(3, 0.1, 0.2, 1.0).unwrap();
        let mut r = rng();
        for _ in 0..1000 {
            assert!(collide(&mut r, &profile, &params, 0.5).unwrap() > 0.0);
        }
    }

    #[test]
    fn per_collision_stop_probability() {
        let profile = SlowingProfile::constant(1.0).unwrap();
        let params = ModelParams::new(2, 0.1, 0.5, 1.0).unwrap();
        let mut r = rng();
        let n = 100_000u64;
        let stops = (0..n)
            .filter(|_| collide(&mut r, &profile, &params, 0.6).unwrap() == 0.0)
            .count() as u64;
        let p = stats::proportion(stops, n, 1.96);
        assert!((p.estimate - 0.8).abs() < 3.0 * (0.8f64 * 0.2 / n as f64).sqrt(), "{p:?}");
    }

    #[test]
    fn stepping_a_stopped_particle_is_refused() {
        let profile = SlowingProfile::constant(1.0).unwrap();
        let params = ModelParams::new(2, 0.1, 0.5, 1.0).unwrap();
        let mut s = JumpState::along_axis(2, 0.0);
        assert!(matches!(meso_step(&mut rng(), &profile, &params, &mut s, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_horizon_returns_initial_law() {
        let profile = SlowingProfile::constant(1.0).unwrap();
        let params = ModelParams::new(2, 0.1, 0.5, 1.0).unwrap();
        let law = InitialLaw::Uniform { min: 0.2, max: 0.9 };
        let run = run_meso_ensemble(&profile, &params, &law, &MesoOptions::new(0.0, 500, 4)).unwrap();
        let snap = run.final_snapshot();
        assert_eq!(snap.stopped_count(), 0);
        for r in &snap.records {
            assert_eq!(r.speed, law.sample(&mut stream(4, Lane::InitialState, r.replica)));
            assert_eq!(r.arc_length, 0.0);
        }
    }

    #[test]
    fn single_collision_absorption() {
        // κ huge: every collision stops, so P(stopped by t) = 1 − E[e^{−σvt}]
        let profile = SlowingProfile::constant(1.0).unwrap();
        let params = ModelParams::new(2, 0.1, 1e6, 1.0).unwrap();
        let law = InitialLaw::Uniform { min: 0.5, max: 1.5 };
        let t = 3.0;
        let run = run_meso_ensemble(&profile, &params, &law, &MesoOptions::new(t, 100_000, 8)).unwrap();
        let frac = run.final_snapshot().stopped_fraction();
        let expected = 1.0 - law.expectation(|v| (-2.0 * v * t).exp());
        assert!((frac.estimate - expected).abs() < 3.0 * frac.stderr + 1e-9, "{frac:?} vs {expected}");
    }
}
