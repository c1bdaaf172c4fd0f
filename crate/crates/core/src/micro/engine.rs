use super::{union_coverage, TubeRealization};
use crate::ensemble::ParticleRecord;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::profile::SlowingProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    /// Entered the union of obstacles.
    Entry,
    /// Left the union of obstacles.
    Exit,
    /// Speed reached the stopping threshold (micro) or zero (meso).
    Stop,
    /// Instantaneous speed loss of the limit process.
    Jump,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub arc_length: f64,
    pub speed: f64,
    pub kind: EventKind,
}

/// Event history of one particle. The direction is stored once: it never
/// changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub replica: u64,
    pub master_seed: u64,
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub initial_speed: f64,
    pub events: Vec<TrajectoryEvent>,
    /// State at each requested output time.
    pub samples: Vec<(f64, ParticleRecord)>,
    pub stopped: bool,
}

impl TrajectoryLog {
    pub fn final_event(&self) -> &TrajectoryEvent {
        self.events.last().expect("a log always holds its start event")
    }

    pub fn position_at_arc(&self, arc_length: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(x, v)| x + arc_length * v)
            .collect()
    }

    pub fn final_position(&self) -> Vec<f64> {
        self.position_at_arc(self.final_event().arc_length)
    }
}

/// Integrates the finite-radius dynamics along `tube` up to `t_final`.
///
/// Inside the union of obstacles `a(|V|)` falls by `κ/ε` per unit arc
/// length, so the speed after covered length `m` is `a⁻¹(a(v0) − κm/ε)`.
/// Elapsed time inside an obstacle is `(ε/κ)∫ du/(u S(u))`. A particle whose
/// speed would fall to `stop_threshold` is declared stopped at that point.
///
/// `snapshot_times` (sorted, within `[0, t_final]`) select the states copied
/// into [`TrajectoryLog::samples`].
pub fn advance_micro(
    profile: &SlowingProfile,
    params: &ModelParams,
    tube: &TubeRealization,
    v0: f64,
    t_final: f64,
    stop_threshold: f64,
    snapshot_times: &[f64],
) -> Result<TrajectoryLog> {
    if !(t_final > 0.0) {
        return Err(Error::domain(format!("t_final must be > 0, got {t_final}")));
    }
    if !(stop_threshold > 0.0 && v0 > stop_threshold) {
        return Err(Error::domain(format!(
            "need 0 < stop_threshold < v0, got threshold {stop_threshold} and v0 {v0}"
        )));
    }
    if tube.length < v0 * t_final * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "tube of length {} is shorter than v0·t_final = {}",
            tube.length,
            v0 * t_final
        )));
    }
    let mut walker = Walker {
        profile,
        slope: params.kappa / params.epsilon,
        t_final,
        pending: snapshot_times,
        s: 0.0,
        t: 0.0,
        v: v0,
        a: profile.evaluate_a(v0)?,
        events: vec![TrajectoryEvent {
            time: 0.0,
            arc_length: 0.0,
            speed: v0,
            kind: EventKind::Start,
        }],
        samples: Vec::with_capacity(snapshot_times.len()),
    };
    let a_stop = profile.evaluate_a(stop_threshold)?;
    walker.record_through(0.0, |_| (0.0, v0));

    let coverage = union_coverage(&tube.crossings);
    let mut stopped = false;
    for &(lo, hi) in coverage.intervals() {
        if hi <= walker.s {
            continue;
        }
        if lo > walker.s && walker.free_flight(lo) {
            break;
        }
        if walker.s > 0.0 {
            walker.push(EventKind::Entry);
        }
        if params.kappa == 0.0 {
            if walker.free_flight(hi) {
                break;
            }
        } else {
            match walker.slow_down(hi, a_stop) {
                Slowing::Horizon => break,
                Slowing::Stopped => {
                    stopped = true;
                    break;
                }
                Slowing::Exited => {}
            }
        }
        walker.push(EventKind::Exit);
    }
    if !stopped && walker.t < t_final {
        walker.free_flight(f64::INFINITY);
    }
    if stopped {
        let (s, t_stop) = (walker.s, walker.t);
        walker.pending.iter().for_each(|&time| {
            debug_assert!(time >= t_stop);
            walker.samples.push((
                time,
                ParticleRecord {
                    replica: 0,
                    speed: 0.0,
                    arc_length: s,
                    stopped: true,
                },
            ))
        });
        walker.pending = &[];
    }
    Ok(TrajectoryLog {
        replica: 0,
        master_seed: 0,
        origin: tube.origin.clone(),
        direction: tube.direction.clone(),
        initial_speed: v0,
        events: walker.events,
        samples: walker.samples,
        stopped,
    })
}

enum Slowing {
    Exited,
    Stopped,
    Horizon,
}

struct Walker<'a> {
    profile: &'a SlowingProfile,
    /// `κ/ε`: drop of `a` per unit covered arc length.
    slope: f64,
    t_final: f64,
    pending: &'a [f64],
    s: f64,
    t: f64,
    v: f64,
    a: f64,
    events: Vec<TrajectoryEvent>,
    samples: Vec<(f64, ParticleRecord)>,
}

impl Walker<'_> {
    fn push(&mut self, kind: EventKind) {
        self.events.push(TrajectoryEvent {
            time: self.t,
            arc_length: self.s,
            speed: self.v,
            kind,
        });
    }

    /// Emits pending snapshots with time `<= until`, locating each with `at`,
    /// which maps a time to `(arc_length, speed)`.
    fn record_through<F: Fn(f64) -> (f64, f64)>(&mut self, until: f64, at: F) {
        while let Some((&time, rest)) = self.pending.split_first() {
            if time > until {
                break;
            }
            let (arc_length, speed) = at(time);
            self.samples.push((
                time,
                ParticleRecord {
                    replica: 0,
                    speed,
                    arc_length,
                    stopped: false,
                },
            ));
            self.pending = rest;
        }
    }

    /// Moves at constant speed to arc length `target`. Returns true when the
    /// horizon was reached first (the final event has then been written).
    fn free_flight(&mut self, target: f64) -> bool {
        let (s0, t0, v) = (self.s, self.t, self.v);
        let arrival = t0 + (target - s0) / v;
        if arrival >= self.t_final {
            self.record_through(self.t_final, |time| (s0 + v * (time - t0), v));
            self.t = self.t_final;
            self.s = s0 + v * (self.t_final - t0);
            self.push(EventKind::Final);
            return true;
        }
        self.record_through(arrival, |time| (s0 + v * (time - t0), v));
        self.t = arrival;
        self.s = target;
        false
    }

    /// Crosses covered arc up to `hi`, stopping early if `a` reaches `a_stop`.
    fn slow_down(&mut self, hi: f64, a_stop: f64) -> Slowing {
        let profile = self.profile;
        let (s0, t0, v0, a0, slope) = (self.s, self.t, self.v, self.a, self.slope);
        let a_exit = a0 - slope * (hi - s0);
        let (stops, s_end, a_end, v_end) = if a_exit <= a_stop {
            let threshold = profile
                .invert_a(a_stop)
                .expect("threshold lies inside the profile range");
            (true, s0 + (a0 - a_stop) / slope, a_stop, threshold)
        } else {
            let v = profile.invert_a(a_exit).expect("a decreases inside obstacles");
            (false, hi, a_exit, v)
        };
        let duration = profile.transit_integral(v_end, v0) / slope;
        let at = |time: f64| {
            let v = profile.transit_lower_speed(v0, slope * (time - t0));
            let a = profile.evaluate_a(v).expect("speed within range");
            (s0 + (a0 - a) / slope, v)
        };
        if t0 + duration >= self.t_final {
            self.record_through(self.t_final, at);
            let (s, v) = at(self.t_final);
            self.t = self.t_final;
            self.s = s;
            self.v = v;
            self.a = profile.evaluate_a(v).expect("speed within range");
            self.push(EventKind::Final);
            return Slowing::Horizon;
        }
        self.record_through(t0 + duration, at);
        self.t = t0 + duration;
        self.s = s_end;
        self.v = v_end;
        self.a = a_end;
        if stops {
            self.push(EventKind::Stop);
            Slowing::Stopped
        } else {
            Slowing::Exited
        }
    }
}

/// Phase-volume factor `(v_final/v_initial)^d · S(v_final)/S(v_initial)` of
/// the backward flow.
pub fn jacobian_factor(profile: &SlowingProfile, v_initial: f64, v_final: f64, dimension: usize) -> Result<f64> {
    if !(v_initial > 0.0 && v_final > 0.0) {
        return Err(Error::domain("jacobian factor needs positive speeds"));
    }
    Ok((v_final / v_initial).powi(dimension as i32) * profile.rate(v_final) / profile.rate(v_initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micro::Crossing;
    use approx::assert_relative_eq;

    fn unit() -> SlowingProfile {
        SlowingProfile::constant(1.0).unwrap()
    }

    #[test]
    fn time_inside_one_obstacle() {
        // S ≡ 1, κ = 0.5: a drop of 0.4 needs h with 2κ√(1−h²) = 0.4
        let eps = 0.1;
        let params = ModelParams::new(2, eps, 0.5, 1.0).unwrap();
        let h = (1.0f64 - 0.16).sqrt();
        let tube = TubeRealization::from_crossings(2, 10.0, eps, vec![Crossing::new(1.0, h, eps)]);
        let log = advance_micro(&unit(), &params, &tube, 1.0, 5.0, 1e-6, &[]).unwrap();
        let entry = log.events.iter().find(|e| e.kind == EventKind::Entry).unwrap();
        let exit = log.events.iter().find(|e| e.kind == EventKind::Exit).unwrap();
        assert_relative_eq!(exit.speed, 0.6, max_relative = 1e-12);
        assert_relative_eq!(exit.time - entry.time, 0.2 * (1.0f64 / 0.6).ln(), max_relative = 1e-12);
        assert_relative_eq!(exit.time - entry.time, 0.102165, epsilon = 1e-6);
    }

    #[test]
    fn free_flight_without_obstacles() {
        let params = ModelParams::new(3, 0.1, 0.5, 1.0).unwrap();
        let tube = TubeRealization::from_crossings(3, 3.0, 0.1, vec![]);
        let log = advance_micro(&unit(), &params, &tube, 1.0, 3.0, 1e-6, &[1.5, 3.0]).unwrap();
        let last = log.final_event();
        assert_eq!((last.time, last.arc_length, last.speed), (3.0, 3.0, 1.0));
        assert_eq!(log.final_position(), vec![3.0, 0.0, 0.0]);
        assert_eq!(log.samples[0].1.arc_length, 1.5);
    }

    #[test]
    fn disjoint_crossings_add() {
        let eps = 0.05;
        let params = ModelParams::new(2, eps, 0.25, 1.0).unwrap();
        let tube = TubeRealization::from_crossings(
            2,
            5.0,
            eps,
            vec![Crossing::new(0.5, 0.6, eps), Crossing::new(1.0, 0.8, eps)],
        );
        let log = advance_micro(&unit(), &params, &tube, 1.0, 5.0, 1e-6, &[]).unwrap();
        assert_relative_eq!(log.final_event().speed, 0.3, max_relative = 1e-12);
        assert!(!log.stopped);
    }

    #[test]
    fn exit_speed_does_not_depend_on_radius() {
        let profile = SlowingProfile::affine(1.0, 0.5, None).unwrap();
        let expected = profile.exit_speed(1.2, 0.3, 0.35).unwrap();
        for eps in [0.2, 0.05, 0.001] {
            let params = ModelParams::new(2, eps, 0.3, 1.0).unwrap();
            let tube = TubeRealization::from_crossings(2, 10.0, eps, vec![Crossing::new(1.0, 0.35, eps)]);
            let log = advance_micro(&profile, &params, &tube, 1.2, 5.0, 1e-6, &[]).unwrap();
            assert_relative_eq!(log.final_event().speed, expected, max_relative = 1e-11);
        }
    }

    #[test]
    fn stops_inside_a_thick_crossing() {
        let eps = 0.1;
        let params = ModelParams::new(2, eps, 0.5, 1.0).unwrap();
        let tube = TubeRealization::from_crossings(2, 10.0, eps, vec![Crossing::new(1.0, 0.1, eps)]);
        let log = advance_micro(&unit(), &params, &tube, 0.5, 10.0, 1e-6, &[9.0, 10.0]).unwrap();
        assert!(log.stopped);
        let stop = log.final_event();
        assert_eq!(stop.kind, EventKind::Stop);
        // a falls by κ/ε = 5 per unit length from 0.5 to 1e-6
        assert_relative_eq!(stop.arc_length, 1.0 - eps * (0.99f64).sqrt() + (0.5 - 1e-6) / 5.0, max_relative = 1e-12);
        assert!(log.samples.iter().all(|(_, r)| r.stopped && r.speed == 0.0));
    }

    #[test]
    fn horizon_inside_an_obstacle() {
        let eps = 0.1;
        let params = ModelParams::new(2, eps, 0.5, 1.0).unwrap();
        let tube = TubeRealization::from_crossings(2, 10.0, eps, vec![Crossing::new(1.0, 0.0, eps)]);
        // enters at s = 0.9, t = 0.9; after 0.01 more, v = e^{-0.05}
        let log = advance_micro(&unit(), &params, &tube, 1.0, 0.91, 1e-6, &[0.905]).unwrap();
        let last = log.final_event();
        assert_eq!(last.kind, EventKind::Final);
        assert_relative_eq!(last.speed, (-0.05f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(last.arc_length, 0.9 + (1.0 - (-0.05f64).exp()) / 5.0, max_relative = 1e-12);
        assert_relative_eq!(log.samples[0].1.speed, (-0.025f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn starting_inside_an_obstacle_slows_immediately() {
        let eps = 0.1;
        let params = ModelParams::new(2, eps, 0.25, 1.0).unwrap();
        let tube = TubeRealization::from_crossings(2, 10.0, eps, vec![Crossing::new(0.0, 0.0, eps)]);
        let log = advance_micro(&unit(), &params, &tube, 1.0, 2.0, 1e-6, &[]).unwrap();
        // only the half chord [0, ε] is traversed: deficit κ
        assert_relative_eq!(log.final_event().speed, 0.75, max_relative = 1e-12);
        assert!(log.events.iter().all(|e| e.kind != EventKind::Entry));
    }

    #[test]
    fn argument_errors() {
        let params = ModelParams::new(2, 0.1, 0.5, 1.0).unwrap();
        let tube = TubeRealization::from_crossings(2, 1.0, 0.1, vec![]);
        assert!(matches!(advance_micro(&unit(), &params, &tube, 1.0, 0.0, 1e-6, &[]), Err(Error::Domain(_))));
        assert!(matches!(advance_micro(&unit(), &params, &tube, 1.0, 2.0, 1e-6, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn jacobian_examples() {
        assert_relative_eq!(jacobian_factor(&unit(), 1.0, 0.6, 2).unwrap(), 0.36, max_relative = 1e-14);
        let affine = SlowingProfile::affine(1.0, 1.0, None).unwrap();
        assert_relative_eq!(jacobian_factor(&affine, 1.0, 0.5, 3).unwrap(), 0.09375, max_relative = 1e-14);
        assert_eq!(jacobian_factor(&affine, 0.7, 0.7, 5).unwrap(), 1.0);
        assert!(jacobian_factor(&affine, 0.0, 0.7, 2).is_err());
    }
}
