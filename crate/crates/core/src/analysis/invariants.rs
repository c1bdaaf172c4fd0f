use crate::ensemble::EnsembleSnapshot;
use crate::micro::TrajectoryLog;
use serde::Serialize;

/// Tolerances of [`check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSpec {
    /// Horizon of the run; bounds event times and the support.
    pub t_final: f64,
    /// Allowed relative excess of `|x − x₀|` over `v₀ t`.
    pub support_tol: f64,
    /// Allowed deviation of `|direction|` from 1.
    pub direction_tol: f64,
}

impl InvariantSpec {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            support_tol: 1e-12,
            direction_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub replica: u64,
    pub master_seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity; its meaning is given by `criterion`.
    pub worst: f64,
    pub criterion: &'static str,
    /// At most [`MAX_OFFENDERS`] failing replicas, for replay.
    pub offenders: Vec<Offender>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub replicas_checked: usize,
    pub snapshots_checked: usize,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

impl InvariantReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serialisable")
    }
}

impl std::fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            write!(
                f,
                "{:<24} {}  worst={:.3e} ({})",
                c.name,
                if c.passed { "ok  " } else { "FAIL" },
                c.worst,
                c.criterion
            )?;
            if let Some(o) = c.offenders.first() {
                write!(f, "  first offender: replica {} seed {}", o.replica, o.master_seed)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub const MAX_OFFENDERS: usize = 16;

struct Accumulator {
    name: &'static str,
    criterion: &'static str,
    worst: f64,
    offenders: Vec<Offender>,
    failed: bool,
}

impl Accumulator {
    fn new(name: &'static str, criterion: &'static str, start: f64) -> Self {
        Self {
            name,
            criterion,
            worst: start,
            offenders: Vec::new(),
            failed: false,
        }
    }

    fn observe(&mut self, value: f64, ok: bool, log: Option<&TrajectoryLog>) {
        if value > self.worst || value.is_nan() {
            self.worst = value;
        }
        if !ok {
            self.failed = true;
            if let Some(log) = log {
                if self.offenders.len() < MAX_OFFENDERS && self.offenders.last().map(|o| o.replica) != Some(log.replica) {
                    self.offenders.push(Offender {
                        replica: log.replica,
                        master_seed: log.master_seed,
                        value,
                    });
                }
            }
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: !self.failed,
            worst: self.worst,
            criterion: self.criterion,
            offenders: self.offenders,
        }
    }
}

/// Runs the structural checks on full trajectory logs and ensemble snapshots:
///
/// - `speed_nonincreasing`: largest speed increase between consecutive records
/// - `time_ordered`: event times nondecreasing and within `[0, t_final]`
/// - `straight_line`: unit direction and nondecreasing arc length
/// - `support`: largest `|x − x₀| / (v₀ t)`
/// - `mass_conservation`: every snapshot holds each replica exactly once and
///   stopped particles stay stopped
/// - `mean_speed_squared` and `mean_speed`: ensemble means of `φ(|v|²)` for
///   `φ(s) = s` and `φ(s) = √s` nonincreasing across snapshots
///
/// Pure: the report depends only on the inputs.
pub fn check_invariants(logs: &[TrajectoryLog], snapshots: &[EnsembleSnapshot], spec: &InvariantSpec) -> InvariantReport {
    let mut speed = Accumulator::new("speed_nonincreasing", "max speed increase <= 0", f64::NEG_INFINITY);
    let mut time = Accumulator::new("time_ordered", "max backwards step <= 0", f64::NEG_INFINITY);
    let mut line = Accumulator::new(
        "straight_line",
        "max(| |dir| - 1 |, arc decrease) <= tol",
        f64::NEG_INFINITY,
    );
    let mut support = Accumulator::new("support", "max |x - x0| / (v0 t) <= 1", 0.0);

    for log in logs {
        let mut prev_speed = log.initial_speed;
        let mut prev_time = 0.0;
        let mut prev_arc = 0.0;
        let norm = log.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dev = (norm - 1.0).abs();
        line.observe(dev, dev <= spec.direction_tol, Some(log));
        for e in &log.events {
            let rise = e.speed - prev_speed;
            speed.observe(rise, rise <= 0.0, Some(log));
            let back = prev_time - e.time;
            let ok = back <= 0.0 && e.time >= 0.0 && e.time <= spec.t_final * (1.0 + 1e-12);
            time.observe(back, ok, Some(log));
            let arc_back = prev_arc - e.arc_length;
            line.observe(arc_back, arc_back <= 0.0, Some(log));
            if e.time > 0.0 && log.initial_speed > 0.0 {
                let displacement = distance(&log.position_at_arc(e.arc_length), &log.origin);
                let ratio = displacement / (log.initial_speed * e.time);
                support.observe(ratio, ratio <= 1.0 + spec.support_tol, Some(log));
            }
            prev_speed = e.speed;
            prev_time = e.time;
            prev_arc = e.arc_length;
        }
        let mut prev_sample_speed = log.initial_speed;
        for (t, rec) in &log.samples {
            let rise = rec.speed - prev_sample_speed;
            speed.observe(rise, rise <= 0.0, Some(log));
            prev_sample_speed = rec.speed;
            if *t > 0.0 && log.initial_speed > 0.0 {
                let ratio = rec.arc_length / (log.initial_speed * t);
                support.observe(ratio, ratio <= 1.0 + spec.support_tol, Some(log));
            }
        }
    }

    let mut mass = Accumulator::new("mass_conservation", "replica count mismatches == 0", 0.0);
    let mut flux_sq = Accumulator::new("mean_speed_squared", "max increase of mean |v|^2 <= 0", f64::NEG_INFINITY);
    let mut flux_sqrt = Accumulator::new("mean_speed", "max increase of mean |v| <= 0", f64::NEG_INFINITY);
    if let Some(first) = snapshots.first() {
        let n = first.records.len();
        let mut ids: Vec<u64> = first.records.iter().map(|r| r.replica).collect();
        ids.sort_unstable();
        ids.dedup();
        let duplicates = (n - ids.len()) as f64;
        mass.observe(duplicates, duplicates == 0.0, None);
        let mut prev_sq: Option<f64> = None;
        let mut prev_abs: Option<f64> = None;
        for (k, snap) in snapshots.iter().enumerate() {
            let mismatch = (snap.records.len() as f64 - n as f64).abs();
            let moved = snap.moving_count() + snap.stopped_count();
            mass.observe(mismatch, mismatch == 0.0 && moved as usize == n, None);
            if k > 0 {
                for (a, b) in snapshots[k - 1].records.iter().zip(&snap.records) {
                    let ok = a.replica == b.replica && (!a.stopped || b.stopped);
                    if !ok {
                        mass.observe(1.0, false, logs.iter().find(|l| l.replica == b.replica));
                    }
                }
            }
            let sq = sum_of(snap, |v| v * v);
            let abs = sum_of(snap, |v| v);
            if let (Some(ps), Some(pa)) = (prev_sq, prev_abs) {
                flux_sq.observe(sq - ps, sq <= ps, None);
                flux_sqrt.observe(abs - pa, abs <= pa, None);
            }
            prev_sq = Some(sq);
            prev_abs = Some(abs);
        }
    }

    let checks: Vec<CheckResult> = [speed, time, line, support, mass, flux_sq, flux_sqrt]
        .into_iter()
        .map(Accumulator::finish)
        .collect();
    InvariantReport {
        replicas_checked: logs.len(),
        snapshots_checked: snapshots.len(),
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Ensemble mean of `f(speed)`, stopped particles contributing `f(0)`.
/// Summed in record order so that termwise-dominated snapshots compare exactly.
fn sum_of<F: Fn(f64) -> f64>(snap: &EnsembleSnapshot, f: F) -> f64 {
    let total: f64 = snap
        .records
        .iter()
        .map(|r| if r.stopped { f(0.0) } else { f(r.speed) })
        .sum();
    total / snap.records.len().max(1) as f64
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
