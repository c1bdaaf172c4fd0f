//! Slowing profiles `S(u)` and the integrated reciprocal `a(z) = ∫₀ᶻ du / S(u)`.
//!
//! Successive obstacle crossings are additive in the `a` coordinate: a crossing
//! at impact parameter `h` removes `2κ√(1−h²)` from `a(|V|)` regardless of the
//! obstacle radius. Everything in the crate that needs exit speeds goes
//! through [`SlowingProfile::exit_speed`].

use crate::error::{Error, Result};
use crate::quad::{adaptive, gauss16, UnitRule};
use serde::{Deserialize, Serialize};

/// Relative tolerance used when inverting `a`.
pub const INVERSION_TOL: f64 = 1e-10;

/// Minimum number of cells in the cumulative `a` table of a tabulated profile.
pub const MIN_TABLE_CELLS: usize = 4096;

const CELL_RULE_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileKind {
    /// `S(u) = s0`.
    Constant { s0: f64 },
    /// `S(u) = s0 + slope·u`.
    Affine { s0: f64, slope: f64 },
    /// Monotone cubic (PCHIP) interpolation through `(speeds[i], values[i])`.
    /// The first node must sit at speed zero.
    Tabulated { speeds: Vec<f64>, values: Vec<f64> },
}

/// A slowing law with its `a` map. Immutable once built.
#[derive(Debug, Clone)]
pub struct SlowingProfile {
    kind: ProfileKind,
    v_max: f64,
    s_floor: f64,
    s_ceiling: f64,
    interp: Option<Pchip>,
    table: Option<ATable>,
}

impl SlowingProfile {
    pub fn constant(s0: f64) -> Result<Self> {
        Self::new(ProfileKind::Constant { s0 }, None)
    }

    pub fn affine(s0: f64, slope: f64, v_max: Option<f64>) -> Result<Self> {
        Self::new(ProfileKind::Affine { s0, slope }, v_max)
    }

    pub fn tabulated(speeds: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(ProfileKind::Tabulated { speeds, values }, None)
    }

    /// Samples `f` at `nodes + 1` equally spaced speeds on `[0, v_max]` and
    /// builds a tabulated profile from them.
    pub fn tabulate<F: Fn(f64) -> f64>(f: F, v_max: f64, nodes: usize) -> Result<Self> {
        if !(v_max > 0.0) || nodes < 2 {
            return Err(Error::domain("tabulation needs v_max > 0 and at least 2 intervals"));
        }
        let speeds: Vec<f64> = (0..=nodes).map(|i| v_max * i as f64 / nodes as f64).collect();
        let values = speeds.iter().map(|&u| f(u)).collect();
        Self::tabulated(speeds, values)
    }

    /// Builds a profile. `v_max` bounds the admissible speed range; it is
    /// required for decreasing affine profiles and ignored for tabulated ones,
    /// whose range is the node span.
    pub fn new(kind: ProfileKind, v_max: Option<f64>) -> Result<Self> {
        if let Some(v) = v_max {
            if !(v > 0.0) {
                return Err(Error::domain(format!("v_max must be positive, got {v}")));
            }
        }
        match &kind {
            ProfileKind::Constant { s0 } => {
                if !(*s0 > 0.0 && s0.is_finite()) {
                    return Err(Error::domain(format!("constant profile needs s0 > 0, got {s0}")));
                }
                Ok(Self {
                    v_max: v_max.unwrap_or(f64::INFINITY),
                    s_floor: *s0,
                    s_ceiling: *s0,
                    kind,
                    interp: None,
                    table: None,
                })
            }
            ProfileKind::Affine { s0, slope } => {
                if !(*s0 > 0.0 && s0.is_finite() && slope.is_finite()) {
                    return Err(Error::domain(format!("affine profile needs s0 > 0, got {s0}")));
                }
                let v_max = match v_max {
                    Some(v) => v,
                    None if *slope >= 0.0 => f64::INFINITY,
                    None => {
                        return Err(Error::domain(
                            "a decreasing affine profile needs an explicit v_max",
                        ))
                    }
                };
                let end = s0 + slope * v_max;
                let (s_floor, s_ceiling) = if *slope >= 0.0 { (*s0, end) } else { (end, *s0) };
                if !(s_floor > 0.0) {
                    return Err(Error::domain(format!(
                        "affine profile reaches S = {s_floor} <= 0 on [0, {v_max}]"
                    )));
                }
                Ok(Self {
                    kind,
                    v_max,
                    s_floor,
                    s_ceiling,
                    interp: None,
                    table: None,
                })
            }
            ProfileKind::Tabulated { speeds, values } => {
                let interp = Pchip::new(speeds, values)?;
                let s_floor = values.iter().copied().fold(f64::INFINITY, f64::min);
                let s_ceiling = values.iter().copied().fold(0.0, f64::max);
                if !(s_floor > 0.0) {
                    return Err(Error::domain("tabulated profile values must all be positive"));
                }
                let table = ATable::build(&interp);
                Ok(Self {
                    v_max: *speeds.last().unwrap(),
                    kind,
                    s_floor,
                    s_ceiling,
                    interp: Some(interp),
                    table: Some(table),
                })
            }
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// Largest admissible speed.
    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Lower bound `S₀` with `S(u) ≥ S₀` on the admissible range.
    pub fn s_floor(&self) -> f64 {
        self.s_floor
    }

    pub fn s_ceiling(&self) -> f64 {
        self.s_ceiling
    }

    /// `S(u)`.
    pub fn rate(&self, u: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { s0 } => *s0,
            ProfileKind::Affine { s0, slope } => s0 + slope * u,
            ProfileKind::Tabulated { .. } => self.interp.as_ref().unwrap().eval(u),
        }
    }

    fn check_speed(&self, z: f64) -> Result<()> {
        if !(z >= 0.0) {
            return Err(Error::domain(format!("speed must be >= 0, got {z}")));
        }
        if z > self.v_max * (1.0 + 1e-12) {
            return Err(Error::Range(format!(
                "speed {z} exceeds the profile range [0, {}]",
                self.v_max
            )));
        }
        Ok(())
    }

    /// `a(z) = ∫₀ᶻ du / S(u)`.
    pub fn evaluate_a(&self, z: f64) -> Result<f64> {
        self.check_speed(z)?;
        Ok(self.a_unchecked(z.min(self.v_max)))
    }

    fn a_unchecked(&self, z: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { s0 } => z / s0,
            ProfileKind::Affine { s0, slope } => {
                if *slope == 0.0 {
                    z / s0
                } else {
                    (slope * z / s0).ln_1p() / slope
                }
            }
            ProfileKind::Tabulated { .. } => {
                let interp = self.interp.as_ref().unwrap();
                self.table.as_ref().unwrap().eval(interp, z)
            }
        }
    }

    /// `a(v_max)`, the largest value [`invert_a`](Self::invert_a) accepts.
    pub fn a_max(&self) -> f64 {
        if self.v_max.is_finite() {
            self.a_unchecked(self.v_max)
        } else {
            f64::INFINITY
        }
    }

    /// The unique `z` with `a(z) = y`.
    pub fn invert_a(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::domain(format!("a-value must be >= 0, got {y}")));
        }
        let a_max = self.a_max();
        if y > a_max * (1.0 + 1e-12) {
            return Err(Error::Range(format!(
                "a-value {y} exceeds a(v_max) = {a_max}"
            )));
        }
        Ok(self.invert_unchecked(y.min(a_max)))
    }

    fn invert_unchecked(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { s0 } => y * s0,
            ProfileKind::Affine { s0, slope } => {
                if *slope == 0.0 {
                    y * s0
                } else {
                    s0 * (slope * y).exp_m1() / slope
                }
            }
            ProfileKind::Tabulated { .. } => {
                let interp = self.interp.as_ref().unwrap();
                self.table.as_ref().unwrap().invert(interp, y)
            }
        }
    }

    /// Speed left after removing `deficit` from `a(v)`, or zero once the
    /// deficit exhausts `a(v)`.
    pub fn reduce_speed(&self, v: f64, deficit: f64) -> Result<f64> {
        let a = self.evaluate_a(v)?;
        if a <= deficit {
            Ok(0.0)
        } else {
            Ok(self.invert_unchecked(a - deficit))
        }
    }

    /// Speed after fully crossing one obstacle at impact parameter `h`:
    /// `a⁻¹(a(v_in) − 2κ√(1−h²))`, clamped to zero.
    pub fn exit_speed(&self, v_in: f64, kappa: f64, h: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::domain(format!("impact parameter must lie in [0, 1], got {h}")));
        }
        if !(kappa >= 0.0) {
            return Err(Error::domain(format!("kappa must be >= 0, got {kappa}")));
        }
        self.reduce_speed(v_in, crossing_deficit(kappa, h))
    }

    /// `∫_lo^hi du / (u S(u))`. Multiplied by `ε/κ` this is the time spent
    /// slowing from `hi` to `lo` inside an obstacle.
    pub fn transit_integral(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo > 0.0 && hi >= lo);
        match &self.kind {
            ProfileKind::Constant { s0 } => (hi / lo).ln() / s0,
            ProfileKind::Affine { s0, slope } => {
                ((hi / lo).ln() - ((s0 + slope * hi) / (s0 + slope * lo)).ln()) / s0
            }
            ProfileKind::Tabulated { .. } => {
                let interp = self.interp.as_ref().expect("tabulated profile has an interpolant");
                let mut total = 0.0;
                let mut a = lo;
                for &knot in interp.x.iter().filter(|&&x| x > lo && x < hi) {
                    total += self.transit_piece(a, knot);
                    a = knot;
                }
                total + self.transit_piece(a, hi)
            }
        }
    }

    /// Transit integral over a range free of interpolation knots, in
    /// `w = ln u`, which removes the `1/u` behaviour near small speeds.
    fn transit_piece(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        gauss16(lo.ln(), hi.ln(), |w| 1.0 / self.rate(w.exp()))
    }

    /// Inverse of [`transit_integral`](Self::transit_integral) in its lower
    /// limit: the `lo` with `∫_lo^hi du/(u S(u)) = budget`.
    pub fn transit_lower_speed(&self, hi: f64, budget: f64) -> f64 {
        debug_assert!(hi > 0.0 && budget >= 0.0);
        match &self.kind {
            ProfileKind::Constant { s0 } => hi * (-s0 * budget).exp(),
            ProfileKind::Affine { s0, slope } => {
                let q = hi / (s0 + slope * hi) * (-s0 * budget).exp();
                s0 * q / (1.0 - slope * q)
            }
            ProfileKind::Tabulated { .. } => {
                // walk down knot by knot, then bisect in ln u within one piece
                let interp = self.interp.as_ref().expect("tabulated profile has an interpolant");
                let mut upper = hi;
                let mut left = budget;
                let mut k = interp.x.partition_point(|&x| x < hi);
                loop {
                    let lower = if k == 0 { 0.0 } else { interp.x[k - 1] };
                    if lower <= 0.0 {
                        break;
                    }
                    let piece = self.transit_piece(lower, upper);
                    if piece >= left {
                        break;
                    }
                    left -= piece;
                    upper = lower;
                    k -= 1;
                }
                let log_up = upper.ln();
                let mut lo_w = log_up - left * self.s_ceiling;
                let mut hi_w = log_up - left * self.s_floor;
                for _ in 0..200 {
                    let mid = 0.5 * (lo_w + hi_w);
                    if hi_w - lo_w <= 1e-15 * mid.abs().max(1.0) {
                        break;
                    }
                    if self.transit_piece(mid.exp(), upper) > left {
                        lo_w = mid;
                    } else {
                        hi_w = mid;
                    }
                }
                (0.5 * (lo_w + hi_w)).exp()
            }
        }
    }
}

/// The `a`-deficit `2κ√(1−h²)` of one full crossing.
pub fn crossing_deficit(kappa: f64, h: f64) -> f64 {
    2.0 * kappa * (1.0 - h * h).max(0.0).sqrt()
}

/// Fritsch-Carlson monotone piecewise cubic Hermite interpolant.
#[derive(Debug, Clone)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::domain("tabulated profile needs >= 2 nodes of equal length"));
        }
        if x[0] != 0.0 {
            return Err(Error::domain("tabulated profile must start at speed 0"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("tabulated speeds must be strictly increasing"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("tabulated values must be finite"));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    fn segment(&self, u: f64) -> usize {
        match self.x.partition_point(|&xi| xi <= u) {
            0 => 0,
            k => (k - 1).min(self.x.len() - 2),
        }
    }

    fn eval(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let h = self.x[i + 1] - self.x[i];
        let t = ((u - self.x[i]) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Cumulative `a` on a grid that refines the interpolation knots, so the
/// integrand `1/S` is a smooth rational function inside every cell.
#[derive(Debug, Clone)]
struct ATable {
    z: Vec<f64>,
    a: Vec<f64>,
    rule: UnitRule,
}

impl ATable {
    fn build(interp: &Pchip) -> Self {
        let knots = &interp.x;
        let span = knots.last().unwrap() - knots[0];
        let target_width = span / MIN_TABLE_CELLS as f64;
        let mut z = vec![knots[0]];
        for w in knots.windows(2) {
            let pieces = ((w[1] - w[0]) / target_width).ceil().max(1.0) as usize;
            for j in 1..=pieces {
                z.push(if j == pieces {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * j as f64 / pieces as f64
                });
            }
        }
        let rule = UnitRule::new(CELL_RULE_DEGREE);
        let mut a = Vec::with_capacity(z.len());
        a.push(0.0);
        let mut acc = 0.0;
        for w in z.windows(2) {
            acc += adaptive(|u| 1.0 / interp.eval(u), w[0], w[1], 1e-14);
            a.push(acc);
        }
        Self { z, a, rule }
    }

    fn cell_of(&self, z: f64) -> usize {
        match self.z.partition_point(|&zi| zi <= z) {
            0 => 0,
            k => (k - 1).min(self.z.len() - 2),
        }
    }

    fn eval_in_cell(&self, interp: &Pchip, k: usize, z: f64) -> f64 {
        self.a[k] + self.rule.integrate(self.z[k], z, |u| 1.0 / interp.eval(u))
    }

    fn eval(&self, interp: &Pchip, z: f64) -> f64 {
        let k = self.cell_of(z);
        self.eval_in_cell(interp, k, z)
    }

    fn invert(&self, interp: &Pchip, y: f64) -> f64 {
        let k = match self.a.partition_point(|&ai| ai <= y) {
            0 => 0,
            k => (k - 1).min(self.a.len() - 2),
        };
        let (z0, z1) = (self.z[k], self.z[k + 1]);
        let (a0, a1) = (self.a[k], self.a[k + 1]);
        if y <= a0 {
            return z0;
        }
        if y >= a1 {
            return z1;
        }
        // cubic Hermite guess in the inverse direction, dz/da = S
        let h = a1 - a0;
        let t = (y - a0) / h;
        let (s0, s1) = (interp.eval(z0), interp.eval(z1));
        let t2 = t * t;
        let t3 = t2 * t;
        let mut z = (2.0 * t3 - 3.0 * t2 + 1.0) * z0
            + (t3 - 2.0 * t2 + t) * h * s0
            + (-2.0 * t3 + 3.0 * t2) * z1
            + (t3 - t2) * h * s1;
        let (mut lo, mut hi) = (z0, z1);
        if !(z > lo && z < hi) {
            z = 0.5 * (lo + hi);
        }
        for _ in 0..60 {
            let f = self.eval_in_cell(interp, k, z) - y;
            if f.abs() <= 1e-15 * y.max(f64::MIN_POSITIVE) {
                break;
            }
            if f > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let mut next = z - f * interp.eval(z);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - z).abs() <= 1e-16 * z.max(1e-300) {
                z = next;
                break;
            }
            z = next;
        }
        z
    }
}
