use super::kernel::CollisionKernel;
use crate::analysis::{Provenance, SpeedDistribution};
use crate::ensemble::{normalize_snapshots, InitialLaw};
use crate::error::{Error, Result};
use std::io::Write;

/// Moving mass on the nodes `r_j = jR/M`, `j = 1..=M`, plus an absorbed
/// bucket at zero speed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedGrid {
    r_max: f64,
    weights: Vec<f64>,
    stopped_mass: f64,
}

impl SpeedGrid {
    pub fn uniform(r_max: f64, cells: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::domain(format!("grid bound must be > 0, got {r_max}")));
        }
        if cells == 0 {
            return Err(Error::domain("grid needs at least one cell"));
        }
        Ok(Self {
            r_max,
            weights: vec![0.0; cells],
            stopped_mass: 0.0,
        })
    }

    /// Cell-in-cell projection of the initial law onto `cells` nodes on `(0, r_max]`.
    pub fn from_initial(law: &InitialLaw, r_max: f64, cells: usize) -> Result<Self> {
        law.validate()?;
        if law.max_speed() > r_max {
            return Err(Error::config(
                "initial.bound",
                format!("initial speeds up to {} exceed the bound {r_max}", law.max_speed()),
            ));
        }
        let mut grid = Self::uniform(r_max, cells)?;
        match *law {
            InitialLaw::Point { speed } => grid.deposit(speed, 1.0),
            InitialLaw::Uniform { min, max } if min == max => grid.deposit(min, 1.0),
            InitialLaw::Uniform { min, max } => {
                // hats are linear between nodes, so two Gauss points per piece are exact
                let density = 1.0 / (max - min);
                let h = grid.cell_width();
                let g = 0.5 / 3f64.sqrt();
                let first = (min / h).floor() as usize;
                let last = ((max / h).ceil() as usize).max(first + 1);
                for cell in first..last {
                    let lo = (cell as f64 * h).max(min);
                    let hi = ((cell + 1) as f64 * h).min(max);
                    if hi <= lo {
                        continue;
                    }
                    let mid = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo);
                    for x in [mid - 2.0 * g * half, mid + 2.0 * g * half] {
                        grid.deposit(x, half * density);
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn cell_width(&self) -> f64 {
        self.r_max / self.weights.len() as f64
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn node(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.cell_width()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells()).map(|j| self.node(j))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stopped_mass(&self) -> f64 {
        self.stopped_mass
    }

    pub fn moving_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.moving_mass() + self.stopped_mass
    }

    /// Adds `mass` at `speed` split linearly between the two nearest nodes.
    /// Speed 0 goes to the stopped bucket; speeds in `(0, r_1)` to the first
    /// node and speeds above `R` to the last.
    pub fn deposit(&mut self, speed: f64, mass: f64) {
        if speed <= 0.0 {
            self.stopped_mass += mass;
            return;
        }
        for (j, w) in cic(speed, self.cell_width(), self.cells()) {
            self.weights[j] += w * mass;
        }
    }

    pub fn as_distribution(&self) -> SpeedDistribution {
        SpeedDistribution::from_weighted(self.nodes().zip(self.weights.iter().copied()).collect(), Provenance::Kinetic)
            .expect("grid weights are finite and non-negative")
    }

    /// `Σ w φ(r) + stopped·φ(0)`.
    pub fn mean_of<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        self.nodes().zip(&self.weights).map(|(r, w)| w * phi(r)).sum::<f64>() + self.stopped_mass * phi(0.0)
    }
}

/// Node indices and fractions of the linear split of `speed`.
fn cic(speed: f64, h: f64, cells: usize) -> impl Iterator<Item = (usize, f64)> {
    let p = speed / h - 1.0;
    let (a, b) = if p <= 0.0 {
        ((0, 1.0), None)
    } else if p >= (cells - 1) as f64 {
        ((cells - 1, 1.0), None)
    } else {
        let j = p.floor() as usize;
        let f = p - j as f64;
        ((j, 1.0 - f), Some((j + 1, f)))
    };
    std::iter::once(a).chain(b)
}

/// Generator of the speed chain: each node leaves at rate `σ r_i` to the
/// stopped bucket with probability `k(r_i)` and otherwise to the surviving
/// exit speeds, projected onto nodes not above `r_i`.
#[derive(Debug, Clone)]
struct Generator {
    out_rate: Vec<f64>,
    stop_rate: Vec<f64>,
    /// Per source node: `(target, rate)`.
    moves: Vec<Vec<(usize, f64)>>,
}

impl Generator {
    fn new(kernel: &CollisionKernel, grid: &SpeedGrid) -> Self {
        let h = grid.cell_width();
        let m = grid.cells();
        let mut out_rate = Vec::with_capacity(m);
        let mut stop_rate = Vec::with_capacity(m);
        let mut moves = Vec::with_capacity(m);
        for r in grid.nodes() {
            let rate = kernel.collision_rate(r);
            let k = kernel.k_of_u(r);
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (exit, w) in kernel.surviving_exits(r) {
                row.extend(cic(exit, h, m).map(|(j, f)| (j, f * w)));
            }
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::new();
            for (j, w) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            // rescale so the row is exactly stochastic with the exact stop probability
            let moved: f64 = merged.iter().map(|e| e.1).sum();
            let scale = if moved > 0.0 { (1.0 - k) / moved } else { 0.0 };
            for e in &mut merged {
                e.1 *= scale * rate;
            }
            out_rate.push(rate);
            stop_rate.push(rate * k);
            moves.push(merged);
        }
        Self {
            out_rate,
            stop_rate,
            moves,
        }
    }

    /// Time derivative of `(weights, stopped)`.
    fn apply(&self, weights: &[f64], d_weights: &mut [f64]) -> f64 {
        d_weights.iter_mut().for_each(|x| *x = 0.0);
        let mut d_stopped = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            d_weights[i] -= self.out_rate[i] * w;
            d_stopped += self.stop_rate[i] * w;
            for &(j, rate) in &self.moves[i] {
                d_weights[j] += rate * w;
            }
        }
        d_stopped
    }
}

#[derive(Debug, Clone)]
pub struct ForwardSolution {
    /// Grids at the requested output times, in increasing time order.
    pub snapshots: Vec<(f64, SpeedGrid)>,
    pub steps: usize,
    /// Largest `|Δ total| / total` over single steps.
    pub max_step_drift: f64,
}

impl ForwardSolution {
    pub fn final_grid(&self) -> &SpeedGrid {
        &self.snapshots.last().expect("at least one snapshot").1
    }

    /// CSV with header `t,cell_center,mass,stopped_mass`, one row per node
    /// and output time.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,cell_center,mass,stopped_mass")?;
        for (t, grid) in &self.snapshots {
            for (r, w) in grid.nodes().zip(grid.weights()) {
                writeln!(out, "{t},{r},{w},{}", grid.stopped_mass())?;
            }
        }
        Ok(())
    }
}

/// Evolves `grid` to `t_final` with Heun steps of at most `dt`, recording the
/// grid at each of `output_times` (and `t_final`).
///
/// Refuses with [`Error::NumericContract`] unless `dt·σ·R < 0.1`.
pub fn solve_forward(
    kernel: &CollisionKernel,
    grid: &SpeedGrid,
    t_final: f64,
    dt: f64,
    output_times: &[f64],
) -> Result<ForwardSolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("dt must be > 0, got {dt}")));
    }
    let stiffness = dt * kernel.sigma() * grid.r_max();
    if stiffness >= 0.1 {
        return Err(Error::NumericContract(format!(
            "time step too large: dt·σ·r_max = {stiffness:.4} must be < 0.1 (dt = {dt}, σ = {}, r_max = {})",
            kernel.sigma(),
            grid.r_max()
        )));
    }
    let times = normalize_snapshots(output_times, t_final)?;
    let gen = Generator::new(kernel, grid);
    let m = grid.cells();
    let mut state = grid.clone();
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut snapshots = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    let mut max_step_drift = 0.0f64;
    let mut t = 0.0;
    for &target in &times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt).ceil() as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let before = state.total_mass();
                let s1 = gen.apply(&state.weights, &mut k1);
                for ((x, w), d) in trial.iter_mut().zip(&state.weights).zip(&k1) {
                    *x = w + h * d;
                }
                let s2 = gen.apply(&trial, &mut k2);
                for ((w, a), b) in state.weights.iter_mut().zip(&k1).zip(&k2) {
                    *w += 0.5 * h * (a + b);
                }
                state.stopped_mass += 0.5 * h * (s1 + s2);
                if before > 0.0 {
                    max_step_drift = max_step_drift.max((state.total_mass() - before).abs() / before);
                }
                steps += 1;
            }
        }
        t = target;
        snapshots.push((target, state.clone()));
    }
    Ok(ForwardSolution {
        snapshots,
        steps,
        max_step_drift,
    })
}
