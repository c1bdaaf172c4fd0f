use super::kernel::CollisionKernel;
use crate::analysis::stats::poisson_tail;
use crate::error::{Error, Result};

/// Lattice resolution of the backward recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackwardOptions {
    /// Uniform steps on `[0, t]`.
    pub time_steps: usize,
    /// Speed nodes `r0·i/n`, `i = 1..=n`.
    pub speed_nodes: usize,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            time_steps: 400,
            speed_nodes: 800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardResult {
    /// `u_N(t, r0)`: expectation of `φ(speed at t)` restricted to histories
    /// with at most `N` collisions.
    pub value: f64,
    /// `sup|φ| · P(Poisson(σ r0 t) > N)`, a bound on the truncated histories.
    pub remainder_bound: f64,
    pub n_max: usize,
}

/// `E[φ(|V_t|)]` for the limit process started at speed `r0`, stopped
/// particles contributing `φ(0)`, by `n_max` Picard iterates of the mild form
///
/// `u_N(τ, r) = e^{−σrτ} φ(r) + ∫₀^τ σr e^{−σrs} E_h[u_{N−1}(τ−s, exit(r, h))] ds`,
///
/// with `u(·, 0) = φ(0)`.
pub fn backward_expectation<F: Fn(f64) -> f64>(
    kernel: &CollisionKernel,
    phi: F,
    r0: f64,
    t: f64,
    n_max: usize,
) -> Result<BackwardResult> {
    backward_expectation_with(kernel, phi, r0, t, n_max, BackwardOptions::default())
}

/// [`backward_expectation`] on an explicit lattice.
///
/// Iterates live on a `(τ, r)` lattice. The time integral uses exact
/// exponential weights against piecewise-linear data, the impact integral the
/// kernel's fixed rule, and off-lattice speeds are interpolated linearly
/// (held constant below the first node). Every weight is non-negative, so
/// `0 ≤ φ ≤ 1` implies `0 ≤ u_N ≤ 1` on the lattice.
pub fn backward_expectation_with<F: Fn(f64) -> f64>(
    kernel: &CollisionKernel,
    phi: F,
    r0: f64,
    t: f64,
    n_max: usize,
    options: BackwardOptions,
) -> Result<BackwardResult> {
    if !(r0 >= 0.0 && r0.is_finite()) {
        return Err(Error::domain(format!("r0 must be finite and >= 0, got {r0}")));
    }
    if r0 > kernel.profile().v_max() {
        return Err(Error::Range(format!(
            "r0 = {r0} exceeds the profile range {}",
            kernel.profile().v_max()
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    if options.time_steps == 0 || options.speed_nodes == 0 {
        return Err(Error::domain("lattice sizes must be positive"));
    }
    let nr = options.speed_nodes;
    let nt = options.time_steps;
    let speeds: Vec<f64> = (1..=nr).map(|i| r0 * i as f64 / nr as f64).collect();
    let phi0 = phi(0.0);
    let phi_r: Vec<f64> = speeds.iter().map(|&r| phi(r)).collect();
    let sup = phi_r
        .iter()
        .chain(std::iter::once(&phi0))
        .chain(std::iter::once(&phi(r0)))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !sup.is_finite() {
        return Err(Error::NumericContract("test function is not bounded on [0, r0]".into()));
    }
    if r0 == 0.0 {
        return Ok(BackwardResult {
            value: phi0,
            remainder_bound: 0.0,
            n_max,
        });
    }
    let sigma = kernel.sigma();
    let remainder_bound = sup * poisson_tail(sigma * r0 * t, n_max as u64);
    if t == 0.0 || sigma == 0.0 {
        return Ok(BackwardResult {
            value: phi(r0),
            remainder_bound,
            n_max,
        });
    }

    let dtau = t / nt as f64;
    let width = nt + 1;
    let stop_prob: Vec<f64> = speeds.iter().map(|&r| kernel.k_of_u(r)).collect();
    let rows: Vec<Vec<(usize, f64)>> = speeds
        .iter()
        .map(|&r| interpolation_row(kernel, r, r0, nr))
        .collect();

    let mut u: Vec<f64> = Vec::with_capacity(nr * width);
    for (i, &r) in speeds.iter().enumerate() {
        for n in 0..width {
            u.push((-sigma * r * dtau * n as f64).exp() * phi_r[i]);
        }
    }
    let mut next = vec![0.0; nr * width];
    let mut gain = vec![0.0; width];
    for _ in 0..n_max {
        for (i, &r) in speeds.iter().enumerate() {
            for (n, g) in gain.iter_mut().enumerate() {
                *g = stop_prob[i] * phi0 + rows[i].iter().map(|&(j, w)| w * u[j * width + n]).sum::<f64>();
            }
            let z = sigma * r * dtau;
            let decay = (-z).exp();
            let (w_old, w_new) = step_weights(z);
            let out = &mut next[i * width..(i + 1) * width];
            out[0] = phi_r[i];
            let mut duhamel = 0.0;
            for n in 0..nt {
                duhamel = decay * duhamel + w_old * gain[n] + w_new * gain[n + 1];
                out[n + 1] = (-z * (n + 1) as f64).exp() * phi_r[i] + duhamel;
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    Ok(BackwardResult {
        value: u[nr * width - 1],
        remainder_bound,
        n_max,
    })
}

/// Weights of `G(τ_n)` and `G(τ_{n+1})` in `∫_{τ_n}^{τ_{n+1}} σr e^{−σr(τ_{n+1}−s)} G(s) ds`
/// for linear `G`, with `z = σrΔτ`: `(φ₁(z) − e^{−z}, 1 − φ₁(z))`,
/// `φ₁(z) = (1 − e^{−z})/z`.
fn step_weights(z: f64) -> (f64, f64) {
    if z < 1e-2 {
        step_weights_series(z)
    } else {
        step_weights_closed(z)
    }
}

/// Alternating series, truncated below `1e−14·z` for `z < 1e−2`.
fn step_weights_series(z: f64) -> (f64, f64) {
    let (mut w_old, mut w_new) = (0.0, 0.0);
    let mut power = 1.0;
    let mut factorial = 1.0;
    for k in 1..=6 {
        power *= z;
        factorial *= (k + 1) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        w_old += sign * k as f64 * power / factorial;
        w_new += sign * power / factorial;
    }
    (w_old, w_new)
}

fn step_weights_closed(z: f64) -> (f64, f64) {
    let phi1 = -(-z).exp_m1() / z;
    (phi1 - (-z).exp(), 1.0 - phi1)
}

/// Sparse weights expressing `E_h[u(exit(r, h)); survive]` through lattice values.
fn interpolation_row(kernel: &CollisionKernel, r: f64, r0: f64, nr: usize) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> = Vec::new();
    for (exit, w) in kernel.surviving_exits(r) {
        let p = exit / r0 * nr as f64 - 1.0;
        if p <= 0.0 {
            row.push((0, w));
        } else if p >= (nr - 1) as f64 {
            row.push((nr - 1, w));
        } else {
            let j = p.floor() as usize;
            let f = p - j as f64;
            row.push((j, (1.0 - f) * w));
            row.push((j + 1, f * w));
        }
    }
    row.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (j, w) in row {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += w,
            _ => merged.push((j, w)),
        }
    }
    merged
}
