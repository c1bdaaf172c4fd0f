use super::kernel::CollisionKernel;
use crate::error::{Error, Result};
use crate::quad::UnitRule;

/// `(1 − e^{−x})/x`, continuous at 0.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Probability that a clock of rate `c0` rings in `[0, τ]` and the following
/// clock of rate `c1` does not ring before `τ`.
fn one_then_quiet(c0: f64, c1: f64, tau: f64) -> f64 {
    c0 * tau * (-c1 * tau).exp() * phi1((c0 - c1) * tau)
}

/// `E[φ(|V_t|); at most N collisions]` for `N ≤ 2` by direct nested
/// quadrature over the collision history: impact parameters by the kernel's
/// rule, collision times in closed form (first level) and by a 32-node rule
/// (second level). Shares no discretisation with the backward lattice.
pub fn forward_series<F: Fn(f64) -> f64>(
    kernel: &CollisionKernel,
    phi: F,
    r0: f64,
    t: f64,
    n_max: usize,
) -> Result<f64> {
    if n_max > 2 {
        return Err(Error::domain(format!("direct series supports N <= 2, got {n_max}")));
    }
    if !(r0 > 0.0 && t >= 0.0) {
        return Err(Error::domain("need r0 > 0 and t >= 0"));
    }
    let sigma = kernel.sigma();
    let phi0 = phi(0.0);
    let c0 = sigma * r0;
    let hit0 = -(-c0 * t).exp_m1();
    let mut total = (-c0 * t).exp() * phi(r0);
    if n_max == 0 {
        return Ok(total);
    }
    total += kernel.k_of_u(r0) * phi0 * hit0;
    let time_rule = UnitRule::new(32);
    for (r1, w1) in kernel.surviving_exits(r0) {
        let c1 = sigma * r1;
        let quiet1 = one_then_quiet(c0, c1, t);
        total += w1 * quiet1 * phi(r1);
        if n_max == 1 {
            continue;
        }
        total += w1 * kernel.k_of_u(r1) * phi0 * (hit0 - quiet1);
        for (r2, w2) in kernel.surviving_exits(r1) {
            let c2 = sigma * r2;
            let p2 = time_rule.integrate(0.0, t, |s| c0 * (-c0 * s).exp() * one_then_quiet(c1, c2, t - s));
            total += w1 * w2 * p2 * phi(r2);
        }
    }
    Ok(total)
}
