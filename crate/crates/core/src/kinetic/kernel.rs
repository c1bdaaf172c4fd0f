use crate::analysis::SpeedDistribution;
use crate::params::ModelParams;
use crate::profile::{crossing_deficit, SlowingProfile};
use crate::quad::UnitRule;

/// Nodes of the fixed rule used for integrals over the impact parameter.
pub const KERNEL_RULE_DEGREE: usize = 64;

/// Collision law of the limit process for one profile and field.
#[derive(Debug, Clone)]
pub struct CollisionKernel {
    profile: SlowingProfile,
    kappa: f64,
    dimension: usize,
    sigma: f64,
    rule: UnitRule,
}

impl CollisionKernel {
    pub fn new(profile: &SlowingProfile, params: &ModelParams) -> Self {
        Self {
            profile: profile.clone(),
            kappa: params.kappa,
            dimension: params.dimension,
            sigma: params.sigma(),
            rule: UnitRule::new(KERNEL_RULE_DEGREE),
        }
    }

    pub fn profile(&self) -> &SlowingProfile {
        &self.profile
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Collision rate `ℓ(v) = σ|v|`.
    pub fn collision_rate(&self, speed: f64) -> f64 {
        self.sigma * speed
    }

    /// `c(h) = a⁻¹(2κ√(1−h²))`: a crossing at impact `h` stops any particle
    /// at or below this speed. Saturates at the profile's `v_max`.
    pub fn threshold(&self, h: f64) -> f64 {
        let y = crossing_deficit(self.kappa, h);
        if y >= self.profile.a_max() {
            self.profile.v_max()
        } else {
            self.profile.invert_a(y).expect("deficit within range")
        }
    }

    /// Probability that a collision stops a particle of speed `u`:
    /// `(1 − (a(u)/2κ)²)^{(d−1)/2}` when `a(u) < 2κ`, else 0.
    pub fn k_of_u(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        let a = self
            .profile
            .evaluate_a(u.min(self.profile.v_max()))
            .expect("speed within profile range");
        let x = a / (2.0 * self.kappa);
        if !(x < 1.0) {
            return 0.0;
        }
        let base = 1.0 - x * x;
        if self.dimension == 3 {
            base
        } else {
            base.powf(0.5 * (self.dimension as f64 - 1.0))
        }
    }

    /// Exit speeds of the non-stopping collisions at speed `u > 0`, with
    /// their probabilities (summing to `1 − k(u)`).
    ///
    /// In `w = h^{d−1}` the impact law is uniform and the particle survives
    /// for `w ∈ (k(u), 1]`. The further change `w = 1 − (1 − k)y²` smooths
    /// the square-root behaviour of the exit speed at grazing incidence.
    pub fn surviving_exits(&self, u: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let k = self.k_of_u(u);
        let a = self.profile.evaluate_a(u).expect("speed within profile range");
        let span = 1.0 - k;
        let power = 1.0 / (self.dimension as f64 - 1.0);
        self.rule.mapped(0.0, 1.0).filter_map(move |(y, wy)| {
            if span <= 0.0 {
                return None;
            }
            let w = 1.0 - span * y * y;
            let h = if self.dimension == 2 { w } else { w.powf(power) };
            let remaining = a - crossing_deficit(self.kappa, h);
            let exit = if remaining > 0.0 {
                self.profile.invert_a(remaining).expect("within range")
            } else {
                0.0
            };
            Some((exit, 2.0 * span * y * wy))
        })
    }
}

/// Rate at which moving mass is absorbed at zero speed,
/// `λ_F = σ ∫ r k(r) dLaw(r)`.
pub fn lambda_f(kernel: &CollisionKernel, dist: &SpeedDistribution) -> f64 {
    kernel.sigma * dist.integrate(|r| r * kernel.k_of_u(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Provenance;
    use crate::analysis::stats;
    use rand::{Rng, SeedableRng};

    fn kernel(d: usize) -> CollisionKernel {
        let p = SlowingProfile::constant(1.0).unwrap();
        CollisionKernel::new(&p, &ModelParams::new(d, 0.1, 0.5, 1.0).unwrap())
    }

    #[test]
    fn k_examples() {
        let k = kernel(2);
        assert!((k.k_of_u(0.6) - 0.8).abs() < 1e-15);
        assert_eq!(k.k_of_u(0.0), 1.0);
        assert_eq!(k.k_of_u(1.0), 0.0);
        assert_eq!(k.k_of_u(1.5), 0.0);
    }

    #[test]
    fn k_matches_impact_sampling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000u64;
        let stops = (0..n)
            .filter(|_| {
                let h: f64 = rng.random();
                0.6 <= 2.0 * 0.5 * (1.0 - h * h).sqrt()
            })
            .count() as u64;
        let p = stats::proportion(stops, n, 1.96);
        assert!((p.estimate - 0.8).abs() < 3.0 * p.stderr);
    }

    #[test]
    fn threshold_is_nonincreasing_and_vanishes_at_grazing() {
        let k = kernel(3);
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let c = k.threshold(i as f64 / 100.0);
            assert!(c <= prev);
            prev = c;
        }
        assert_eq!(k.threshold(1.0), 0.0);
        assert!((k.threshold(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn surviving_exits_carry_the_survival_probability() {
        for d in [2, 3, 4] {
            let k = kernel(d);
            for u in [0.1, 0.5, 0.9, 1.3] {
                let total: f64 = k.surviving_exits(u).map(|(_, w)| w).sum();
                assert!((total - (1.0 - k.k_of_u(u))).abs() < 1e-13);
                assert!(k.surviving_exits(u).all(|(v, _)| v > 0.0 && v <= u));
            }
        }
    }

    #[test]
    fn lambda_f_examples() {
        let k = kernel(2);
        let point = SpeedDistribution::from_weighted(vec![(0.6, 1.0)], Provenance::Kinetic).unwrap();
        assert!((lambda_f(&k, &point) - 0.96).abs() < 1e-14);
        let fast = SpeedDistribution::from_speeds([1.0, 1.2, 2.0], Provenance::Meso).unwrap();
        assert_eq!(lambda_f(&k, &fast), 0.0);
    }
}
