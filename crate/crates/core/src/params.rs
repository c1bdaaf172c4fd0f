use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Volume of the unit ball in `n` dimensions, via `Bⁿ = (2π/n)·Bⁿ⁻²`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Physical parameters of the obstacle field.
///
/// `lambda` is the scaled intensity; the actual density of obstacle centres
/// is `λ_ε = λ/ε^{d−1}` and a ray meets obstacles at rate `σ = λ·B^{d−1}`
/// per unit length, independent of `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dimension: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(dimension: usize, epsilon: f64, kappa: f64, lambda: f64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::config("dimension", format!("must be >= 2, got {dimension}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("must be > 0, got {epsilon}")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::config("kappa", format!("must be >= 0, got {kappa}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config("lambda", format!("must be >= 0, got {lambda}")));
        }
        Ok(Self {
            dimension,
            epsilon,
            kappa,
            lambda,
        })
    }

    /// Same field at a different obstacle radius.
    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.dimension, epsilon, self.kappa, self.lambda)
    }

    /// `B^{d−1}`, the cross-section of a unit obstacle.
    pub fn cross_section(&self) -> f64 {
        unit_ball_volume(self.dimension - 1)
    }

    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.dimension)
    }

    /// Collisions per unit path length.
    pub fn sigma(&self) -> f64 {
        self.lambda * self.cross_section()
    }

    /// Density of obstacle centres.
    pub fn lambda_eps(&self) -> f64 {
        self.lambda / self.epsilon.powi(self.dimension as i32 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn derived_rates() {
        let p = ModelParams::new(2, 0.05, 0.5, 1.0).unwrap();
        assert_eq!(p.sigma(), 2.0);
        let p = ModelParams::new(3, 0.1, 0.5, 0.5).unwrap();
        assert!((p.sigma() - PI / 2.0).abs() < 1e-15);
        assert!((p.lambda_eps() * 0.1f64.powi(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(matches!(ModelParams::new(1, 0.1, 1.0, 1.0), Err(Error::Config { field, .. }) if field == "dimension"));
        assert!(matches!(ModelParams::new(2, 0.1, -1.0, 1.0), Err(Error::Config { field, .. }) if field == "kappa"));
        assert!(ModelParams::new(2, 0.0, 1.0, 1.0).is_err());
    }
}
