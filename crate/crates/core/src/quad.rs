//! Quadrature helpers: a fixed Gauss-Legendre rule on `[0, 1]` and an
//! adaptive double-exponential integrator with a relative tolerance.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Gauss-Legendre nodes and weights mapped to the unit interval.
#[derive(Debug, Clone)]
pub struct UnitRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(degree: usize) -> Self {
        let degree = NonZeroUsize::new(degree).expect("quadrature degree must be positive");
        let rule = GaussLegendre::new(degree);
        let (nodes, weights) = rule
            .iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights rescaled to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let width = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (a + width * x, width * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Adaptive integral of `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
///
/// The absolute target handed to the tanh-sinh integrator is derived from a
/// coarse Gauss-Legendre estimate of the magnitude of the integral.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let coarse = UNIT_16.with(|rule| rule.integrate(a, b, |x| f(x).abs()));
    let target = (rel_tol * coarse).max(f64::MIN_POSITIVE);
    quadrature::double_exponential::integrate(&f, a, b, target).integral
}

/// 16-node Gauss-Legendre integral of `f` over `[a, b]`.
pub fn gauss16<F: FnMut(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    UNIT_16.with(|rule| rule.integrate(a, b, f))
}

thread_local! {
    static UNIT_16: UnitRule = UnitRule::new(16);
}
