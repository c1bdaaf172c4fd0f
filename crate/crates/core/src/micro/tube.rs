use crate::ensemble::random_direction;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

/// One obstacle met by a ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Projection of the obstacle centre onto the ray.
    pub arc_position: f64,
    /// Transverse distance of the centre from the ray, in units of `ε`.
    pub impact: f64,
    /// Half-length `ε√(1−h²)` of the chord cut by the ray.
    pub chord_half: f64,
}

impl Crossing {
    pub fn new(arc_position: f64, impact: f64, epsilon: f64) -> Self {
        Self {
            arc_position,
            impact,
            chord_half: epsilon * (1.0 - impact * impact).max(0.0).sqrt(),
        }
    }

    pub fn chord(&self) -> (f64, f64) {
        (self.arc_position - self.chord_half, self.arc_position + self.chord_half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub replica: u64,
}

/// The obstacles of a Poisson configuration that a straight segment of
/// length `length` starting at `origin` can touch.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeRealization {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub length: f64,
    pub epsilon: f64,
    /// Sorted by `arc_position`; covers centres projecting onto `[−ε, L+ε]`.
    pub crossings: Vec<Crossing>,
    /// Scaled transverse offsets `ν_j ∈ B^{d−1}` (`|ν_j| = h_j`), parallel to
    /// `crossings`, when centre reconstruction was requested.
    pub offsets: Option<Vec<Vec<f64>>>,
    pub seed: Option<SeedRecord>,
}

impl TubeRealization {
    /// A tube with prescribed crossings along the first axis.
    pub fn from_crossings(dimension: usize, length: f64, epsilon: f64, mut crossings: Vec<Crossing>) -> Self {
        crossings.sort_by(|a, b| a.arc_position.total_cmp(&b.arc_position));
        let mut direction = vec![0.0; dimension];
        direction[0] = 1.0;
        Self {
            origin: vec![0.0; dimension],
            direction,
            length,
            epsilon,
            crossings,
            offsets: None,
            seed: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.direction.len()
    }

    /// Number of obstacle centres projecting into `[a, b)`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.crossings
            .iter()
            .filter(|c| c.arc_position >= a && c.arc_position < b)
            .count()
    }

    /// Crossings whose chord meets `[0, reach]`.
    pub fn touched(&self, reach: f64) -> impl Iterator<Item = (usize, &Crossing)> {
        self.crossings.iter().enumerate().filter(move |(_, c)| {
            let (lo, hi) = c.chord();
            hi > 0.0 && lo < reach
        })
    }

    /// Reconstructed obstacle centre `x + p·v̂ + ε·ν` for crossing `j`. The
    /// transverse offset is expressed in an orthonormal basis completing the
    /// ray direction; only available when offsets were sampled.
    pub fn centre(&self, j: usize) -> Option<Vec<f64>> {
        let offsets = self.offsets.as_ref()?;
        let basis = orthonormal_complement(&self.direction);
        let c = &self.crossings[j];
        let mut x: Vec<f64> = self
            .origin
            .iter()
            .zip(&self.direction)
            .map(|(o, v)| o + c.arc_position * v)
            .collect();
        for (coef, e) in offsets[j].iter().zip(&basis) {
            for (xi, ei) in x.iter_mut().zip(e) {
                *xi += self.epsilon * coef * ei;
            }
        }
        Some(x)
    }
}

/// Gram-Schmidt completion of a unit vector to an orthonormal basis; returns
/// the `d−1` complementary vectors.
fn orthonormal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        for b in &basis {
            let dot: f64 = e.iter().zip(b).map(|(x, y)| x * y).sum();
            for (ei, bi) in e.iter_mut().zip(b) {
                *ei -= dot * bi;
            }
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(e.into_iter().map(|x| x / norm).collect());
        }
    }
    basis.remove(0);
    basis
}

/// Draws `h` with distribution function `h^{d−1}` on `[0, 1]`.
pub fn sample_impact<R: Rng + ?Sized>(rng: &mut R, dimension: usize) -> f64 {
    let u: f64 = rng.random();
    if dimension == 2 {
        u
    } else {
        u.powf(1.0 / (dimension as f64 - 1.0))
    }
}

/// Samples the obstacles met by a ray of length `length` along the first axis.
///
/// Centre projections form a Poisson process of rate `σ` on `[−ε, L+ε]`.
/// The interior `[0, L]` is drawn first with exponential gaps, then the two
/// edge margins, so realisations with the same stream share their interior
/// obstacles across different `ε`.
pub fn sample_tube<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams, length: f64) -> Result<TubeRealization> {
    sample_tube_inner(rng, params, length, false)
}

/// [`sample_tube`] plus the transverse offsets needed to reconstruct the
/// obstacle centres. Offsets are drawn after all positions.
pub fn sample_tube_with_offsets<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ModelParams,
    length: f64,
) -> Result<TubeRealization> {
    sample_tube_inner(rng, params, length, true)
}

fn sample_tube_inner<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ModelParams,
    length: f64,
    with_offsets: bool,
) -> Result<TubeRealization> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::domain(format!("tube length must be > 0, got {length}")));
    }
    let d = params.dimension;
    let eps = params.epsilon;
    let sigma = params.sigma();
    let mut crossings = Vec::new();
    if sigma > 0.0 {
        let mut p = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            p += gap / sigma;
            if p > length {
                break;
            }
            let h = sample_impact(rng, d);
            crossings.push(Crossing::new(p, h, eps));
        }
        let edge = Poisson::new(sigma * eps).map_err(|e| Error::domain(e.to_string()))?;
        for start in [-eps, length] {
            let n = edge.sample(rng) as usize;
            for _ in 0..n {
                let p = start + eps * rng.random::<f64>();
                let h = sample_impact(rng, d);
                crossings.push(Crossing::new(p, h, eps));
            }
        }
        crossings.sort_by(|a, b| a.arc_position.total_cmp(&b.arc_position));
    }
    let offsets = with_offsets.then(|| {
        crossings
            .iter()
            .map(|c| {
                random_direction(rng, d - 1)
                    .into_iter()
                    .map(|x| x * c.impact)
                    .collect()
            })
            .collect()
    });
    let mut direction = vec![0.0; d];
    direction[0] = 1.0;
    Ok(TubeRealization {
        origin: vec![0.0; d],
        direction,
        length,
        epsilon: eps,
        crossings,
        offsets,
        seed: None,
    })
}
