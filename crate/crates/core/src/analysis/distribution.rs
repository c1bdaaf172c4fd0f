use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Micro,
    Meso,
    Kinetic,
}

/// Mass absorbed at zero speed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StoppedMass(pub f64);

/// Weighted law of the speed of moving particles. Zero-speed mass is never
/// stored here; it lives in [`StoppedMass`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedDistribution {
    /// `(speed, weight)` sorted by speed.
    atoms: Vec<(f64, f64)>,
    total: f64,
    provenance: Provenance,
}

impl SpeedDistribution {
    pub fn from_weighted(mut atoms: Vec<(f64, f64)>, provenance: Provenance) -> Result<Self> {
        for &(s, w) in &atoms {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::domain(format!("speed must be finite and >= 0, got {s}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::domain(format!("weight must be finite and >= 0, got {w}")));
            }
        }
        atoms.retain(|&(_, w)| w > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = atoms.iter().map(|a| a.1).sum();
        Ok(Self {
            atoms,
            total,
            provenance,
        })
    }

    /// Unit-weight samples.
    pub fn from_speeds<I: IntoIterator<Item = f64>>(speeds: I, provenance: Provenance) -> Result<Self> {
        Self::from_weighted(speeds.into_iter().map(|s| (s, 1.0)).collect(), provenance)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Effective number of independent samples, `(Σw)²/Σw²`. Grid laws
    /// produced by the deterministic solver carry no sampling noise and
    /// report infinity.
    pub fn effective_samples(&self) -> f64 {
        if self.provenance == Provenance::Kinetic {
            return f64::INFINITY;
        }
        let sq: f64 = self.atoms.iter().map(|a| a.1 * a.1).sum();
        if sq == 0.0 {
            0.0
        } else {
            self.total * self.total / sq
        }
    }

    /// `Σ w·f(speed)`, not normalised.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|&(s, w)| w * f(s)).sum()
    }

    pub fn mean(&self) -> Option<f64> {
        (self.total > 0.0).then(|| self.integrate(|s| s) / self.total)
    }

    pub fn max_speed(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.0)
    }

    /// Piecewise-constant CDF of the normalised law as `(x, F(x))` breakpoints.
    fn cdf_steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.atoms.len());
        let mut acc = 0.0;
        for &(s, w) in &self.atoms {
            acc += w;
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 = acc / self.total,
                _ => out.push((s, acc / self.total)),
            }
        }
        if let Some(last) = out.last_mut() {
            last.1 = 1.0;
        }
        out
    }
}

fn merged_cdfs(p: &SpeedDistribution, q: &SpeedDistribution) -> Vec<(f64, f64, f64)> {
    // (x, F_p(x), F_q(x)) at every breakpoint of either law.
    let (a, b) = (p.cdf_steps(), q.cdf_steps());
    let (mut i, mut j) = (0, 0);
    let (mut fp, mut fq) = (0.0, 0.0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(u), Some(v)) => u.0.min(v.0),
            (Some(u), None) => u.0,
            (None, Some(v)) => v.0,
            (None, None) => unreachable!(),
        };
        if i < a.len() && a[i].0 == x {
            fp = a[i].1;
            i += 1;
        }
        if j < b.len() && b[j].0 == x {
            fq = b[j].1;
            j += 1;
        }
        out.push((x, fp, fq));
    }
    out
}

/// Exact 1D Wasserstein-1 distance between the normalised laws, as the L¹
/// distance between their CDFs.
pub fn wasserstein1(p: &SpeedDistribution, q: &SpeedDistribution) -> Result<f64> {
    if !(p.total > 0.0) || !(q.total > 0.0) {
        return Err(Error::domain("wasserstein1 needs two laws with positive mass"));
    }
    let merged = merged_cdfs(p, q);
    Ok(merged
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 - w[0].2).abs())
        .sum())
}

/// `∫ sqrt(F_p(1−F_p)/n_p + F_q(1−F_q)/n_q) dx`: the standard error of the
/// CDF difference integrated over speed. The sampling noise of
/// [`wasserstein1`] between two laws that agree is of this order.
pub fn cdf_noise_scale(p: &SpeedDistribution, q: &SpeedDistribution) -> Result<f64> {
    if !(p.total > 0.0) || !(q.total > 0.0) {
        return Err(Error::domain("cdf_noise_scale needs two laws with positive mass"));
    }
    let (np, nq) = (p.effective_samples(), q.effective_samples());
    let merged = merged_cdfs(p, q);
    Ok(merged
        .windows(2)
        .map(|w| {
            let (fp, fq) = (w[0].1, w[0].2);
            let var = fp * (1.0 - fp) / np + fq * (1.0 - fq) / nq;
            (w[1].0 - w[0].0) * var.max(0.0).sqrt()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn law(pairs: &[(f64, f64)]) -> SpeedDistribution {
        SpeedDistribution::from_weighted(pairs.to_vec(), Provenance::Meso).unwrap()
    }

    #[test]
    fn basic_values() {
        let p = law(&[(0.3, 1.0), (0.7, 2.0)]);
        assert_eq!(wasserstein1(&p, &p).unwrap(), 0.0);
        let a = law(&[(0.0, 1.0)]);
        let b = law(&[(1.0, 1.0)]);
        assert_eq!(wasserstein1(&a, &b).unwrap(), 1.0);
        // mass normalisation: scaling weights does not matter
        let c = law(&[(0.3, 5.0), (0.7, 10.0)]);
        assert!(wasserstein1(&p, &c).unwrap() < 1e-15);
    }

    #[test]
    fn zero_mass_is_rejected() {
        let empty = law(&[]);
        let a = law(&[(0.5, 1.0)]);
        assert!(matches!(wasserstein1(&empty, &a), Err(Error::Domain(_))));
        assert!(SpeedDistribution::from_weighted(vec![(-1.0, 1.0)], Provenance::Micro).is_err());
        assert!(SpeedDistribution::from_weighted(vec![(1.0, -1.0)], Provenance::Micro).is_err());
    }

    #[test]
    fn kinetic_laws_have_no_sampling_noise() {
        let g = SpeedDistribution::from_weighted(vec![(0.2, 0.5), (0.4, 0.5)], Provenance::Kinetic).unwrap();
        assert!(g.effective_samples().is_infinite());
        assert_eq!(cdf_noise_scale(&g, &g).unwrap(), 0.0);
        let m = law(&[(0.2, 1.0), (0.4, 1.0), (0.4, 1.0), (0.9, 1.0)]);
        assert!((m.effective_samples() - 4.0).abs() < 1e-12);
        assert!(cdf_noise_scale(&m, &g).unwrap() > 0.0);
    }

    fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..2.0, 0.1f64..3.0), 1..12)
    }

    proptest! {
        #[test]
        fn is_a_metric(a in atoms(), b in atoms(), c in atoms()) {
            let (p, q, r) = (law(&a), law(&b), law(&c));
            let pq = wasserstein1(&p, &q).unwrap();
            let qp = wasserstein1(&q, &p).unwrap();
            prop_assert!((pq - qp).abs() < 1e-12);
            prop_assert!(wasserstein1(&p, &p).unwrap() == 0.0);
            let pr = wasserstein1(&p, &r).unwrap();
            let rq = wasserstein1(&r, &q).unwrap();
            prop_assert!(pq <= pr + rq + 1e-12);
        }
    }
}
