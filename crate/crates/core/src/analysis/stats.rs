//! Small statistical helpers: sample moments, binomial intervals,
//! Kolmogorov-Smirnov and Poisson chi-square goodness-of-fit tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr<I: IntoIterator<Item = f64>>(values: I) -> MeanEstimate {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for x in values {
        n += 1;
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    let stderr = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    MeanEstimate { mean, stderr, n }
}

/// Binomial proportion with its standard error and a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn proportion(successes: u64, trials: u64, z: f64) -> Proportion {
    let n = trials as f64;
    let p = if trials == 0 { 0.0 } else { successes as f64 / n };
    let stderr = if trials == 0 { f64::INFINITY } else { (p * (1.0 - p) / n).sqrt() };
    let (lower, upper) = if trials == 0 {
        (0.0, 1.0)
    } else {
        let z2 = z * z;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        ((centre - half).max(0.0), (centre + half).min(1.0))
    };
    Proportion {
        successes,
        trials,
        estimate: p,
        stderr,
        lower,
        upper,
    }
}

/// One-sample KS statistic of `samples` against `cdf`. Sorts in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` at sample size `n`, with the
/// Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS p-value using the effective size `na·nb/(na+nb)`.
pub fn ks_two_sample_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na as f64 * nb as f64 / (na + nb) as f64).round() as usize;
    ks_pvalue(d, ne.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub pvalue: f64,
}

/// Pearson chi-square test of integer counts against `Poisson(mean)`.
/// Cells are merged from the tails until each expects at least 5 events.
pub fn poisson_chi_square(counts: &[u64], mean: f64) -> ChiSquareTest {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut observed = vec![0u64; max + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }
    let law = Poisson::new(mean.max(1e-300)).expect("poisson mean");
    let mut expected: Vec<f64> = (0..=max).map(|k| n * law.pmf(k as u64)).collect();
    // fold the upper tail beyond `max` into the last cell
    let head: f64 = expected.iter().sum();
    *expected.last_mut().unwrap() += (n - head).max(0.0);

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        o_acc += *o as f64;
        e_acc += e;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let pvalue = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic);
    ChiSquareTest {
        statistic,
        dof,
        pvalue,
    }
}

/// `P(Poisson(mean) > n)`.
pub fn poisson_tail(mean: f64, n: u64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    // summing the upper tail directly avoids cancellation in 1 − CDF
    let mut term = (-mean).exp();
    let mut k = 0u64;
    while k < n + 1 {
        k += 1;
        term *= mean / k as f64;
    }
    let mut tail = 0.0;
    loop {
        tail += term;
        k += 1;
        term *= mean / k as f64;
        if term < 1e-18 * tail || k > n + 10_000 {
            break;
        }
    }
    tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn moments() {
        let m = mean_stderr([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let p = proportion(30, 100, 1.96);
        assert!(p.lower < 0.3 && p.upper > 0.3);
        assert!((p.stderr - (0.21f64 / 100.0).sqrt()).abs() < 1e-12);
        let z = proportion(0, 50, 1.96);
        assert_eq!(z.lower, 0.0);
        assert!(z.upper > 0.0);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shifted() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut u: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let d = ks_statistic(&mut u, |x| x.clamp(0.0, 1.0));
        assert!(ks_pvalue(d, u.len()) > 0.01);
        let mut s: Vec<f64> = u.iter().map(|x| x * x).collect();
        let d = ks_statistic(&mut s, |x| x.clamp(0.0, 1.0));
        assert!(ks_pvalue(d, s.len()) < 1e-6);
    }

    #[test]
    fn ks_pvalue_reference_points() {
        // Kolmogorov distribution: P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098
        assert!((ks_pvalue(1.36 / 1e3, 1_000_000) - 0.0494).abs() < 2e-3);
        assert!((ks_pvalue(1.63 / 1e3, 1_000_000) - 0.0098).abs() < 1e-3);
    }

    #[test]
    fn poisson_tail_values() {
        assert!((poisson_tail(1.0, 0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let direct = 1.0 - (-2.0f64).exp() * (1.0 + 2.0 + 2.0);
        assert!((poisson_tail(2.0, 2) - direct).abs() < 1e-14);
        assert_eq!(poisson_tail(0.0, 3), 0.0);
    }

    #[test]
    fn chi_square_against_poisson() {
        use rand_distr::{Distribution, Poisson as P};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let law = P::new(3.0).unwrap();
        let counts: Vec<u64> = (0..5000).map(|_| law.sample(&mut rng) as u64).collect();
        assert!(poisson_chi_square(&counts, 3.0).pvalue > 0.01);
        assert!(poisson_chi_square(&counts, 3.5).pvalue < 1e-6);
    }
}
