use super::Crossing;

/// `m(s)`: the length of `[0, s]` covered by the union of obstacle chords.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageFunction {
    /// Disjoint, sorted, clipped to `s ≥ 0`.
    intervals: Vec<(f64, f64)>,
    /// Covered length before each interval.
    prefix: Vec<f64>,
}

impl CoverageFunction {
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn measure_up_to(&self, s: f64) -> f64 {
        let k = self.intervals.partition_point(|iv| iv.0 < s);
        if k == 0 {
            return 0.0;
        }
        let (lo, hi) = self.intervals[k - 1];
        self.prefix[k - 1] + (s.min(hi) - lo).max(0.0)
    }

    pub fn is_covered(&self, s: f64) -> bool {
        let k = self.intervals.partition_point(|iv| iv.0 <= s);
        k > 0 && s < self.intervals[k - 1].1
    }
}

/// Merges the chords of `crossings` (sorted or not) into disjoint intervals.
pub fn union_coverage(crossings: &[Crossing]) -> CoverageFunction {
    let mut chords: Vec<(f64, f64)> = crossings
        .iter()
        .map(|c| c.chord())
        .filter(|&(lo, hi)| hi > 0.0 && hi > lo)
        .map(|(lo, hi)| (lo.max(0.0), hi))
        .collect();
    chords.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(chords.len());
    for (lo, hi) in chords {
        match intervals.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => intervals.push((lo, hi)),
        }
    }
    let mut prefix = Vec::with_capacity(intervals.len());
    let mut acc = 0.0;
    for &(lo, hi) in &intervals {
        prefix.push(acc);
        acc += hi - lo;
    }
    CoverageFunction { intervals, prefix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn chord(lo: f64, hi: f64) -> Crossing {
        Crossing {
            arc_position: 0.5 * (lo + hi),
            impact: 0.0,
            chord_half: 0.5 * (hi - lo),
        }
    }

    #[test]
    fn overlapping_chords_count_once() {
        let m = union_coverage(&[chord(1.0, 2.0), chord(1.5, 3.0)]);
        assert_eq!(m.measure_up_to(4.0), 2.0);
        assert_eq!(m.measure_up_to(1.25), 0.25);
        assert_eq!(m.intervals(), &[(1.0, 3.0)]);
        assert!(m.is_covered(2.5) && !m.is_covered(3.5));
    }

    #[test]
    fn empty_and_negative_side() {
        let m = union_coverage(&[]);
        assert_eq!(m.measure_up_to(10.0), 0.0);
        let m = union_coverage(&[chord(-1.0, 0.5), chord(-3.0, -2.0)]);
        assert_eq!(m.measure_up_to(2.0), 0.5);
        assert_eq!(m.measure_up_to(0.0), 0.0);
    }

    #[test]
    fn agrees_with_grid_indicator() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let chords: Vec<Crossing> = (0..50)
            .map(|_| {
                let c = 10.0 * rng.random::<f64>();
                let h = 0.4 * rng.random::<f64>();
                chord(c - h, c + h)
            })
            .collect();
        let m = union_coverage(&chords);
        let cells = 100_000;
        let width = 10.0 / cells as f64;
        let mut covered = 0.0;
        for i in 0..cells {
            let mid = (i as f64 + 0.5) * width;
            if chords.iter().any(|c| (c.chord().0..c.chord().1).contains(&mid)) {
                covered += width;
            }
            let s = (i + 1) as f64 * width;
            // midpoint sampling misplaces at most half a cell per interval endpoint
            let bound = width * m.intervals().len() as f64 + 1e-12;
            assert!((m.measure_up_to(s) - covered).abs() <= bound);
        }
    }
}
