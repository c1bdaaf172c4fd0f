use super::{sample_tube_with_offsets, SeedRecord, TubeRealization};
use crate::analysis::stats::{self, MeanEstimate, Proportion};
use crate::ensemble::map_replicas;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{stream, Lane};
use serde::Serialize;

/// How often two obstacles crossed by the same segment intersect each other.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OverlapEstimate {
    pub epsilon: f64,
    /// Fraction of tubes with at least one intersecting pair, with a 95%
    /// Wilson interval.
    pub probability: Proportion,
    /// Mean number of intersecting pairs per tube.
    pub pairs_per_tube: MeanEstimate,
}

fn overlapping_pairs(tube: &TubeRealization) -> Result<u64> {
    let offsets = tube
        .offsets
        .as_ref()
        .ok_or_else(|| Error::Precondition("overlap statistics need sampled transverse offsets".into()))?;
    let eps = tube.epsilon;
    let touched: Vec<usize> = tube.touched(tube.length).map(|(j, _)| j).collect();
    let mut pairs = 0;
    for (k, &i) in touched.iter().enumerate() {
        for &j in &touched[k + 1..] {
            let dp = tube.crossings[j].arc_position - tube.crossings[i].arc_position;
            if dp >= 2.0 * eps {
                break;
            }
            let dnu2: f64 = offsets[i]
                .iter()
                .zip(&offsets[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dp * dp + eps * eps * dnu2 < 4.0 * eps * eps {
                pairs += 1;
            }
        }
    }
    Ok(pairs)
}

/// Estimates the probability that two obstacles met by a segment intersect.
/// Every tube must carry transverse offsets.
pub fn overlap_statistics(params: &ModelParams, tubes: &[TubeRealization]) -> Result<OverlapEstimate> {
    let counts = tubes.iter().map(overlapping_pairs).collect::<Result<Vec<u64>>>()?;
    let hits = counts.iter().filter(|&&c| c > 0).count() as u64;
    Ok(OverlapEstimate {
        epsilon: params.epsilon,
        probability: stats::proportion(hits, tubes.len() as u64, 1.96),
        pairs_per_tube: stats::mean_stderr(counts.iter().map(|&c| c as f64)),
    })
}

/// Samples `count` independent tubes of length `length` with offsets.
pub fn sample_overlap_tubes(
    params: &ModelParams,
    length: f64,
    count: u64,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<TubeRealization>> {
    map_replicas(count, threads, |i| {
        let mut t = sample_tube_with_offsets(&mut stream(master_seed, Lane::Tube, i), params, length)?;
        t.seed = Some(SeedRecord {
            master_seed,
            replica: i,
        });
        Ok(t)
    })
    .into_iter()
    .collect()
}

/// [`overlap_statistics`] over `count` fresh tubes without retaining them.
pub fn estimate_overlap(
    params: &ModelParams,
    length: f64,
    count: u64,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<OverlapEstimate> {
    let counts = map_replicas(count, threads, |i| {
        let t = sample_tube_with_offsets(&mut stream(master_seed, Lane::Tube, i), params, length)?;
        overlapping_pairs(&t)
    })
    .into_iter()
    .collect::<Result<Vec<u64>>>()?;
    let hits = counts.iter().filter(|&&c| c > 0).count() as u64;
    Ok(OverlapEstimate {
        epsilon: params.epsilon,
        probability: stats::proportion(hits, count, 1.96),
        pairs_per_tube: stats::mean_stderr(counts.iter().map(|&c| c as f64)),
    })
}
