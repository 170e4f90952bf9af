//! Baselines and diagnostics: a k-means reference clusterer, partition
//! agreement scoring, an ultrametricity coefficient, and a build-time
//! scaling benchmark.
//!
//! Everything here is pure given its seed, so results are reproducible and
//! safe to compute concurrently.

use std::collections::HashSet;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codec::encode;
use crate::error::{Error, Result};
use crate::index::MadicIndex;

/// A converged (or iteration-capped) k-means run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMeansFit {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    inertia: f64,
    iterations: usize,
}

impl KMeansFit {
    /// Cluster id per input row, in row order.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Sum of squared distances from each point to its centroid.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Agreement between two labelings of the same records, counted over all
/// unordered pairs. `rand_index = (agree_same + agree_diff) / total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionScore {
    pub rand_index: f64,
    pub agree_same: u64,
    pub agree_diff: u64,
    pub disagree: u64,
}

impl PartitionScore {
    pub fn total_pairs(&self) -> u64 {
        self.agree_same + self.agree_diff + self.disagree
    }
}

/// Fraction of sampled triplets that are isosceles-with-small-base within
/// `tolerance`: with distances sorted `s <= m <= l`, the triplet counts when
/// `(l - m) / l <= tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UltrametricityReport {
    pub alpha: f64,
    pub triplets_sampled: usize,
    pub tolerance: f64,
}

/// One row of the scaling benchmark: records indexed, build wall time, and
/// the index's scan counter (one read per record).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub seconds: f64,
    pub reads: u64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row_dim(data: &[Vec<f64>]) -> Result<usize> {
    let dim = data.first().map(Vec::len).unwrap_or(0);
    if dim < 1 {
        return Err(Error::ParameterTooSmall("dimension"));
    }
    for row in data {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
    }
    Ok(dim)
}

/// Lloyd's k-means from a seeded random distinct-point initialization.
///
/// Iterates assignment (ties to the lowest centroid index) and mean update
/// until the assignment reaches a fixpoint or `max_iters` passes. A cluster
/// left empty by assignment is re-seeded from the point farthest from its
/// own centroid. Deterministic per seed.
pub fn kmeans(data: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    let n = data.len();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if max_iters < 1 {
        return Err(Error::ParameterTooSmall("max_iters"));
    }
    row_dim(data)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| data[i].clone())
        .collect();
    let mut labels = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let mut next: Vec<usize> = data.iter().map(|p| nearest(p, &centroids)).collect();

        // Re-seed clusters that attracted no points from the current
        // worst-fit point; pinning that point keeps every cluster non-empty.
        let mut pinned: Vec<usize> = Vec::new();
        for c in 0..k {
            if next.contains(&c) {
                continue;
            }
            let farthest = (0..n)
                .filter(|i| !pinned.contains(i))
                .max_by(|&a, &b| {
                    squared_distance(&data[a], &centroids[next[a]])
                        .total_cmp(&squared_distance(&data[b], &centroids[next[b]]))
                })
                .expect("k <= n leaves a point to re-seed from");
            centroids[c] = data[farthest].clone();
            next[farthest] = c;
            pinned.push(farthest);
        }

        let converged = next == labels && iterations > 1;
        labels = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = data
                .iter()
                .zip(&labels)
                .filter(|&(_, &l)| l == c)
                .map(|(p, _)| p)
                .collect();
            for (j, coord) in centroid.iter_mut().enumerate() {
                *coord = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
            }
        }
        let next_inertia: f64 = data
            .iter()
            .zip(&labels)
            .map(|(p, &l)| squared_distance(p, &centroids[l]))
            .sum();
        debug_assert!(
            next_inertia <= inertia * (1.0 + 1e-9) + 1e-12,
            "inertia rose from {inertia} to {next_inertia}"
        );
        inertia = next_inertia;
        if converged {
            break;
        }
    }

    Ok(KMeansFit {
        labels,
        centroids,
        inertia,
        iterations,
    })
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Rand index between two labelings given in the same record order.
///
/// Symmetric and invariant under renaming of cluster labels. With fewer than
/// two records there are no pairs and the index is 1 by convention.
pub fn rand_index<L: PartialEq>(a: &[L], b: &[L]) -> Result<PartitionScore> {
    if a.len() != b.len() {
        return Err(Error::LabelLengthMismatch(a.len(), b.len()));
    }
    let (mut agree_same, mut agree_diff, mut disagree) = (0u64, 0u64, 0u64);
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => agree_same += 1,
                (false, false) => agree_diff += 1,
                _ => disagree += 1,
            }
        }
    }
    let total = agree_same + agree_diff + disagree;
    Ok(PartitionScore {
        rand_index: if total == 0 {
            1.0
        } else {
            (agree_same + agree_diff) as f64 / total as f64
        },
        agree_same,
        agree_diff,
        disagree,
    })
}

/// Ultrametricity coefficient over Euclidean distances of `data`.
pub fn ultrametricity_alpha(
    data: &[Vec<f64>],
    sample_size: usize,
    tolerance: f64,
    seed: u64,
) -> Result<UltrametricityReport> {
    row_dim(data)?;
    ultrametricity_alpha_with(
        data.len(),
        |i, j| squared_distance(&data[i], &data[j]).sqrt(),
        sample_size,
        tolerance,
        seed,
    )
}

/// Ultrametricity coefficient over an arbitrary distance, e.g. Baire
/// distances read off an index.
///
/// Samples up to `sample_size` distinct triplets (all of them when fewer
/// exist). A triplet with all three distances zero counts as isosceles.
pub fn ultrametricity_alpha_with<F>(
    n: usize,
    distance: F,
    sample_size: usize,
    tolerance: f64,
    seed: u64,
) -> Result<UltrametricityReport>
where
    F: Fn(usize, usize) -> f64,
{
    if n < 3 {
        return Err(Error::TooFewPoints { n, min: 3 });
    }
    if sample_size < 1 {
        return Err(Error::ParameterTooSmall("sample size"));
    }
    let available = n as u128 * (n as u128 - 1) * (n as u128 - 2) / 6;
    let target = available.min(sample_size as u128) as usize;

    let triplets: Vec<[usize; 3]> = if target as u128 == available {
        let mut all = Vec::with_capacity(target);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    all.push([i, j, k]);
                }
            }
        }
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen: HashSet<[usize; 3]> = HashSet::with_capacity(target);
        while seen.len() < target {
            let mut t = [
                rng.random_range(0..n),
                rng.random_range(0..n),
                rng.random_range(0..n),
            ];
            t.sort_unstable();
            if t[0] != t[1] && t[1] != t[2] {
                seen.insert(t);
            }
        }
        seen.into_iter().collect()
    };

    let hits = triplets
        .iter()
        .filter(|&&[i, j, k]| {
            let mut d = [distance(i, j), distance(i, k), distance(j, k)];
            d.sort_unstable_by(f64::total_cmp);
            let (m, l) = (d[1], d[2]);
            l == 0.0 || (l - m) / l <= tolerance
        })
        .count();
    Ok(UltrametricityReport {
        alpha: hits as f64 / target as f64,
        triplets_sampled: target,
        tolerance,
    })
}

/// Builds indexes over seeded uniform scalars at each size and reports wall
/// time and the scan counter. Encoding happens outside the timed section;
/// the clock covers index construction only.
pub fn scaling_benchmark(
    sizes: &[usize],
    base: u32,
    precision: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::SizesNotAscending);
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        // One generator stream per size: growing the size list never changes
        // the data of earlier rows.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        let records: Vec<(String, crate::codec::DigitCode)> = (0..n)
            .map(|i| {
                let value: f64 = rng.random();
                (format!("r{i}"), encode(value, base, precision).expect("uniform scalars lie in [0, 1]"))
            })
            .collect();
        let start = Instant::now();
        let index = MadicIndex::build(records, base, precision)?;
        let seconds = start.elapsed().as_secs_f64();
        rows.push(BenchRow {
            n,
            seconds,
            reads: index.records_scanned(),
        });
    }
    Ok(rows)
}
