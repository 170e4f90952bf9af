//! Grid-based clustering over one level of the prefix tree.
//!
//! The bins of a level already partition the data into non-overlapping cells,
//! so clustering is a readout in five steps: take the cells as given, count
//! their densities, sort by density, keep cells at or above a density
//! threshold as centers, and merge neighboring centers into clusters.
//!
//! Two bins are neighbors iff their prefixes, read as base-B integers, differ
//! by exactly one — the natural one-dimensional grid adjacency for scalar
//! data. Each maximal chain of neighboring centers forms one cluster, seeded
//! by its densest bin; cluster ids count up in order of descending seed
//! density (ties by seed prefix ascending). Members of sub-threshold bins are
//! absorbed into an adjacent cluster when one exists — preferring the denser
//! adjacent center, then the lower prefix — and labeled noise otherwise.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Serialize, Serializer};

use crate::codec;
use crate::error::{Error, Result};
use crate::index::{MadicIndex, PrefixBin};

/// One grid cell: a non-empty bin and its member count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinStat {
    prefix: Vec<u8>,
    level: usize,
    density: usize,
}

impl BinStat {
    fn from_bin(bin: &PrefixBin) -> Self {
        Self {
            prefix: bin.prefix().to_vec(),
            level: bin.level(),
            density: bin.density(),
        }
    }

    /// Digits of the bin's prefix, most significant first.
    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    /// The prefix rendered as a digit string, e.g. `[3, 4]` → `"34"`.
    pub fn prefix_label(&self) -> String {
        codec::digits_to_string(&self.prefix)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn density(&self) -> usize {
        self.density
    }

    fn prefix_value(&self, base: u32) -> u128 {
        self.prefix
            .iter()
            .fold(0u128, |acc, &d| acc * u128::from(base) + u128::from(d))
    }
}

/// A record's cluster assignment. Serializes as the cluster id or `"noise"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Cluster(usize),
    Noise,
}

impl Assignment {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Assignment::Cluster(id) => Some(id),
            Assignment::Noise => None,
        }
    }

    pub fn is_noise(self) -> bool {
        matches!(self, Assignment::Noise)
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Assignment::Cluster(id) => serializer.serialize_u64(*id as u64),
            Assignment::Noise => serializer.serialize_str("noise"),
        }
    }
}

/// A full labeling of the indexed records at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterLabeling {
    level: usize,
    cluster_count: usize,
    labels: BTreeMap<String, Assignment>,
}

impl ClusterLabeling {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of clusters; ids run `0..cluster_count`.
    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    /// Assignments keyed by record id, in id order.
    pub fn labels(&self) -> &BTreeMap<String, Assignment> {
        &self.labels
    }

    pub fn assignment(&self, id: &str) -> Option<Assignment> {
        self.labels.get(id).copied()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.values().filter(|a| a.is_noise()).count()
    }
}

/// Step 1–2: the cells are the non-empty bins of `level`; count each cell's
/// density. Returned in prefix order; densities sum to the record count.
pub fn cell_densities(index: &MadicIndex, level: usize) -> Result<Vec<BinStat>> {
    Ok(index
        .bins_at_level(level)?
        .iter()
        .map(BinStat::from_bin)
        .collect())
}

/// Step 3: sort cells by density, densest first; ties by prefix ascending.
pub fn sort_by_density(mut stats: Vec<BinStat>) -> Vec<BinStat> {
    stats.sort_by(|a, b| {
        b.density
            .cmp(&a.density)
            .then_with(|| a.prefix.cmp(&b.prefix))
    });
    stats
}

/// Step 4: cells with density at or above `min_density` are cluster centers.
/// Input order (usually the density sort) is preserved.
pub fn identify_centers(sorted: &[BinStat], min_density: usize) -> Vec<BinStat> {
    sorted
        .iter()
        .filter(|s| s.density >= min_density)
        .cloned()
        .collect()
}

/// Step 5: merge neighboring centers into clusters and label every record.
///
/// Maximal chains of centers at consecutive prefix integers become clusters,
/// each seeded by its densest center. Records in non-center bins join an
/// adjacent cluster when there is one and are noise otherwise.
pub fn merge_neighbors(
    index: &MadicIndex,
    level: usize,
    centers: &[BinStat],
    min_density: usize,
) -> Result<ClusterLabeling> {
    let bins = index.bins_at_level(level)?;
    for center in centers {
        if center.level != level {
            return Err(Error::CenterLevelMismatch {
                expected: level,
                actual: center.level,
            });
        }
    }
    let base = index.base();
    let center_values: Vec<u128> = {
        let mut values: Vec<u128> = centers
            .iter()
            .filter(|c| c.density >= min_density)
            .map(|c| c.prefix_value(base))
            .collect();
        values.sort_unstable();
        values.dedup();
        values
    };

    // Chains are maximal runs of consecutive center prefixes. Record each
    // chain's seed (densest bin, ties by lower prefix) to order cluster ids.
    let density_of: HashMap<u128, usize> = bins
        .iter()
        .map(|b| (BinStat::from_bin(b).prefix_value(base), b.density()))
        .collect();
    let mut chains: Vec<(usize, u128, Vec<u128>)> = Vec::new();
    let mut run: Vec<u128> = Vec::new();
    for &value in &center_values {
        if run.last().is_some_and(|&prev| value != prev + 1) {
            chains.push(seeded(run, &density_of));
            run = Vec::new();
        }
        run.push(value);
    }
    if !run.is_empty() {
        chains.push(seeded(run, &density_of));
    }
    chains.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    let mut cluster_of: HashMap<u128, usize> = HashMap::new();
    for (id, (_, _, members)) in chains.iter().enumerate() {
        for &value in members {
            cluster_of.insert(value, id);
        }
    }

    let mut labels: BTreeMap<String, Assignment> = BTreeMap::new();
    for bin in &bins {
        let value = BinStat::from_bin(bin).prefix_value(base);
        let assignment = match cluster_of.get(&value) {
            Some(&id) => Assignment::Cluster(id),
            None => absorb_into_neighbor(value, &cluster_of, &density_of),
        };
        for id in bin.members() {
            labels.insert(id.clone(), assignment);
        }
    }
    Ok(ClusterLabeling {
        level,
        cluster_count: chains.len(),
        labels,
    })
}

fn seeded(run: Vec<u128>, density_of: &HashMap<u128, usize>) -> (usize, u128, Vec<u128>) {
    let (&seed, &density) = run
        .iter()
        .map(|v| (v, &density_of[v]))
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .expect("chains are non-empty");
    (density, seed, run)
}

/// A non-center bin joins the cluster of an adjacent center if any: the
/// denser neighbor wins, ties go to the lower prefix.
fn absorb_into_neighbor(
    value: u128,
    cluster_of: &HashMap<u128, usize>,
    density_of: &HashMap<u128, usize>,
) -> Assignment {
    let mut neighbors = Vec::new();
    if let Some(below) = value.checked_sub(1) {
        neighbors.push(below);
    }
    neighbors.push(value + 1);
    neighbors
        .into_iter()
        .filter(|v| cluster_of.contains_key(v))
        .max_by(|a, b| density_of[a].cmp(&density_of[b]).then_with(|| b.cmp(a)))
        .map_or(Assignment::Noise, |v| Assignment::Cluster(cluster_of[&v]))
}
