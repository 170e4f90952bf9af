//! The m-adic prefix tree: a hierarchy built in one scan and queried in a
//! bounded number of bin probes.
//!
//! Every record's digit code places it in exactly one bin per level, the bin
//! of its length-`level` prefix. The bins of level `l + 1` refine the bins of
//! level `l`, so the per-level maps *are* the ultrametric tree; no pointer
//! structure is kept. Storing one map per level keyed by the prefix (read as
//! a base-B integer) makes the nearest-neighbor walk a short sequence of map
//! probes and makes "read off the clusters at level l" a single iteration.
//!
//! Queries never mutate the index, so a finished index can be shared freely
//! across threads. Each query reports how many bin probes it spent, which is
//! how the constant-time nearest-neighbor claim is checked rather than
//! assumed.

mod persist;

use std::collections::BTreeMap;
use std::hash::BuildHasher;

use hashbrown::hash_table::{Entry, HashTable};
use rustc_hash::{FxBuildHasher, FxHashMap};

use crate::codec::{self, DigitCode};
use crate::error::{Error, Result};
use crate::metric::{self, BaireProximity};

/// One grid cell of the hierarchy: a digit prefix and the records under it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixBin {
    prefix: Vec<u8>,
    level: usize,
    members: Vec<String>,
}

impl PrefixBin {
    /// Digits of the prefix; the length equals the level.
    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    /// Prefix rendered in the `0-9a-z` digit alphabet, e.g. `"47"`.
    pub fn prefix_label(&self) -> String {
        codec::digits_to_string(&self.prefix)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Member record ids in insertion order.
    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn density(&self) -> usize {
        self.members.len()
    }
}

/// Singleton-depth summary: for each record, the shallowest level at which
/// its bin contains only itself (records that share their full code with a
/// duplicate count at the full precision).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TraversalStats {
    /// level -> number of records whose bin first becomes singleton there.
    pub histogram: BTreeMap<usize, usize>,
    pub min_depth: usize,
    pub max_depth: usize,
    pub mean_depth: f64,
}

/// Bin-probe accounting for a single query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryStats {
    pub bin_probes: usize,
}

/// Fixed-width bin summary. Queries only ever need a bin's density, its
/// first member, and its first member other than the query, so bins store
/// just the first two slots and a count; full member lists are rebuilt from
/// the codes on demand. Keeping bins pointer-free (no per-bin heap vector)
/// is what holds the per-record build cost flat into the millions.
#[derive(Debug, Clone, Copy)]
struct Bin {
    first: u32,
    second: u32,
    count: u32,
}

impl Bin {
    const EMPTY: Self = Bin {
        first: 0,
        second: 0,
        count: 0,
    };

    fn singleton(slot: u32) -> Self {
        Bin {
            first: slot,
            second: slot,
            count: 1,
        }
    }

    fn push(&mut self, slot: u32) {
        match self.count {
            0 => *self = Bin::singleton(slot),
            1 => {
                self.second = slot;
                self.count = 2;
            }
            _ => self.count += 1,
        }
    }

    fn len(&self) -> usize {
        self.count as usize
    }

    /// First member in insertion order.
    fn first(&self) -> u32 {
        self.first
    }

    /// First member other than `slot` in insertion order. Slots are unique,
    /// so with two or more members either `first` or `second` qualifies.
    fn other_than(&self, slot: u32) -> u32 {
        debug_assert!(self.count >= 2);
        if self.first == slot {
            self.second
        } else {
            self.first
        }
    }
}

/// Bin storage for one level. A level whose digit space is small relative
/// to the record count is direct-addressed (the prefix integer is the cell
/// index), which is both the natural grid layout and far more compact than
/// hashing; levels with large sparse spaces fall back to a hash map. The
/// representations answer queries identically.
#[derive(Debug, Clone)]
enum LevelBins {
    Table(Vec<Bin>),
    Map(FxHashMap<u128, Bin>),
}

/// Largest digit space a level may direct-address (48 MB of cells).
const DENSE_CELL_LIMIT: u128 = 1 << 22;

impl LevelBins {
    fn get(&self, prefix: u128) -> Option<&Bin> {
        match self {
            LevelBins::Table(cells) => {
                let bin = &cells[prefix as usize];
                (bin.count > 0).then_some(bin)
            }
            LevelBins::Map(map) => map.get(&prefix),
        }
    }

    fn push(&mut self, prefix: u128, slot: u32) {
        match self {
            LevelBins::Table(cells) => cells[prefix as usize].push(slot),
            LevelBins::Map(map) => {
                map.entry(prefix)
                    .and_modify(|bin| bin.push(slot))
                    .or_insert_with(|| Bin::singleton(slot));
            }
        }
    }

    /// Number of non-empty bins. Linear in the cell count for tables; meant
    /// for assertions and reporting, not hot paths.
    fn non_empty(&self) -> usize {
        match self {
            LevelBins::Table(cells) => cells.iter().filter(|bin| bin.count > 0).count(),
            LevelBins::Map(map) => map.len(),
        }
    }
}

/// Prefix-tree index over records with equal base and precision.
#[derive(Debug, Clone)]
pub struct MadicIndex {
    base: u32,
    precision: usize,
    /// Record ids, slot order == insertion order.
    ids: Vec<String>,
    codes: Vec<DigitCode>,
    /// Slots keyed by the hash of their id; the id itself is read back from
    /// `ids`, so each id string is stored exactly once.
    slots_by_id: HashTable<u32>,
    /// `levels[l - 1]` holds the bins of the length-`l` prefixes, addressed
    /// by the prefix read as a base-B integer.
    levels: Vec<LevelBins>,
    scanned: u64,
}

fn id_hash(id: &str) -> u64 {
    FxBuildHasher.hash_one(id)
}

impl MadicIndex {
    /// Empty index for codes of the given base and precision.
    pub fn new(base: u32, precision: usize) -> Result<Self> {
        codec::check_base(base)?;
        codec::digit_space(base, precision)?;
        Ok(Self {
            base,
            precision,
            ids: Vec::new(),
            codes: Vec::new(),
            slots_by_id: HashTable::new(),
            levels: vec![LevelBins::Map(FxHashMap::default()); precision],
            scanned: 0,
        })
    }

    /// Builds an index by scanning `records` exactly once.
    ///
    /// Per-record work is one bin update per level, so the whole build is
    /// linear in the record count for fixed precision. The scan counter
    /// ([`records_scanned`](Self::records_scanned)) ends up equal to the
    /// number of records ingested.
    ///
    /// The scan claims a slot per record; the level maps are then filled one
    /// level at a time so each pass keeps a single map hot in cache. Slots
    /// are visited in insertion order, so the result is bin-for-bin the same
    /// index that one-by-one [`insert`](Self::insert) calls would produce.
    pub fn build<I>(records: I, base: u32, precision: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (String, DigitCode)>,
    {
        let mut index = Self::new(base, precision)?;
        let records = records.into_iter();
        index.reserve(records.size_hint().0);
        for (id, code) in records {
            index.claim_slot(id, code)?;
        }
        // Digits laid out column-major (one contiguous run per level) so each
        // fill pass streams its level sequentially instead of chasing every
        // code's heap block once per level.
        let n = index.codes.len();
        let mut columns = vec![0u8; n * precision];
        for (slot, code) in index.codes.iter().enumerate() {
            for (level, &digit) in code.digits().iter().enumerate() {
                columns[level * n + slot] = digit;
            }
        }
        let space = codec::digit_space(base, precision).expect("validated by Self::new");
        if u64::try_from(space).is_ok() {
            fill_levels::<u64>(&mut index.levels, &columns, n, base);
        } else {
            fill_levels::<u128>(&mut index.levels, &columns, n, base);
        }
        Ok(index)
    }

    /// Pre-allocates room for `additional` more records so a sized build
    /// pays no rehash-and-move passes. Levels whose digit space is at most
    /// 16 cells per expected record switch to direct-addressed tables; the
    /// rest get hash capacity for the expected number of distinct prefixes.
    pub fn reserve(&mut self, additional: usize) {
        self.ids.reserve(additional);
        self.codes.reserve(additional);
        self.slots_by_id
            .reserve(additional, |&slot| id_hash(&self.ids[slot as usize]));
        for (depth, level_bins) in self.levels.iter_mut().enumerate() {
            let Ok(space) = codec::digit_space(self.base, depth + 1) else {
                continue;
            };
            match level_bins {
                LevelBins::Table(_) => {}
                LevelBins::Map(map) => {
                    if space <= DENSE_CELL_LIMIT && space <= 16 * additional.max(map.len()) as u128
                    {
                        let mut cells = vec![Bin::EMPTY; space as usize];
                        for (&prefix, &bin) in map.iter() {
                            cells[prefix as usize] = bin;
                        }
                        *level_bins = LevelBins::Table(cells);
                    } else {
                        let cap = expected_distinct(space, additional);
                        map.reserve(cap.saturating_sub(map.len()));
                    }
                }
            }
        }
    }

    /// Adds one record, touching exactly one bin per level.
    ///
    /// Inserting records one by one, in any order, yields an index with
    /// bin-for-bin the same membership as a batch build over the union.
    pub fn insert(&mut self, id: impl Into<String>, code: DigitCode) -> Result<()> {
        let slot = self.claim_slot(id.into(), code)?;
        let mut prefix = 0u128;
        for level in 0..self.precision {
            let digit = self.codes[slot as usize].digits()[level];
            prefix = prefix * u128::from(self.base) + u128::from(digit);
            self.levels[level].push(prefix, slot);
        }
        Ok(())
    }

    /// Validates one record, assigns it the next slot, and stores it. Level
    /// maps are not touched; the caller owes one bin update per level.
    fn claim_slot(&mut self, id: String, code: DigitCode) -> Result<u32> {
        if code.base() != self.base {
            return Err(Error::BaseMismatch(self.base, code.base()));
        }
        if code.precision() != self.precision {
            return Err(Error::PrecisionMismatch {
                expected: self.precision,
                actual: code.precision(),
            });
        }
        let slot = u32::try_from(self.ids.len()).expect("record count exceeds u32 slots");
        match self.slots_by_id.entry(
            id_hash(&id),
            |&s| self.ids[s as usize] == id,
            |&s| id_hash(&self.ids[s as usize]),
        ) {
            Entry::Occupied(_) => return Err(Error::DuplicateId(id)),
            Entry::Vacant(vacant) => {
                vacant.insert(slot);
            }
        }
        self.ids.push(id);
        self.codes.push(code);
        self.scanned += 1;
        Ok(slot)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Depth of the tree; `|K|` in the digit-precision sense.
    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// How many records have been read since the index was created. Equals
    /// the record count: every record is scanned exactly once.
    pub fn records_scanned(&self) -> u64 {
        self.scanned
    }

    pub fn contains(&self, id: &str) -> bool {
        self.lookup(id).is_some()
    }

    /// Record ids in insertion order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    /// `(id, code)` pairs in insertion order.
    pub fn records(&self) -> impl Iterator<Item = (&str, &DigitCode)> {
        self.ids.iter().map(String::as_str).zip(self.codes.iter())
    }

    pub fn code(&self, id: &str) -> Result<&DigitCode> {
        let slot = self.slot(id)?;
        Ok(&self.codes[slot as usize])
    }

    fn lookup(&self, id: &str) -> Option<u32> {
        self.slots_by_id
            .find(id_hash(id), |&s| self.ids[s as usize] == id)
            .copied()
    }

    fn slot(&self, id: &str) -> Result<u32> {
        self.lookup(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if (1..=self.precision).contains(&level) {
            Ok(())
        } else {
            Err(Error::LevelOutOfRange {
                level,
                max: self.precision,
            })
        }
    }

    fn bin(&self, level: usize, prefix: u128) -> &Bin {
        self.levels[level - 1]
            .get(prefix)
            .expect("indexed record has a bin at every level")
    }

    /// Ultrametric distance between two indexed records, read off the tree.
    pub fn um_distance(&self, id_a: &str, id_b: &str) -> Result<BaireProximity> {
        self.um_distance_stats(id_a, id_b).map(|(d, _)| d)
    }

    /// Tree-derived distance plus probe accounting.
    ///
    /// Walks both terminals' bins level by level and reports the deepest
    /// level where they land in the same bin (the depth of their lowest
    /// common ancestor). Two probes per level, so at most `2 * precision`
    /// probes in total.
    pub fn um_distance_stats(&self, id_a: &str, id_b: &str) -> Result<(BaireProximity, QueryStats)> {
        let slot_a = self.slot(id_a)?;
        let slot_b = self.slot(id_b)?;
        let code_a = &self.codes[slot_a as usize];
        let code_b = &self.codes[slot_b as usize];
        let mut stats = QueryStats::default();
        let mut shared = 0;
        let mut prefix_a = 0u128;
        let mut prefix_b = 0u128;
        for level in 1..=self.precision {
            prefix_a = prefix_a * u128::from(self.base) + u128::from(code_a.digits()[level - 1]);
            prefix_b = prefix_b * u128::from(self.base) + u128::from(code_b.digits()[level - 1]);
            let bin_a = self.bin(level, prefix_a);
            let bin_b = self.bin(level, prefix_b);
            stats.bin_probes += 2;
            // Same bin object means same ancestor node at this level.
            if std::ptr::eq(bin_a, bin_b) {
                shared = level;
            } else {
                break;
            }
        }
        Ok((
            BaireProximity::from_lcp(shared, self.base, self.precision),
            stats,
        ))
    }

    /// Nearest neighbor of an indexed record.
    ///
    /// Ties break to the first co-member in insertion order.
    pub fn nearest_neighbor(&self, id: &str) -> Result<(String, BaireProximity)> {
        self.nearest_neighbor_stats(id).map(|(n, d, _)| (n, d))
    }

    /// Member nearest-neighbor with probe accounting.
    ///
    /// Walks up from the record's deepest bin to the first ancestor bin with
    /// a second member; that co-member is the nearest neighbor, because every
    /// deeper bin of the record is singleton and therefore no other record
    /// shares a longer prefix. Records whose level-1 bin is already singleton
    /// fall through to the root, where the first other record in insertion
    /// order sits at distance 1. At most `precision + 1` probes, independent
    /// of the record count.
    pub fn nearest_neighbor_stats(
        &self,
        id: &str,
    ) -> Result<(String, BaireProximity, QueryStats)> {
        let slot = self.slot(id)?;
        if self.count() < 2 {
            return Err(Error::NoNeighbor);
        }
        let code = &self.codes[slot as usize];
        let mut stats = QueryStats::default();
        for level in (1..=self.precision).rev() {
            let bin = self.bin(level, code.prefix_value(level));
            stats.bin_probes += 1;
            if bin.len() >= 2 {
                return Ok(self.neighbor_result(code, bin.other_than(slot), stats));
            }
        }
        // Root: the cluster of everything. Counts as one probe.
        stats.bin_probes += 1;
        let other = if slot == 0 { 1 } else { 0 };
        Ok(self.neighbor_result(code, other, stats))
    }

    /// Nearest indexed record to an external (non-indexed) code.
    pub fn nearest_neighbor_code(&self, code: &DigitCode) -> Result<(String, BaireProximity)> {
        self.nearest_neighbor_code_stats(code).map(|(n, d, _)| (n, d))
    }

    /// External-code nearest-neighbor with probe accounting.
    ///
    /// Descends the query's own prefix path to the deepest existing bin and
    /// returns its first member. Every member of that bin shares the matched
    /// prefix and nothing matches deeper, so the first member attains the
    /// minimum distance. At most `precision + 1` probes.
    pub fn nearest_neighbor_code_stats(
        &self,
        code: &DigitCode,
    ) -> Result<(String, BaireProximity, QueryStats)> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if code.base() != self.base {
            return Err(Error::BaseMismatch(self.base, code.base()));
        }
        let mut stats = QueryStats::default();
        let mut deepest: Option<u32> = None;
        let mut prefix = 0u128;
        for level in 1..=self.precision.min(code.precision()) {
            prefix = prefix * u128::from(self.base) + u128::from(code.digits()[level - 1]);
            stats.bin_probes += 1;
            match self.levels[level - 1].get(prefix) {
                Some(bin) => deepest = Some(bin.first()),
                None => break,
            }
        }
        let neighbor = match deepest {
            Some(slot) => slot,
            None => {
                // No record shares even the first digit; the root cluster
                // makes the first-inserted record the neighbor, at distance 1.
                stats.bin_probes += 1;
                0
            }
        };
        Ok(self.neighbor_result(code, neighbor, stats))
    }

    fn neighbor_result(
        &self,
        query: &DigitCode,
        neighbor: u32,
        stats: QueryStats,
    ) -> (String, BaireProximity, QueryStats) {
        let distance = metric::baire_distance(query, &self.codes[neighbor as usize])
            .expect("indexed codes share the index base");
        (self.ids[neighbor as usize].clone(), distance, stats)
    }

    /// All non-empty bins at `level`, sorted by prefix ascending. Member
    /// lists are materialized from the codes in one pass; within a bin they
    /// come out in insertion order because slots are scanned ascending.
    pub fn bins_at_level(&self, level: usize) -> Result<Vec<PrefixBin>> {
        self.check_level(level)?;
        let mut groups: BTreeMap<u128, Vec<String>> = BTreeMap::new();
        for (slot, code) in self.codes.iter().enumerate() {
            groups
                .entry(code.prefix_value(level))
                .or_default()
                .push(self.ids[slot].clone());
        }
        debug_assert_eq!(groups.len(), self.levels[level - 1].non_empty());
        Ok(groups
            .into_iter()
            .map(|(prefix, members)| PrefixBin {
                prefix: value_to_digits(prefix, self.base, level),
                level,
                members,
            })
            .collect())
    }

    /// Singleton-depth statistics over all records.
    pub fn depth_stats(&self) -> Result<TraversalStats> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
        let mut total = 0usize;
        for code in &self.codes {
            let mut depth = self.precision;
            let mut prefix = 0u128;
            for level in 1..=self.precision {
                prefix = prefix * u128::from(self.base) + u128::from(code.digits()[level - 1]);
                if self.bin(level, prefix).len() == 1 {
                    depth = level;
                    break;
                }
            }
            *histogram.entry(depth).or_insert(0) += 1;
            total += depth;
        }
        let min_depth = *histogram.keys().next().expect("non-empty histogram");
        let max_depth = *histogram.keys().next_back().expect("non-empty histogram");
        Ok(TraversalStats {
            histogram,
            min_depth,
            max_depth,
            mean_depth: total as f64 / self.count() as f64,
        })
    }

    /// Rebuilds the index at a coarser precision by truncating every code.
    ///
    /// Distances can only grow: a pair at prefix length `v` ends up at
    /// `min(v, new_precision)`. Bins at levels up to `new_precision` are
    /// unchanged.
    pub fn truncated(&self, new_precision: usize) -> Result<Self> {
        let mut records = Vec::with_capacity(self.count());
        for (id, code) in self.records() {
            records.push((id.to_string(), codec::truncate(code, new_precision)?));
        }
        Self::build(records, self.base, new_precision)
    }
}

/// Prefix accumulator for the level fills. Prefix values are bounded by the
/// digit space, so when that space fits in a `u64` the fills can run on
/// 64-bit arithmetic; map keys widen to `u128` either way.
trait PrefixWord: Copy {
    const ZERO: Self;
    fn extend(self, base: u32, digit: u8) -> Self;
    fn widen(self) -> u128;
}

impl PrefixWord for u64 {
    const ZERO: Self = 0;
    fn extend(self, base: u32, digit: u8) -> Self {
        self * u64::from(base) + u64::from(digit)
    }
    fn widen(self) -> u128 {
        u128::from(self)
    }
}

impl PrefixWord for u128 {
    const ZERO: Self = 0;
    fn extend(self, base: u32, digit: u8) -> Self {
        self * u128::from(base) + u128::from(digit)
    }
    fn widen(self) -> u128 {
        self
    }
}

/// Fills every level from the column-major digit matrix. Slots run in
/// insertion order, so bins come out exactly as per-record insertion would
/// leave them.
fn fill_levels<W: PrefixWord>(levels: &mut [LevelBins], columns: &[u8], n: usize, base: u32) {
    let mut prefixes = vec![W::ZERO; n];
    for (level, bins) in levels.iter_mut().enumerate() {
        let digits = &columns[level * n..(level + 1) * n];
        for (slot, (prefix, &digit)) in prefixes.iter_mut().zip(digits).enumerate() {
            *prefix = prefix.extend(base, digit);
            bins.push(prefix.widen(), slot as u32);
        }
    }
}

/// Expected number of distinct bins when `n` uniform records fall into
/// `space` cells: `space * (1 - exp(-n / space))`. An allocation hint only;
/// under-estimates just cost a rehash.
fn expected_distinct(space: u128, n: usize) -> usize {
    let space_f = space as f64;
    let n_f = n as f64;
    if space_f >= n_f * 64.0 {
        // Collisions are negligible; nearly every record opens its own bin.
        return n;
    }
    (space_f * (1.0 - (-n_f / space_f).exp())).ceil().min(n_f) as usize
}

fn value_to_digits(mut value: u128, base: u32, len: usize) -> Vec<u8> {
    let mut digits = vec![0u8; len];
    for slot in digits.iter_mut().rev() {
        *slot = (value % u128::from(base)) as u8;
        value /= u128::from(base);
    }
    debug_assert_eq!(value, 0);
    digits
}
