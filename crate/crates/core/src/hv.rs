//! Hypervector primitives and level-hypervector construction.
//!
//! Bipolar vectors are stored bit-packed: bit `i` set means entry `i` is
//! `-1`, clear means `+1`. All arithmetic contracts are stated on the
//! logical `±1` values.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Quantizer;
use crate::error::{HdcError, Result};
use crate::rng::{substream, Domain};

const WORD_BITS: usize = 64;

fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

/// A `D`-dimensional bipolar vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypervector {
    dim: usize,
    words: Vec<u64>,
}

impl Hypervector {
    /// The all-`+1` vector.
    pub fn ones(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(HdcError::InvalidDimension("D must be at least 1".into()));
        }
        Ok(Self {
            dim,
            words: vec![0; words_for(dim)],
        })
    }

    /// Draws each entry equiprobably from `{-1, +1}`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Self> {
        let mut hv = Self::ones(dim)?;
        for w in hv.words.iter_mut() {
            *w = rng.random();
        }
        hv.clear_padding();
        Ok(hv)
    }

    /// Builds from logical signs; any negative value maps to `-1`.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut hv = Self::ones(signs.len())?;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => hv.negate(i),
                other => {
                    return Err(HdcError::InvalidArgument(format!(
                        "bipolar entry must be -1 or +1, got {other}"
                    )))
                }
            }
        }
        Ok(hv)
    }

    /// Reassembles a vector from its packed little-endian byte layout.
    pub fn from_packed_bytes(dim: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != dim.div_ceil(8) {
            return Err(HdcError::Shape(format!(
                "{} packed bytes cannot hold exactly {dim} entries",
                bytes.len()
            )));
        }
        let mut hv = Self::ones(dim)?;
        for (i, &b) in bytes.iter().enumerate() {
            hv.words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        if hv.has_padding_bits() {
            return Err(HdcError::Format("nonzero padding bits".into()));
        }
        Ok(hv)
    }

    /// Packed layout: entry `i` lives in byte `i / 8`, bit `i % 8`.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let n = self.dim.div_ceil(8);
        (0..n)
            .map(|i| (self.words[i / 8] >> ((i % 8) * 8)) as u8)
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Logical value of entry `i`.
    pub fn get(&self, i: usize) -> i8 {
        if self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn negate(&mut self, i: usize) {
        self.words[i / WORD_BITS] ^= 1 << (i % WORD_BITS);
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.dim).map(|i| self.get(i)).collect()
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        self.check_dim(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Exact dot product, `D - 2 * hamming`.
    pub fn dot(&self, other: &Self) -> Result<i64> {
        Ok(self.dim as i64 - 2 * self.hamming(other)? as i64)
    }

    pub fn to_int_vector(&self) -> IntVector {
        let mut v = IntVector::zeros(self.dim);
        v.add_hypervector(self);
        v
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(HdcError::Shape(format!(
                "dimension {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    fn clear_padding(&mut self) {
        let rem = self.dim % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    fn has_padding_bits(&self) -> bool {
        let rem = self.dim % WORD_BITS;
        rem != 0 && self.words.last().is_some_and(|w| w >> rem != 0)
    }
}

/// Random bipolar vector that is a pure function of `(seed, dim)`.
pub fn random_bipolar(seed: u64, dim: usize) -> Result<Hypervector> {
    Hypervector::random(&mut substream(seed, Domain::Standalone, 0), dim)
}

/// Integer-valued `D`-vector produced by bundling bipolar vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntVector {
    entries: Vec<i32>,
}

impl IntVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0; dim],
        }
    }

    pub fn from_entries(entries: Vec<i32>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<i32> {
        self.entries
    }

    /// Adds the `±1` entries of `hv`. Caller guarantees matching dims.
    pub fn add_hypervector(&mut self, hv: &Hypervector) {
        debug_assert_eq!(self.dim(), hv.dim());
        for (w, chunk) in self.entries.chunks_mut(WORD_BITS).enumerate() {
            let bits = hv.words[w];
            for (j, e) in chunk.iter_mut().enumerate() {
                *e += 1 - 2 * ((bits >> j) & 1) as i32;
            }
        }
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, other: &IntVector, weight: i32) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(HdcError::Shape(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += weight * b;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: i32) -> IntVector {
        IntVector::from_entries(self.entries.iter().map(|e| e * factor).collect())
    }

    pub fn dot(&self, other: &IntVector) -> Result<i64> {
        if self.dim() != other.dim() {
            return Err(HdcError::Shape(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| a as i64 * b as i64)
            .sum())
    }

    pub fn norm_squared(&self) -> i64 {
        self.entries.iter().map(|&a| a as i64 * a as i64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }
}

/// Per-feature, per-transition flip counts: row `n`, column `m` is the
/// number of signs flipped between level `m` and level `m + 1` of feature
/// `n`. Stored row-major with `M - 1` columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlipBudget {
    dim: usize,
    features: usize,
    levels: usize,
    budgets: Vec<u32>,
}

impl FlipBudget {
    pub fn new(dim: usize, levels: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        check_dim_levels(dim, levels)?;
        if rows.is_empty() {
            return Err(HdcError::Shape("flip budget needs at least one row".into()));
        }
        let features = rows.len();
        let mut budgets = Vec::with_capacity(features * (levels - 1));
        for (n, row) in rows.into_iter().enumerate() {
            if row.len() != levels - 1 {
                return Err(HdcError::Shape(format!(
                    "row {n} has {} entries, expected {}",
                    row.len(),
                    levels - 1
                )));
            }
            budgets.extend(row);
        }
        Ok(Self {
            dim,
            features,
            levels,
            budgets,
        })
    }

    pub fn from_flat(dim: usize, features: usize, levels: usize, budgets: Vec<u32>) -> Result<Self> {
        check_dim_levels(dim, levels)?;
        if features == 0 || budgets.len() != features * (levels - 1) {
            return Err(HdcError::Shape(format!(
                "{} budget entries for {features} features and {levels} levels",
                budgets.len()
            )));
        }
        Ok(Self {
            dim,
            features,
            levels,
            budgets,
        })
    }

    pub fn zeros(dim: usize, features: usize, levels: usize) -> Result<Self> {
        check_dim_levels(dim, levels)?;
        Self::from_flat(dim, features, levels, vec![0; features * (levels - 1)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn transitions(&self) -> usize {
        self.levels - 1
    }

    /// Flip allowance per feature, `D / 2`.
    pub fn row_capacity(&self) -> u64 {
        (self.dim / 2) as u64
    }

    pub fn row(&self, n: usize) -> &[u32] {
        let t = self.transitions();
        &self.budgets[n * t..(n + 1) * t]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [u32] {
        let t = self.transitions();
        &mut self.budgets[n * t..(n + 1) * t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.budgets.chunks(self.transitions())
    }

    pub fn get(&self, n: usize, m: usize) -> u32 {
        self.row(n)[m]
    }

    pub fn set(&mut self, n: usize, m: usize, value: u32) {
        self.row_mut(n)[m] = value;
    }

    pub fn flat(&self) -> &[u32] {
        &self.budgets
    }

    pub fn flat_mut(&mut self) -> &mut [u32] {
        &mut self.budgets
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.rows()
            .map(|r| r.iter().map(|&b| b as u64).sum())
            .collect()
    }

    /// True iff every row sum is at most `D / 2`.
    pub fn is_feasible(&self) -> bool {
        let cap = self.row_capacity();
        self.row_sums().into_iter().all(|s| s <= cap)
    }
}

fn check_dim_levels(dim: usize, levels: usize) -> Result<()> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(HdcError::InvalidDimension(format!(
            "D must be a positive even number, got {dim}"
        )));
    }
    if levels < 2 {
        return Err(HdcError::InvalidLevels(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    Ok(())
}

/// Baseline budget: `floor(D / (2 (M - 1)))` flips at every transition of
/// every feature. Leftover bits stay unflipped.
pub fn uniform_flip_budget(dim: usize, features: usize, levels: usize) -> Result<FlipBudget> {
    check_dim_levels(dim, levels)?;
    let per = (dim / (2 * (levels - 1))) as u32;
    FlipBudget::from_flat(dim, features, levels, vec![per; features * (levels - 1)])
}

/// Flip order and cumulative flip counts for one feature. Level `m` is the
/// base with the first `prefix_flips[m]` permuted positions negated, so a
/// flipped position never flips back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipSchedule {
    permutation: Vec<u32>,
    prefix_flips: Vec<u32>,
}

impl FlipSchedule {
    pub fn permutation(&self) -> &[u32] {
        &self.permutation
    }

    pub fn prefix_flips(&self) -> &[u32] {
        &self.prefix_flips
    }
}

/// All `N x M` level hypervectors for one flip budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    seed: u64,
    budget: FlipBudget,
    bases: Vec<Hypervector>,
    schedules: Vec<FlipSchedule>,
    levels: Vec<Hypervector>,
}

/// Base vector of feature `n`; depends only on `(seed, n, dim)`.
pub fn feature_base(seed: u64, n: usize, dim: usize) -> Result<Hypervector> {
    Hypervector::random(&mut substream(seed, Domain::BaseVector, n as u64), dim)
}

/// Flip order of feature `n`; depends only on `(seed, n, dim)`.
pub fn feature_permutation(seed: u64, n: usize, dim: usize) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..dim as u32).collect();
    perm.shuffle(&mut substream(seed, Domain::Permutation, n as u64));
    perm
}

/// Builds the level table for `budget`. Bases and flip orders are derived
/// from `(seed, feature)` only, so two budgets under one seed flip the same
/// positions first and differ only in how many.
pub fn build_level_table(seed: u64, budget: &FlipBudget) -> Result<LevelTable> {
    if !budget.is_feasible() {
        return Err(HdcError::ConstraintViolation(format!(
            "row sums {:?} exceed {}",
            budget.row_sums(),
            budget.row_capacity()
        )));
    }
    let dim = budget.dim();
    let mut bases = Vec::with_capacity(budget.features());
    let mut schedules = Vec::with_capacity(budget.features());
    let mut levels = Vec::with_capacity(budget.features() * budget.levels());
    for n in 0..budget.features() {
        let base = feature_base(seed, n, dim)?;
        let permutation = feature_permutation(seed, n, dim);
        let mut prefix_flips = Vec::with_capacity(budget.levels());
        prefix_flips.push(0u32);
        for &b in budget.row(n) {
            prefix_flips.push(prefix_flips.last().unwrap() + b);
        }

        let mut current = base.clone();
        levels.push(current.clone());
        for m in 1..budget.levels() {
            let (lo, hi) = (prefix_flips[m - 1] as usize, prefix_flips[m] as usize);
            for &i in &permutation[lo..hi] {
                current.negate(i as usize);
            }
            levels.push(current.clone());
        }
        bases.push(base);
        schedules.push(FlipSchedule {
            permutation,
            prefix_flips,
        });
    }
    Ok(LevelTable {
        seed,
        budget: budget.clone(),
        bases,
        schedules,
        levels,
    })
}

impl LevelTable {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn budget(&self) -> &FlipBudget {
        &self.budget
    }

    pub fn dim(&self) -> usize {
        self.budget.dim()
    }

    pub fn features(&self) -> usize {
        self.budget.features()
    }

    pub fn levels(&self) -> usize {
        self.budget.levels()
    }

    pub fn base(&self, n: usize) -> &Hypervector {
        &self.bases[n]
    }

    pub fn schedule(&self, n: usize) -> &FlipSchedule {
        &self.schedules[n]
    }

    /// Level hypervector of feature `n` (0-based) at level index `m`
    /// (0-based; index 0 is the base vector).
    pub fn level_vector(&self, n: usize, m: usize) -> Result<&Hypervector> {
        if n >= self.features() || m >= self.levels() {
            return Err(HdcError::Index(format!(
                "level ({n}, {m}) outside {} features x {} levels",
                self.features(),
                self.levels()
            )));
        }
        Ok(&self.levels[n * self.levels() + m])
    }

    /// Unchecked access for hot loops.
    pub(crate) fn level_unchecked(&self, n: usize, m: usize) -> &Hypervector {
        &self.levels[n * self.levels() + m]
    }

    /// Bundles the level vectors selected by `level_indices` (one per feature).
    pub fn bundle_levels(&self, level_indices: &[usize]) -> Result<IntVector> {
        if level_indices.len() != self.features() {
            return Err(HdcError::Shape(format!(
                "{} level indices for {} features",
                level_indices.len(),
                self.features()
            )));
        }
        let mut x = IntVector::zeros(self.dim());
        for (n, &m) in level_indices.iter().enumerate() {
            x.add_hypervector(self.level_vector(n, m)?);
        }
        Ok(x)
    }
}

/// Sample hypervector `X = sum_n L_n^{q(x_n)}`.
pub fn encode_sample(x: &[f64], quantizer: &Quantizer, table: &LevelTable) -> Result<IntVector> {
    if quantizer.features() != table.features() || quantizer.levels() != table.levels() {
        return Err(HdcError::Shape(format!(
            "quantizer is {}x{} but level table is {}x{}",
            quantizer.features(),
            quantizer.levels(),
            table.features(),
            table.levels()
        )));
    }
    let levels = quantizer.quantize_sample(x)?;
    table.bundle_levels(&levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn random_bipolar_is_deterministic_and_bipolar() {
        let a = random_bipolar(3, 4).unwrap();
        assert_eq!(a.dim(), 4);
        assert!(a.signs().iter().all(|&s| s == 1 || s == -1));
        assert_eq!(a, random_bipolar(3, 4).unwrap());
        assert!(matches!(
            random_bipolar(3, 0),
            Err(HdcError::InvalidDimension(_))
        ));
    }

    #[test]
    fn random_pairs_are_nearly_orthogonal() {
        let d = 10_000;
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        for s in 0..100u64 {
            let a = random_bipolar(2 * s, d).unwrap();
            let b = random_bipolar(2 * s + 1, d).unwrap();
            let c = (a.dot(&b).unwrap() as f64 / d as f64).abs();
            sum += c;
            max = max.max(c);
        }
        let mean = sum / 100.0;
        // E|cos| = sqrt(2 / (pi D)) ~ 0.008 for D = 10000.
        assert!(mean > 0.004 && mean < 0.015, "mean |cos| {mean}");
        assert!(max < 0.05, "max |cos| {max}");
    }

    #[test]
    fn uniform_budget_values() {
        let b = uniform_flip_budget(1000, 2, 10).unwrap();
        assert!(b.flat().iter().all(|&x| x == 55));
        let b = uniform_flip_budget(8192, 3, 20).unwrap();
        assert!(b.flat().iter().all(|&x| x == 215));
        assert!(b.row_sums().iter().all(|&s| s == 4085));
        assert!(b.is_feasible());
        let b = uniform_flip_budget(64, 1, 2).unwrap();
        assert_eq!(b.flat(), &[32]);
        assert!(matches!(
            uniform_flip_budget(64, 1, 1),
            Err(HdcError::InvalidLevels(_))
        ));
        assert!(matches!(
            uniform_flip_budget(63, 1, 4),
            Err(HdcError::InvalidDimension(_))
        ));
    }

    #[test]
    fn infeasible_budget_is_rejected() {
        let b = FlipBudget::new(16, 3, vec![vec![6, 6]]).unwrap();
        assert!(matches!(
            build_level_table(1, &b),
            Err(HdcError::ConstraintViolation(_))
        ));
    }

    #[test]
    fn zero_budget_gives_identical_levels() {
        let b = FlipBudget::zeros(64, 2, 5).unwrap();
        let t = build_level_table(9, &b).unwrap();
        for n in 0..2 {
            for m in 0..5 {
                assert_eq!(t.level_vector(n, m).unwrap(), t.base(n));
            }
        }
    }

    #[test]
    fn full_budget_reaches_exact_orthogonality() {
        let b = FlipBudget::new(64, 4, vec![vec![10, 12, 10]]).unwrap();
        let t = build_level_table(5, &b).unwrap();
        assert_eq!(t.base(0).dot(t.level_vector(0, 3).unwrap()).unwrap(), 0);
    }

    #[test]
    fn level_vector_index_errors() {
        let t = build_level_table(1, &uniform_flip_budget(32, 2, 4).unwrap()).unwrap();
        assert!(matches!(t.level_vector(2, 0), Err(HdcError::Index(_))));
        assert!(matches!(t.level_vector(0, 4), Err(HdcError::Index(_))));
        assert_eq!(t.level_vector(1, 0).unwrap(), t.base(1));
    }

    #[test]
    fn packed_bytes_round_trip() {
        let hv = random_bipolar(11, 70).unwrap();
        let bytes = hv.to_packed_bytes();
        assert_eq!(bytes.len(), 9);
        assert_eq!(Hypervector::from_packed_bytes(70, &bytes).unwrap(), hv);
    }

    #[test]
    fn shared_flip_order_across_budgets() {
        let a = FlipBudget::new(64, 3, vec![vec![5, 20]]).unwrap();
        let b = FlipBudget::new(64, 3, vec![vec![12, 3]]).unwrap();
        let ta = build_level_table(42, &a).unwrap();
        let tb = build_level_table(42, &b).unwrap();
        assert_eq!(ta.base(0), tb.base(0));
        assert_eq!(ta.schedule(0).permutation(), tb.schedule(0).permutation());
        // Level 2 of `a` (5 flips) agrees with `b` on which positions flipped.
        let diff_a: Vec<usize> = (0..64)
            .filter(|&i| ta.base(0).get(i) != ta.level_vector(0, 1).unwrap().get(i))
            .collect();
        let diff_b: Vec<usize> = (0..64)
            .filter(|&i| tb.base(0).get(i) != tb.level_vector(0, 1).unwrap().get(i))
            .collect();
        assert!(diff_a.iter().all(|i| diff_b.contains(i)));
    }

    fn budget_strategy() -> impl Strategy<Value = FlipBudget> {
        (1usize..4, 2usize..8, 1usize..40).prop_flat_map(|(n, m, half)| {
            let dim = 2 * half;
            proptest::collection::vec(0u32..=half as u32, n * (m - 1)).prop_map(move |raw| {
                let mut b = FlipBudget::from_flat(dim, n, m, raw).unwrap();
                for row in 0..n {
                    let sum: u64 = b.row(row).iter().map(|&x| x as u64).sum();
                    if sum > half as u64 {
                        for x in b.row_mut(row) {
                            *x = (*x as u64 * half as u64 / sum) as u32;
                        }
                    }
                }
                b
            })
        })
    }

    proptest! {
        #[test]
        fn pairwise_hamming_matches_prefix_difference(b in budget_strategy(), seed in any::<u64>()) {
            let t = build_level_table(seed, &b).unwrap();
            for n in 0..b.features() {
                let c = t.schedule(n).prefix_flips();
                for m in 0..b.levels() {
                    let lm = t.level_vector(n, m).unwrap();
                    prop_assert_eq!(t.base(n).dot(lm).unwrap(), b.dim() as i64 - 2 * c[m] as i64);
                    for m2 in m..b.levels() {
                        let h = lm.hamming(t.level_vector(n, m2).unwrap()).unwrap();
                        prop_assert_eq!(h as u32, c[m2] - c[m]);
                    }
                }
                for m in 0..b.transitions() {
                    prop_assert_eq!(c[m + 1] - c[m], b.get(n, m));
                }
            }
        }

        #[test]
        fn flipped_sets_are_nested(b in budget_strategy(), seed in any::<u64>()) {
            let t = build_level_table(seed, &b).unwrap();
            for n in 0..b.features() {
                let base = t.base(n);
                for m in 0..b.transitions() {
                    let cur = t.level_vector(n, m).unwrap();
                    let next = t.level_vector(n, m + 1).unwrap();
                    for i in 0..b.dim() {
                        if cur.get(i) != base.get(i) {
                            prop_assert!(next.get(i) != base.get(i));
                        }
                    }
                }
            }
        }

        #[test]
        fn bundles_obey_parity_and_bound(b in budget_strategy(), seed in any::<u64>(), pick in any::<u64>()) {
            let t = build_level_table(seed, &b).unwrap();
            let idx: Vec<usize> = (0..b.features())
                .map(|n| ((pick >> (n * 8)) as usize) % b.levels())
                .collect();
            let x = t.bundle_levels(&idx).unwrap();
            let n = b.features() as i32;
            for &e in x.entries() {
                prop_assert!(e.abs() <= n);
                prop_assert_eq!((e - n).rem_euclid(2), 0);
            }
            let mut reversed = IntVector::zeros(b.dim());
            for f in (0..b.features()).rev() {
                reversed.add_hypervector(t.level_vector(f, idx[f]).unwrap());
            }
            prop_assert_eq!(reversed, x);
        }
    }
}
