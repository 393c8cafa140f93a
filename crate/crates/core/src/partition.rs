//! Set partitions of small index sets and the combinatorial constants that
//! weight the Berry–Esseen bound.
//!
//! Index sets are sorted slices of distinct 0-based coordinate indices. A
//! partition is generated from its restricted growth string: element `i`
//! of the ground set goes to block `a[i]` where `a[0] = 0` and
//! `a[i] <= 1 + max(a[..i])`. Every partition has exactly one such string,
//! so enumeration is duplicate-free, and grouping by string value yields
//! blocks already sorted by their minimum element.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Largest index set for which partitions are enumerated. Bell(12) is
/// 4 213 597.
pub const MAX_PARTITION_SET: usize = 12;

/// A partition of a finite index set into nonempty, pairwise disjoint blocks.
///
/// Blocks are sorted internally and ordered by their minimum element, so two
/// partitions are equal exactly when they have the same blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    ground: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds a partition from arbitrary blocks, canonicalizing the order.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidArgument(
                "partition has an empty block".into(),
            ));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut ground: Vec<usize> = blocks.iter().flatten().copied().collect();
        ground.sort_unstable();
        if ground.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "partition blocks are not pairwise disjoint".into(),
            ));
        }
        if blocks.iter().any(|b| b.windows(2).any(|w| w[0] == w[1])) {
            return Err(Error::InvalidArgument("block repeats an element".into()));
        }
        Ok(Self { ground, blocks })
    }

    fn from_growth_string(ground: &[usize], rgs: &[usize], num_blocks: usize) -> Self {
        let mut blocks = vec![Vec::new(); num_blocks];
        for (&elem, &b) in ground.iter().zip(rgs) {
            blocks[b].push(elem);
        }
        Self {
            ground: ground.to_vec(),
            blocks,
        }
    }

    pub fn ground_set(&self) -> &[usize] {
        &self.ground
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks, `|α|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Blocks as bit masks over coordinate indices. Indices must be below 64,
    /// which the enumeration cap guarantees for generated partitions.
    pub fn block_masks(&self) -> Vec<u64> {
        self.blocks.iter().map(|b| mask_of(b)).collect()
    }

    /// `(−1)^{|α|−1} (|α|−1)!`, the Möbius function value between this
    /// partition and the one-block partition.
    pub fn mobius(&self) -> BigInt {
        mobius_coefficient(self)
    }
}

/// Bit mask of a set of coordinate indices (all below 64).
pub fn mask_of(indices: &[usize]) -> u64 {
    indices.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

/// Coordinate indices contained in a bit mask, ascending.
pub fn indices_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1u64 << i) != 0).collect()
}

fn check_index_set(set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("index set must be nonempty".into()));
    }
    if set.len() > MAX_PARTITION_SET {
        return Err(Error::Capacity {
            what: "index set size",
            got: set.len(),
            limit: MAX_PARTITION_SET,
        });
    }
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "index set must be strictly increasing".into(),
        ));
    }
    if set[set.len() - 1] >= 64 {
        return Err(Error::InvalidArgument("indices must be below 64".into()));
    }
    Ok(())
}

/// All partitions of `set`, in lexicographic order of restricted growth
/// strings. The first partition is the one-block partition and the last is
/// the partition into singletons.
pub fn enumerate_partitions(set: &[usize]) -> Result<Vec<SetPartition>> {
    check_index_set(set)?;
    let n = set.len();
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    // prefix_max[i] = max(rgs[..=i])
    let mut prefix_max = vec![0usize; n];
    loop {
        out.push(SetPartition::from_growth_string(
            set,
            &rgs,
            prefix_max[n - 1] + 1,
        ));

        // Find the rightmost position that can still be incremented.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if rgs[i] <= prefix_max[i - 1] {
                break;
            }
            i -= 1;
        }
        rgs[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(rgs[i]);
        for j in i + 1..n {
            rgs[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

/// `(−1)^{|α|−1} (|α|−1)!`.
pub fn mobius_coefficient(alpha: &SetPartition) -> BigInt {
    let k = alpha.len();
    let mut f = BigInt::one();
    for i in 2..k {
        f *= BigInt::from(i);
    }
    if k.is_multiple_of(2) {
        -f
    } else {
        f
    }
}

/// Stirling number of the second kind: partitions of a `j`-set into `k`
/// nonempty blocks. Zero when `k > j`.
pub fn stirling_partition(j: i64, k: i64) -> Result<BigUint> {
    if j < 0 || k < 0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "Stirling arguments must be nonnegative, got ({j}, {k})"
        )));
    }
    let (j, k) = (j as usize, k as usize);
    if k > j {
        return Ok(BigUint::zero());
    }
    Ok(stirling_row(j).swap_remove(k))
}

/// Row `j` of the Stirling triangle, `S(j, 0..=j)`.
fn stirling_row(j: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for n in 1..=j {
        let mut next = vec![BigUint::zero(); n + 1];
        for k in 1..=n {
            let mut v = BigUint::zero();
            if k < n {
                v += &row[k] * BigUint::from(k);
            }
            v += &row[k - 1];
            next[k] = v;
        }
        row = next;
    }
    row
}

/// Bell number: total number of partitions of a `j`-set.
pub fn bell(j: usize) -> BigUint {
    stirling_row(j).into_iter().sum()
}

/// Fubini (ordered Bell) number `Σ_k S(j,k) k!`. `fubini(0) = 1`.
pub fn fubini(j: usize) -> BigUint {
    let mut total = BigUint::zero();
    let mut fact = BigUint::one();
    for (k, s) in stirling_row(j).into_iter().enumerate() {
        if k > 0 {
            fact *= BigUint::from(k);
        }
        total += s * &fact;
    }
    total
}

/// Constants of the smoothing summand of the Berry–Esseen bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothingConstants {
    pub c1: f64,
    pub c2: f64,
}

/// `C₁ = ∛(32 / (π (1 − (3/4)^{1/m})))` and `C₂ = 12/π`.
pub fn smoothing_constants(m: usize) -> Result<SmoothingConstants> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let q = 1.0 - libm::pow(0.75, 1.0 / m as f64);
    Ok(SmoothingConstants {
        c1: libm::cbrt(32.0 / (PI * q)),
        c2: 12.0 / PI,
    })
}
