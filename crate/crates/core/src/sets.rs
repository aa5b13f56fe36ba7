//! Finite-sum combinatorics over a bounded horizon.
//!
//! Every object here is a finite surrogate: sets are only ever inspected on
//! `[0, bound)` and finite sums are only enumerated below a caller-chosen
//! bound.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A strictly increasing finite sequence of naturals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct AscendingSeq(Vec<u64>);

impl AscendingSeq {
    pub fn new(elements: Vec<u64>) -> Result<Self, Error> {
        if let Some(w) = elements.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::NotAscending(w[0], w[1]));
        }
        Ok(AscendingSeq(elements))
    }

    /// Like [`AscendingSeq::new`] but additionally rejects 0, which would
    /// collapse finite sums.
    pub fn generators(elements: Vec<u64>) -> Result<Self, Error> {
        if elements.first() == Some(&0) {
            return Err(Error::ZeroGenerator);
        }
        Self::new(elements)
    }

    /// `(1, 2, ..., len)`
    pub fn naturals(len: u64) -> Self {
        AscendingSeq((1..=len).collect())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<u64> {
        self.0.get(i).copied()
    }

    pub fn last(&self) -> Option<u64> {
        self.0.last().copied()
    }

    /// The subsequence from index `start` on.
    pub fn tail(&self, start: usize) -> AscendingSeq {
        AscendingSeq(self.0[start.min(self.0.len())..].to_vec())
    }

    pub fn prefix(&self, len: usize) -> AscendingSeq {
        AscendingSeq(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }
}

impl TryFrom<Vec<u64>> for AscendingSeq {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self, Error> {
        AscendingSeq::new(v)
    }
}

impl From<AscendingSeq> for Vec<u64> {
    fn from(s: AscendingSeq) -> Vec<u64> {
        s.0
    }
}

impl fmt::Display for AscendingSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A finite sum together with the generator indices it was formed from.
///
/// `block` is kept sorted and non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockSum {
    pub value: u64,
    pub block: Vec<usize>,
}

impl BlockSum {
    /// Builds the block sum over `ground` at the given indices.
    pub fn over(ground: &AscendingSeq, mut block: Vec<usize>) -> Option<BlockSum> {
        if block.is_empty() {
            return None;
        }
        block.sort_unstable();
        block.dedup();
        let mut value = 0u64;
        for &i in &block {
            value = value.checked_add(ground.get(i)?)?;
        }
        Some(BlockSum { value, block })
    }

    pub fn max_index(&self) -> usize {
        *self.block.last().expect("block sums have non-empty blocks")
    }

    pub fn min_index(&self) -> usize {
        self.block[0]
    }

    pub fn is_disjoint(&self, other: &BlockSum) -> bool {
        let (mut a, mut b) = (self.block.iter().peekable(), other.block.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Equal => return false,
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
            }
        }
        true
    }
}

/// The approximation window: elements `0..bound` are considered, and a tail
/// witness needs at least `min_tail` generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Horizon {
    pub bound: u64,
    pub min_tail: usize,
}

impl Horizon {
    pub fn new(bound: u64, min_tail: usize) -> Result<Self, Error> {
        if bound < 1 || min_tail < 1 {
            return Err(Error::BadHorizon { bound, min_tail });
        }
        Ok(Horizon { bound, min_tail })
    }

    pub fn with_bound(bound: u64) -> Result<Self, Error> {
        Self::new(bound, 1)
    }
}

/// All block sums over index sets inside `[start, len)` with value below
/// `bound`, in ascending `(value, block)` order.
pub fn fs_bounded(gen: &AscendingSeq, start: usize, bound: u64) -> Vec<BlockSum> {
    let g = gen.as_slice();
    let mut out = Vec::new();
    let mut block = Vec::new();
    // Generators ascend, so once a generator overshoots every later one does too.
    fn walk(g: &[u64], from: usize, sum: u64, bound: u64, block: &mut Vec<usize>, out: &mut Vec<BlockSum>) {
        for i in from..g.len() {
            let Some(s) = sum.checked_add(g[i]) else { break };
            if s >= bound {
                break;
            }
            block.push(i);
            out.push(BlockSum { value: s, block: block.clone() });
            walk(g, i + 1, s, bound, block, out);
            block.pop();
        }
    }
    if start <= g.len() {
        walk(g, start, 0, bound, &mut block, &mut out);
    }
    out.sort_unstable();
    out
}

/// The distinct values of [`fs_bounded`], ascending.
pub fn fs_values(gen: &AscendingSeq, start: usize, bound: u64) -> Vec<u64> {
    // Dynamic programming over reachable sums avoids materializing blocks.
    let g = gen.as_slice();
    if start >= g.len() || bound == 0 {
        return Vec::new();
    }
    let cap = bound.min(g[start..].iter().fold(0u64, |a, &x| a.saturating_add(x)).saturating_add(1));
    let mut reach = vec![false; cap as usize];
    reach[0] = true;
    let mut hi = 0usize;
    for &x in &g[start..] {
        if x >= cap {
            break;
        }
        let x = x as usize;
        let top = (hi + x).min(reach.len() - 1);
        for v in (x..=top).rev() {
            if reach[v - x] {
                reach[v] = true;
            }
        }
        hi = top;
    }
    reach
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &r)| r)
        .map(|(v, _)| v as u64)
        .collect()
}

/// `X - n = { m | m + n ∈ X }` for a finite set.
pub fn translate_down(x: &BTreeSet<u64>, n: u64) -> BTreeSet<u64> {
    x.range(n..).map(|&v| v - n).collect()
}

/// A subset of ℕ known exactly on `[0, bound)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoundedSet {
    bits: Vec<bool>,
}

impl BoundedSet {
    pub fn empty(bound: u64) -> Self {
        BoundedSet { bits: vec![false; bound as usize] }
    }

    pub fn full(bound: u64) -> Self {
        BoundedSet { bits: vec![true; bound as usize] }
    }

    pub fn from_fn(bound: u64, mut f: impl FnMut(u64) -> bool) -> Self {
        BoundedSet { bits: (0..bound).map(&mut f).collect() }
    }

    pub fn try_from_fn<E>(bound: u64, mut f: impl FnMut(u64) -> Result<bool, E>) -> Result<Self, E> {
        let bits = (0..bound).map(&mut f).collect::<Result<Vec<_>, E>>()?;
        Ok(BoundedSet { bits })
    }

    pub fn from_values(bound: u64, values: impl IntoIterator<Item = u64>) -> Self {
        let mut s = Self::empty(bound);
        for v in values {
            if v < bound {
                s.bits[v as usize] = true;
            }
        }
        s
    }

    pub fn bound(&self) -> u64 {
        self.bits.len() as u64
    }

    /// Membership of `p`; `None` outside the known window.
    pub fn get(&self, p: u64) -> Option<bool> {
        self.bits.get(usize::try_from(p).ok()?).copied()
    }

    /// Membership of `p`, treating points outside the window as absent.
    pub fn contains(&self, p: u64) -> bool {
        self.get(p).unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        BoundedSet { bits: self.bits.iter().map(|b| !b).collect() }
    }

    fn zip(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        let n = self.bits.len().min(other.bits.len());
        BoundedSet { bits: (0..n).map(|i| f(self.bits[i], other.bits[i])).collect() }
    }

    /// Intersection, known on the smaller of the two windows.
    pub fn intersect(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a || b)
    }

    /// `X - n`; the result is known on `[0, bound - n)`.
    pub fn translate_down(&self, n: u64) -> Self {
        let n = (n as usize).min(self.bits.len());
        BoundedSet { bits: self.bits[n..].to_vec() }
    }

    pub fn restrict(&self, bound: u64) -> Self {
        BoundedSet { bits: self.bits[..(bound as usize).min(self.bits.len())].to_vec() }
    }

    pub fn to_btree(&self) -> BTreeSet<u64> {
        self.iter().collect()
    }
}

impl fmt::Debug for BoundedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundedSet(<{}) ", self.bound())?;
        f.debug_set().entries(self.iter().take(32)).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(v: &[u64]) -> AscendingSeq {
        AscendingSeq::generators(v.to_vec()).unwrap()
    }

    fn values(b: &[BlockSum]) -> BTreeSet<u64> {
        b.iter().map(|s| s.value).collect()
    }

    #[test]
    fn fs_of_powers() {
        assert_eq!(values(&fs_bounded(&seq(&[1, 2, 4]), 0, 100)), (1..=7).collect());
    }

    #[test]
    fn fs_single_over_bound() {
        assert!(fs_bounded(&seq(&[5]), 0, 4).is_empty());
    }

    #[test]
    fn fs_three_five_nine() {
        let got = values(&fs_bounded(&seq(&[3, 5, 9]), 0, 20));
        assert_eq!(got, [3, 5, 8, 9, 12, 14, 17].into_iter().collect());
    }

    #[test]
    fn fs_keeps_collisions() {
        // 1+2 and 3 collide
        let fs = fs_bounded(&seq(&[1, 2, 3]), 0, 100);
        assert_eq!(fs.iter().filter(|b| b.value == 3).count(), 2);
        assert_eq!(fs.len(), 7);
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(AscendingSeq::generators(vec![0, 1]).is_err());
        assert!(AscendingSeq::new(vec![2, 2]).is_err());
        assert!(AscendingSeq::new(vec![0, 1]).is_ok());
        assert!(Horizon::new(0, 1).is_err());
        assert!(Horizon::new(4, 0).is_err());
    }

    #[test]
    fn translate_examples() {
        let x: BTreeSet<u64> = [5, 7].into();
        assert_eq!(translate_down(&x, 3), [2, 4].into());
        let y: BTreeSet<u64> = [1, 2].into();
        assert_eq!(translate_down(&y, 0), y);
        assert!(translate_down(&[2].into(), 5).is_empty());
    }

    #[test]
    fn bounded_translate_shrinks_window() {
        let s = BoundedSet::from_values(10, [3, 9]);
        let t = s.translate_down(3);
        assert_eq!(t.bound(), 7);
        assert_eq!(t.to_btree(), [0, 6].into());
        assert_eq!(t.get(7), None);
    }

    #[test]
    fn disjointness() {
        let g = seq(&[1, 2, 4, 8]);
        let a = BlockSum::over(&g, vec![0, 2]).unwrap();
        let b = BlockSum::over(&g, vec![1, 3]).unwrap();
        let c = BlockSum::over(&g, vec![2]).unwrap();
        assert!(a.is_disjoint(&b));
        assert!(!a.is_disjoint(&c));
        assert_eq!(a.value, 5);
    }

    fn gen_seq() -> impl Strategy<Value = AscendingSeq> {
        prop::collection::btree_set(1u64..60, 0..8)
            .prop_map(|s| AscendingSeq::generators(s.into_iter().collect()).unwrap())
    }

    proptest! {
        #[test]
        fn fs_monotone_in_start(g in gen_seq(), m in 0usize..8, d in 0usize..4, b in 1u64..300) {
            let m = m.min(g.len());
            let m2 = (m + d).min(g.len());
            let big = values(&fs_bounded(&g, m, b));
            let small = values(&fs_bounded(&g, m2, b));
            prop_assert!(small.is_subset(&big));
        }

        #[test]
        fn fs_values_matches_blocks(g in gen_seq(), m in 0usize..8, b in 1u64..300) {
            let m = m.min(g.len());
            let a: Vec<u64> = values(&fs_bounded(&g, m, b)).into_iter().collect();
            prop_assert_eq!(a, fs_values(&g, m, b));
        }

        #[test]
        fn fs_blocks_exact(g in gen_seq(), b in 1u64..300) {
            let fs = fs_bounded(&g, 0, b);
            let n = g.len();
            // brute-force every nonempty index subset
            let mut expected = Vec::new();
            for mask in 1u32..(1 << n) {
                let block: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let v: u64 = block.iter().map(|&i| g.as_slice()[i]).sum();
                if v < b {
                    expected.push(BlockSum { value: v, block });
                }
            }
            expected.sort();
            prop_assert_eq!(fs, expected);
        }

        #[test]
        fn block_sum_closure(g in gen_seq(), split in prop::collection::vec(0usize..4, 8), b in 1u64..400) {
            // group the ground indices into disjoint blocks (label 0 = unused)
            let n = g.len();
            let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); 3];
            for i in 0..n {
                if split[i] > 0 {
                    blocks[split[i] - 1].push(i);
                }
            }
            let mut ys: Vec<u64> = blocks.into_iter()
                .filter_map(|bl| BlockSum::over(&g, bl).map(|s| s.value))
                .collect();
            ys.sort();
            ys.dedup();
            let y = AscendingSeq::new(ys).unwrap();
            let sub = values(&fs_bounded(&y, 0, b));
            let sup = values(&fs_bounded(&g, 0, b));
            prop_assert!(sub.is_subset(&sup));
        }

        #[test]
        fn translate_composes(x in prop::collection::btree_set(0u64..100, 0..20), a in 0u64..50, b in 0u64..50) {
            prop_assert_eq!(translate_down(&translate_down(&x, a), b), translate_down(&x, a + b));
        }
    }
}
