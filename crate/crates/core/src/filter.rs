//! `FFS((x_i))` filters: a set is in the filter when it contains the finite
//! sums of some tail `(x_i)_{i≥m}`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hindman::Coloring;
use crate::sets::{fs_values, AscendingSeq, BoundedSet, Horizon};

/// Membership decision for one set, with the tail index that witnesses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    In(usize),
    Out(usize),
    Undecided,
}

impl Verdict {
    pub fn is_in(self) -> bool {
        matches!(self, Verdict::In(_))
    }

    pub fn is_out(self) -> bool {
        matches!(self, Verdict::Out(_))
    }

    pub fn is_decided(self) -> bool {
        !matches!(self, Verdict::Undecided)
    }

    /// `Some(true)` for In, `Some(false)` for Out.
    pub fn polarity(self) -> Option<bool> {
        match self {
            Verdict::In(_) => Some(true),
            Verdict::Out(_) => Some(false),
            Verdict::Undecided => None,
        }
    }

    pub fn witness(self) -> Option<usize> {
        match self {
            Verdict::In(m) | Verdict::Out(m) => Some(m),
            Verdict::Undecided => None,
        }
    }
}

/// A finite approximation of `FFS((x_i))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FfsFilter {
    generators: AscendingSeq,
    horizon: Horizon,
    /// Stage that produced this filter; -1 is the Fréchet filter.
    stage: i64,
    #[serde(skip)]
    tails: OnceLock<Vec<i32>>,
}

impl PartialEq for FfsFilter {
    fn eq(&self, other: &Self) -> bool {
        self.generators == other.generators && self.horizon == other.horizon && self.stage == other.stage
    }
}

impl Eq for FfsFilter {}

/// The Fréchet filter `FFS((1, 2, 3, ...))`, truncated to `⌊√H⌋` generators
/// so that every finite sum stays below the horizon.
pub fn frechet(h: Horizon) -> FfsFilter {
    let len = h.bound.isqrt().max(h.min_tail as u64);
    FfsFilter::new(AscendingSeq::naturals(len), h, -1).expect("naturals are valid generators")
}

impl FfsFilter {
    pub fn new(generators: AscendingSeq, horizon: Horizon, stage: i64) -> Result<Self, Error> {
        if generators.get(0) == Some(0) {
            return Err(Error::ZeroGenerator);
        }
        if generators.len() < horizon.min_tail {
            return Err(Error::Config(format!(
                "{} generators cannot supply a tail of length {}",
                generators.len(),
                horizon.min_tail
            )));
        }
        Ok(FfsFilter { generators, horizon, stage, tails: OnceLock::new() })
    }

    pub fn generators(&self) -> &AscendingSeq {
        &self.generators
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn bound(&self) -> u64 {
        self.horizon.bound
    }

    pub fn stage(&self) -> i64 {
        self.stage
    }

    pub fn with_stage(&self, stage: i64) -> FfsFilter {
        FfsFilter { stage, ..self.clone() }
    }

    /// Same generators, different horizon.
    pub fn with_horizon(&self, horizon: Horizon) -> Result<FfsFilter, Error> {
        FfsFilter::new(self.generators.clone(), horizon, self.stage)
    }

    /// Largest tail start usable as a witness.
    pub fn max_witness(&self) -> Option<usize> {
        self.generators.len().checked_sub(self.horizon.min_tail)
    }

    /// For every `v < H`: the largest `m` with `v ∈ FS((x_i)_{i≥m})`, or -1.
    pub fn tail_table(&self) -> &[i32] {
        self.tails.get_or_init(|| {
            let b = self.horizon.bound as usize;
            let mut best = vec![-1i32; b];
            let g = self.generators.as_slice();
            // Scanning generators from the top down, the first pass that
            // reaches v records the largest possible minimum index.
            for i in (0..g.len()).rev() {
                let x = g[i];
                if x >= b as u64 {
                    continue;
                }
                let x = x as usize;
                let i = i as i32;
                for v in (x..b).rev() {
                    if best[v] >= 0 {
                        continue;
                    }
                    let rest = v - x;
                    if rest == 0 || best[rest] > i {
                        best[v] = i;
                    }
                }
            }
            best
        })
    }

    /// Least tail start `m` whose finite sums below the set's window all
    /// satisfy `inside`, or `None`.
    fn least_tail(&self, bound: u64, inside: impl Fn(u64) -> bool) -> Option<usize> {
        let table = self.tail_table();
        let b = (bound.min(self.horizon.bound)) as usize;
        let mut need = 0i32;
        let mut deepest = -1i32;
        for (v, &m) in table[..b].iter().enumerate() {
            if m < 0 {
                continue;
            }
            deepest = deepest.max(m);
            if !inside(v as u64) {
                need = need.max(m + 1);
            }
        }
        let max_w = self.max_witness()? as i32;
        // The witness tail must itself contribute a sum inside the window.
        (need <= max_w && need <= deepest).then_some(need as usize)
    }

    /// Verdict for a set known on `[0, X.bound())`.
    pub fn member(&self, x: &BoundedSet) -> Verdict {
        if let Some(m) = self.least_tail(x.bound(), |v| x.contains(v)) {
            return Verdict::In(m);
        }
        if let Some(m) = self.least_tail(x.bound(), |v| !x.contains(v)) {
            return Verdict::Out(m);
        }
        Verdict::Undecided
    }

    /// Verdict for `X - n` without materializing the translate.
    pub fn member_translate(&self, x: &BoundedSet, n: u64) -> Verdict {
        let bound = x.bound().saturating_sub(n);
        if let Some(m) = self.least_tail(bound, |v| x.contains(v + n)) {
            return Verdict::In(m);
        }
        if let Some(m) = self.least_tail(bound, |v| !x.contains(v + n)) {
            return Verdict::Out(m);
        }
        Verdict::Undecided
    }
}

/// `ffs_member`: see [`FfsFilter::member`].
pub fn ffs_member(f: &FfsFilter, x: &BoundedSet) -> Verdict {
    f.member(x)
}

/// `K'(n, X)`: the least `k ∈ X` with `k > n` inside the window, else 0.
pub fn k_prime(n: u64, x: &BoundedSet) -> u64 {
    let start = n.saturating_add(1);
    (start..x.bound()).find(|&k| x.contains(k)).unwrap_or(0)
}

/// `X* = { n ∈ X | X - n ∈ F }` within the window.
pub fn star_set(f: &FfsFilter, x: &BoundedSet) -> BoundedSet {
    let b = x.bound().min(f.bound());
    BoundedSet::from_fn(b, |n| x.contains(n) && f.member_translate(x, n).is_in())
}

/// Builds `x_0 < ... < x_{len-1}` with `FS((x_j)_{j≥i}) ⊆ A_i` for every
/// coloring `i`, where `A_i` is the color class of `cs[i]` that `f` decides In.
///
/// Each step picks the least element above the previous one lying in every
/// `B_i = ⋂_{n ∈ FS((x_j)_{j=i}^k) ∪ {0}} (A_i* - n)`.
pub fn build_fs_sequence_from_filter(cs: &[Coloring], f: &FfsFilter, len: usize) -> Result<AscendingSeq, Error> {
    let bound = f.bound();
    let mut classes = Vec::with_capacity(cs.len());
    let mut stars = Vec::with_capacity(cs.len());
    for (i, c) in cs.iter().enumerate() {
        let zero = c.class(0, bound);
        let class = if f.member(&zero).is_in() {
            zero
        } else {
            let one = zero.complement();
            if !f.member(&one).is_in() {
                return Err(Error::ClassNotDecided(i));
            }
            one
        };
        stars.push(star_set(f, &class));
        classes.push(class);
    }

    let mut xs: Vec<u64> = Vec::with_capacity(len);
    // sums[i] = FS((x_j)_{j=i}^k) ∪ {0}
    let mut sums: Vec<Vec<u64>> = Vec::new();
    for k in 0..len {
        sums.push(vec![0]);
        let lo = xs.last().map_or(1, |&x| x + 1);
        let active = (k + 1).min(cs.len());
        let pick = (lo..bound).find(|&x| {
            (0..active).all(|i| sums[i].iter().all(|&n| x + n < bound && stars[i].contains(x + n)))
        });
        let Some(x) = pick else {
            return Err(Error::EmptyIntersection(k));
        };
        for s in sums.iter_mut() {
            let extended: Vec<u64> = s.iter().map(|&n| n + x).collect();
            s.extend(extended);
        }
        xs.push(x);
    }

    let seq = AscendingSeq::new(xs)?;
    for (i, class) in classes.iter().enumerate() {
        for v in fs_values(&seq, i, bound) {
            assert!(class.contains(v), "finite sum {v} escaped color class {i}");
        }
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::fs_bounded;

    fn filt(g: &[u64], bound: u64, min_tail: usize) -> FfsFilter {
        FfsFilter::new(AscendingSeq::generators(g.to_vec()).unwrap(), Horizon::new(bound, min_tail).unwrap(), 0)
            .unwrap()
    }

    #[test]
    fn frechet_lengths() {
        assert_eq!(frechet(Horizon::with_bound(100).unwrap()).generators().as_slice(), (1..=10).collect::<Vec<_>>());
        assert_eq!(frechet(Horizon::with_bound(4).unwrap()).generators().as_slice(), &[1, 2]);
        assert_eq!(frechet(Horizon::with_bound(4).unwrap()).stage(), -1);
    }

    #[test]
    fn frechet_contains_thresholds() {
        let f = frechet(Horizon::with_bound(100).unwrap());
        for c in 0..=10 {
            assert!(f.member(&BoundedSet::from_fn(100, |n| n >= c)).is_in(), "c = {c}");
        }
        // the last tail is {10}, which lies below the threshold
        assert_eq!(f.member(&BoundedSet::from_fn(100, |n| n >= 11)), Verdict::Out(9));
    }

    #[test]
    fn member_threshold_on_powers() {
        let g: Vec<u64> = (0..8).map(|i| 1 << i).collect();
        let f = filt(&g, 256, 1);
        assert_eq!(f.member(&BoundedSet::from_fn(256, |n| n >= 16)), Verdict::In(4));
    }

    #[test]
    fn member_evens_and_empty() {
        let f = filt(&[2, 4, 8], 64, 1);
        assert_eq!(f.member(&BoundedSet::from_fn(64, |n| n % 2 == 0)), Verdict::In(0));
        assert_eq!(f.member(&BoundedSet::empty(64)), Verdict::Out(0));
        assert_eq!(filt(&[1, 5, 9], 64, 1).member(&BoundedSet::empty(64)), Verdict::Out(0));
    }

    #[test]
    fn undecided_with_long_min_tail() {
        let f = filt(&[1, 2, 3], 64, 2);
        assert_eq!(f.member(&BoundedSet::from_fn(64, |n| n % 2 == 0)), Verdict::Undecided);
    }

    #[test]
    fn tail_table_matches_enumeration() {
        let g = AscendingSeq::generators(vec![1, 3, 4, 9, 20]).unwrap();
        let f = FfsFilter::new(g.clone(), Horizon::with_bound(40).unwrap(), 0).unwrap();
        let table = f.tail_table();
        for v in 0..40u64 {
            let expected = (0..g.len()).rev().find(|&m| fs_bounded(&g, m, 40).iter().any(|b| b.value == v));
            assert_eq!(table[v as usize], expected.map_or(-1, |m| m as i32), "v = {v}");
        }
    }

    #[test]
    fn k_prime_examples() {
        let evens = BoundedSet::from_fn(50, |n| n % 2 == 0);
        let odds = evens.complement();
        assert_eq!(k_prime(3, &evens), 4);
        assert_eq!(k_prime(10, &BoundedSet::from_values(50, [1, 2, 3])), 0);
        assert_eq!(k_prime(0, &odds), 1);
    }

    #[test]
    fn star_examples() {
        let f = filt(&[1, 10, 100], 1000, 1);
        let x = BoundedSet::from_values(1000, [10, 100, 110]);
        assert_eq!(star_set(&f, &x).to_btree(), [10].into());
        let full = BoundedSet::full(1000);
        // X - 999 is known only at 0, which is not a finite sum
        assert_eq!(star_set(&f, &full), BoundedSet::from_fn(1000, |n| n < 999));
        assert!(star_set(&f, &BoundedSet::empty(1000)).is_empty());
    }

    #[test]
    fn builder_constant_and_empty() {
        let f = filt(&[2, 4, 6, 8], 128, 1);
        let c = Coloring::constant(0, 128);
        let x = build_fs_sequence_from_filter(std::slice::from_ref(&c), &f, 3).unwrap();
        assert_eq!(x.as_slice(), &[1, 2, 3]);
        assert!(build_fs_sequence_from_filter(&[c], &f, 0).unwrap().is_empty());
    }

    #[test]
    fn builder_parity() {
        let f = filt(&[2, 4, 6, 8, 10], 512, 1);
        let x = build_fs_sequence_from_filter(&[Coloring::residue(2, 0, 512)], &f, 4).unwrap();
        assert_eq!(x.as_slice(), &[2, 4, 6, 8]);
        assert!(fs_bounded(&x, 0, 512).iter().all(|s| s.value % 2 == 0));
    }

    #[test]
    fn builder_reports_exhaustion() {
        let f = filt(&[2, 4], 8, 1);
        assert_eq!(
            build_fs_sequence_from_filter(&[Coloring::residue(2, 0, 8)], &f, 4),
            Err(Error::EmptyIntersection(1))
        );
    }
}
