//! Finite checks of the ultrafilter laws and of translation invariance on a
//! catalog.

use serde::Serialize;

use crate::catalog::AlgebraCatalog;
use crate::filter::{FfsFilter, Verdict};
use std::collections::BTreeMap;

use crate::sets::{fs_values, BoundedSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    /// Every entry is decided.
    Decided,
    /// The witness tail really lies in (or outside) the set.
    Witness,
    /// `X ∈ F` and `X ⊆ Y` imply `Y ∈ F`.
    Superset,
    /// `X, Y ∈ F` imply `X ∩ Y ∈ F`.
    Intersection,
    /// Members of `F` have elements beyond every tail sum.
    Unbounded,
    /// `X ∈ F` and `n ∈ FS` of its tail give `X - n ∈ F`.
    Translation,
    /// Verdicts persist through later stages.
    Stability,
    /// A tail's finite sums lie in the set.
    Summable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entry: String,
    pub axiom: Axiom,
    pub point: Option<u64>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    /// Individual facts verified.
    pub checked: u64,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: Report) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
    }

    pub(crate) fn fail(&mut self, entry: &str, axiom: Axiom, point: Option<u64>, detail: impl Into<String>) {
        self.violations.push(Violation { entry: entry.to_string(), axiom, point, detail: detail.into() });
    }
}

/// Default number of ordered entry pairs examined by [`check_pnu`].
pub const PAIR_BUDGET: usize = 10_000;

/// Checks that `f` behaves as an ultrafilter on the entries of `cat`:
/// every entry decided with a sound witness, superset and intersection laws
/// on ordered pairs (up to `pair_budget`), and unboundedness of members.
pub fn check_pnu(f: &FfsFilter, cat: &AlgebraCatalog, pair_budget: usize) -> Report {
    let mut r = Report::default();
    let h = f.bound();
    let entries = cat.entries();
    let verdicts: Vec<Verdict> = entries.iter().map(|e| f.member(&e.set)).collect();

    for (e, &v) in entries.iter().zip(&verdicts) {
        r.checked += 1;
        let Some(m) = v.witness() else {
            r.fail(&e.name, Axiom::Decided, None, "undecided");
            continue;
        };
        let inside = v.is_in();
        let window = e.set.bound().min(h);
        let sums = fs_values(f.generators(), m, window);
        if sums.is_empty() {
            r.fail(&e.name, Axiom::Witness, None, format!("tail {m} has no sum below {window}"));
        }
        if let Some(&v) = sums.iter().find(|&&v| e.set.contains(v) != inside) {
            r.fail(&e.name, Axiom::Witness, Some(v), format!("sum {v} breaks tail {m}"));
        }
        // Unboundedness: the side chosen must reach the largest tail sum.
        let side = if inside { e.set.clone() } else { e.set.complement() };
        let top = sums.last().copied().unwrap_or(0);
        let reach = side.iter().last();
        if reach.map_or(true, |x| x < top) {
            r.fail(&e.name, Axiom::Unbounded, reach, format!("nothing at or above {top}"));
        }
    }

    let mut pairs = 0usize;
    'outer: for (i, a) in entries.iter().enumerate() {
        for (k, b) in entries.iter().enumerate() {
            if i == k {
                continue;
            }
            if pairs == pair_budget {
                break 'outer;
            }
            pairs += 1;
            r.checked += 1;
            let (va, vb) = (verdicts[i], verdicts[k]);
            if va.is_in() && subset(&a.set, &b.set) && !vb.is_in() {
                r.fail(&b.name, Axiom::Superset, None, format!("contains {} but is {vb:?}", a.name));
            }
            if i < k && va.is_in() && vb.is_in() {
                let both = a.set.intersect(&b.set);
                let vi = f.member(&both);
                if !vi.is_in() {
                    r.fail(&format!("{} & {}", a.name, b.name), Axiom::Intersection, None, format!("{vi:?}"));
                }
            }
        }
    }
    r
}

/// Checks claimed verdicts: each claimed witness tail must lie inside (In) or
/// outside (Out) the entry, and the filter must agree on the polarity.
pub fn check_claims(f: &FfsFilter, cat: &AlgebraCatalog, claims: &[Verdict]) -> Report {
    let mut r = Report::default();
    for (e, &claim) in cat.entries().iter().zip(claims) {
        let Some(m) = claim.witness() else { continue };
        r.checked += 1;
        let window = e.set.bound().min(f.bound());
        if m >= f.generators().len() {
            r.fail(&e.name, Axiom::Witness, None, format!("claimed tail {m} does not exist"));
            continue;
        }
        if let Some(&v) = fs_values(f.generators(), m, window).iter().find(|&&v| e.set.contains(v) != claim.is_in()) {
            r.fail(&e.name, Axiom::Witness, Some(v), format!("claimed {claim:?} but sum {v} disagrees"));
            continue;
        }
        let v = f.member(&e.set);
        if v.polarity() != claim.polarity() {
            r.fail(&e.name, Axiom::Decided, None, format!("claimed {claim:?}, filter gives {v:?}"));
        }
    }
    r
}

fn subset(a: &BoundedSet, b: &BoundedSet) -> bool {
    let w = a.bound().min(b.bound());
    (0..w).all(|v| !a.contains(v) || b.contains(v))
}

/// Checks translation invariance for every entry `X ∈ F`: for `n` in the
/// witness tail's finite sums, the tail starting after `n`'s block, shifted
/// by `n`, lies in `X`, and `X - n` is decided In.
///
/// Only sums `n` that leave at least `min_tail` generators after their block
/// and whose shifted tail stays below the horizon are examined.
pub fn check_dta(f: &FfsFilter, cat: &AlgebraCatalog) -> Report {
    let verdicts: Vec<Verdict> = cat.entries().iter().map(|e| f.member(&e.set)).collect();
    check_dta_claims(f, cat, &verdicts)
}

/// [`check_dta`] against claimed verdicts (one per entry), such as those
/// recorded in a serialized run, instead of recomputed ones.
pub fn check_dta_claims(f: &FfsFilter, cat: &AlgebraCatalog, claims: &[Verdict]) -> Report {
    let mut r = Report::default();
    let g = f.generators().as_slice();
    let seq = f.generators();
    let h = f.bound();
    let min_tail = f.horizon().min_tail;
    for (e, claim) in cat.entries().iter().zip(claims) {
        let Verdict::In(m) = *claim else { continue };
        let window = e.set.bound().min(h);
        let mut translated: BTreeMap<u64, Verdict> = BTreeMap::new();
        // Sums n whose block ends at l - 1 are g[l-1] plus a sum over g[m..l-1].
        for l in m + 1..=g.len().saturating_sub(min_tail) {
            let tail_sum: u64 = g[l..].iter().sum();
            let Some(room) = window.checked_sub(tail_sum) else { continue };
            let last = g[l - 1];
            if last >= room {
                continue;
            }
            let shifted = fs_values(seq, l, window);
            let mut heads = vec![0];
            heads.extend(fs_values(&seq.prefix(l - 1), m, room - last));
            for n in heads.into_iter().map(|v| v + last).filter(|&n| n < room) {
                r.checked += 1;
                if let Some(&v) = shifted.iter().find(|&&v| v + n < window && !e.set.contains(v + n)) {
                    r.fail(&e.name, Axiom::Translation, Some(n), format!("{v} + {n} missing with witness {l}"));
                    continue;
                }
                let vt = *translated.entry(n).or_insert_with(|| f.member_translate(&e.set, n));
                if !vt.is_in() {
                    r.fail(&e.name, Axiom::Translation, Some(n), format!("translate is {vt:?}"));
                }
            }
        }
    }
    r
}
