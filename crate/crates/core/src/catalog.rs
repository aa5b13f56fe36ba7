//! The countable algebra of sets a filter must decide, and filter extension
//! by the iterated Hindman solver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::eval::OracleContext;
use crate::expr::SetExpr;
use crate::filter::{FfsFilter, Verdict};
use crate::hindman::{Coloring, IhtProblem, IhtSolution, SearchBudget};
use crate::sets::{fs_values, BoundedSet};

/// One set of the algebra, materialized on `[0, H)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    /// Closed expression (no terms, no parameter) denoting the set.
    pub expr: SetExpr,
    /// Family parameter the entry was built with, if any.
    pub param: Option<u64>,
    /// Downward translation applied to the base entry.
    pub shift: u64,
    pub set: BoundedSet,
    /// Stage at which the entry entered the algebra.
    pub stage: i64,
}

/// An ordered list of sets, closed under downward translations by `1..=T`
/// at insertion time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlgebraCatalog {
    entries: Vec<CatalogEntry>,
    trans_bound: u64,
}

impl AlgebraCatalog {
    pub fn new(trans_bound: u64) -> Self {
        AlgebraCatalog { entries: Vec::new(), trans_bound }
    }

    pub fn trans_bound(&self) -> u64 {
        self.trans_bound
    }

    pub fn set_trans_bound(&mut self, t: u64) {
        self.trans_bound = t;
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Adds an already-materialized entry without translates.
    pub fn push_raw(&mut self, entry: CatalogEntry) {
        self.entries.push(entry);
    }

    /// Adds `expr` (with parameter `param`) and its translates by `1..=T`,
    /// closing and materializing each under `ctx`. Returns the number of
    /// entries added.
    pub fn add(
        &mut self,
        name: &str,
        expr: &SetExpr,
        param: Option<u64>,
        ctx: &OracleContext<'_>,
        stage: i64,
    ) -> Result<usize, Error> {
        let closed = ctx.close_set(expr, param)?;
        let before = self.entries.len();
        for shift in 0..=self.trans_bound {
            let (name, expr) = if shift == 0 {
                (name.to_string(), closed.clone())
            } else {
                (format!("{name}-{shift}"), closed.clone().translate(shift))
            };
            let set = ctx.materialize(&expr, None)?;
            self.entries.push(CatalogEntry { name, expr, param, shift, set, stage });
        }
        Ok(self.entries.len() - before)
    }

    /// Verdict of every entry under `f`, in catalog order.
    pub fn verdicts(&self, f: &FfsFilter) -> Vec<(String, Verdict)> {
        self.entries.iter().map(|e| (e.name.clone(), f.member(&e.set))).collect()
    }
}

/// New entries handed to [`extend_filter`]: name, family expression, parameter.
pub type NewEntry = (String, SetExpr, Option<u64>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendParams {
    /// Desired length of the refined generator sequence.
    pub target_len: usize,
    /// Largest generator block a refined generator may use.
    pub max_block: Option<usize>,
    pub budget: SearchBudget,
}

impl Default for ExtendParams {
    fn default() -> Self {
        ExtendParams { target_len: 8, max_block: Some(3), budget: SearchBudget::default() }
    }
}

/// Outcome of one refinement.
#[derive(Clone, Debug)]
pub struct Extension {
    pub filter: FfsFilter,
    /// `None` when no entry needed refining and the generators were kept.
    pub solution: Option<IhtSolution>,
    /// Number of distinct colorings handed to the solver.
    pub colorings: usize,
}

/// Refines `f` so that it decides every entry of `cat` plus `new_entries`.
///
/// Each entry `A_k` yields the coloring `c_k(x) = 0 iff x ∈ A_k` on the
/// finite sums of the current generators. Entries already in `cat` keep the
/// polarity `f` gave them; the solver picks new generators as block sums of
/// the old ones, so `FS(y) ⊆ FS(x)`. Coloring `k` constrains tail `k`,
/// clamped to the last tail that still holds `min_tail` generators. Free
/// colorings get a color by bounded probing (In first) before the canonical
/// search runs.
/// Fraction of the search budget given to each greedy probe.
const PROBE_SHARE: u64 = 2048;

pub fn extend_filter(
    f: &FfsFilter,
    new_entries: &[NewEntry],
    cat: &mut AlgebraCatalog,
    ctx: &OracleContext<'_>,
    params: &ExtendParams,
) -> Result<Extension, Error> {
    let stage = f.stage() + 1;
    let h = f.horizon();
    let pins: Vec<Option<u8>> = cat
        .entries()
        .iter()
        .map(|e| match f.member(&e.set) {
            Verdict::In(_) => Some(0),
            Verdict::Out(_) => Some(1),
            Verdict::Undecided => None,
        })
        .collect();
    for (name, expr, param) in new_entries {
        cat.add(name, expr, *param, ctx, stage)?;
    }

    let ground = f.generators();
    let reach = fs_values(ground, 0, h.bound);
    // Deduplicate colorings by their pattern on the reachable sums.
    let mut seen: BTreeMap<(Vec<bool>, Option<u8>), ()> = BTreeMap::new();
    let mut colorings = Vec::new();
    let mut pinned = Vec::new();
    for (i, e) in cat.entries().iter().enumerate() {
        let pin = pins.get(i).copied().flatten();
        let pattern: Vec<bool> = reach.iter().map(|&v| e.set.contains(v)).collect();
        let constant = pattern.iter().all(|&b| b) || pattern.iter().all(|&b| !b);
        if constant {
            let color = u8::from(!pattern.first().copied().unwrap_or(true));
            if pin.map_or(true, |p| p == color) {
                continue;
            }
        }
        if seen.insert((pattern, pin), ()).is_some() {
            continue;
        }
        colorings.push(Coloring::from_fn(h.bound, |x| u8::from(!e.set.contains(x))));
        pinned.push(pin);
    }

    if colorings.is_empty() {
        return Ok(Extension { filter: f.with_stage(stage), solution: None, colorings: 0 });
    }

    let target_len = params.target_len.min(ground.len());
    if target_len < h.min_tail {
        return Err(Error::RefinementFailed {
            stage,
            reason: format!("target length {target_len} is shorter than min_tail {}", h.min_tail),
        });
    }
    let last_tail = target_len - h.min_tail;
    let mut tails: Vec<usize> = (0..colorings.len()).map(|k| k.min(last_tail)).collect();
    let problem = |upto: usize, tails: &[usize], pins: &[Option<u8>]| IhtProblem {
        colorings: &colorings[..upto],
        tails: tails[..upto].to_vec(),
        pinned: pins[..upto].to_vec(),
        ground,
        target_len,
        bound: h.bound,
        max_block: params.max_block,
    };
    // Fix a color for each coloring in turn, In before Out, keeping the first
    // that a bounded probe can satisfy together with the earlier ones. The
    // canonical order alone would refute every sequence starting in the thin
    // class before reaching the other one. A coloring that no probe satisfies
    // on its own tail moves to a later one: membership needs only some tail.
    let probe = SearchBudget::nodes((params.budget.max_nodes / PROBE_SHARE).max(1));
    // Solution of the last successful probe; it solves the whole problem once
    // every coloring has been placed.
    let mut found: Option<IhtSolution> = None;
    let mut all_placed = true;
    for k in 0..colorings.len() {
        let fixed = pinned[k];
        let colors: Vec<u8> = fixed.map_or(vec![0, 1], |c| vec![c]);
        let mut placed = false;
        'tails: for t in tails[k]..=last_tail {
            tails[k] = t;
            for &color in &colors {
                pinned[k] = Some(color);
                if let Ok(s) = problem(k + 1, &tails, &pinned).solve(probe) {
                    if s.complete {
                        found = Some(s);
                        placed = true;
                        break 'tails;
                    }
                }
            }
        }
        if !placed {
            tails[k] = k.min(last_tail);
            pinned[k] = fixed;
            all_placed = false;
        }
    }
    let solution = match found.filter(|_| all_placed) {
        Some(s) => s,
        None => problem(colorings.len(), &tails, &pinned)
            .solve(params.budget)
            .map_err(|e| Error::RefinementFailed { stage, reason: e.to_string() })?,
    };
    if !solution.complete {
        return Err(Error::RefinementFailed { stage, reason: "search budget exhausted".into() });
    }
    let filter = FfsFilter::new(solution.values(), h, stage)?;
    Ok(Extension { filter, solution: Some(solution), colorings: colorings.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::frechet;
    use crate::sets::{fs_bounded, AscendingSeq, Horizon};

    fn fr12() -> FfsFilter {
        FfsFilter::new(AscendingSeq::naturals(12), Horizon::with_bound(256).unwrap(), -1).unwrap()
    }

    fn params(len: usize) -> ExtendParams {
        ExtendParams { target_len: len, max_block: None, budget: SearchBudget::default() }
    }

    #[test]
    fn parity_refinement() {
        let f = fr12();
        let ctx = OracleContext::closed(f.clone());
        let mut cat = AlgebraCatalog::new(0);
        let ext = extend_filter(
            &f,
            &[("evens".into(), SetExpr::Residue { r: 0, q: 2 }, None)],
            &mut cat,
            &ctx,
            &params(3),
        )
        .unwrap();
        assert_eq!(ext.filter.generators().as_slice(), &[2, 4, 6]);
        assert_eq!(ext.filter.stage(), 0);
        assert_eq!(ext.filter.member(&cat.entries()[0].set), Verdict::In(0));
    }

    #[test]
    fn nothing_to_refine_keeps_filter() {
        let f = fr12();
        let ctx = OracleContext::closed(f.clone());
        let mut cat = AlgebraCatalog::new(0);
        cat.add("all", &SetExpr::Threshold(0), None, &ctx, -1).unwrap();
        let ext = extend_filter(&f, &[], &mut cat, &ctx, &params(3)).unwrap();
        assert_eq!(ext.filter.generators(), f.generators());
        assert!(ext.solution.is_none());
        assert_eq!(cat.verdicts(&ext.filter), cat.verdicts(&f));
    }

    #[test]
    fn residue_with_translate() {
        let f = fr12();
        let ctx = OracleContext::closed(f.clone());
        let mut cat = AlgebraCatalog::new(1);
        let ext = extend_filter(
            &f,
            &[("r3".into(), SetExpr::Residue { r: 0, q: 3 }, None)],
            &mut cat,
            &ctx,
            &params(3),
        )
        .unwrap();
        assert_eq!(cat.len(), 2);
        assert_eq!(cat.entries()[1].name, "r3-1");
        // Oracle: brute-force the same disjoint-block search over both colorings.
        let r0 = Coloring::from_fn(256, |x| u8::from(x % 3 != 0));
        let r1 = Coloring::from_fn(256, |x| u8::from((x + 1) % 3 != 0));
        let cs = [r0, r1];
        let p = IhtProblem::new(&cs, f.generators(), 3, f.horizon());
        let all = crate::hindman::brute_force(&p).unwrap();
        assert_eq!(ext.filter.generators().as_slice(), all[0].ys.iter().map(|y| y.value).collect::<Vec<_>>());
        for e in cat.entries() {
            let v = ext.filter.member(&e.set);
            let m = v.witness().expect("decided");
            let inside = v.is_in();
            for s in fs_bounded(ext.filter.generators(), m, 256) {
                assert_eq!(e.set.contains(s.value), inside);
            }
        }
    }

    #[test]
    fn stability_of_existing_entries() {
        let f = frechet(Horizon::with_bound(1024).unwrap());
        let ctx = OracleContext::closed(f.clone());
        let mut cat = AlgebraCatalog::new(0);
        let p = ExtendParams { target_len: 10, max_block: Some(3), budget: SearchBudget::default() };
        let e1 = extend_filter(&f, &[("evens".into(), SetExpr::Residue { r: 0, q: 2 }, None)], &mut cat, &ctx, &p)
            .unwrap();
        let before = cat.verdicts(&e1.filter);
        let ctx1 = OracleContext::closed(e1.filter.clone());
        let p2 = ExtendParams { target_len: 4, ..p };
        let e2 = extend_filter(&e1.filter, &[("big".into(), SetExpr::Threshold(40), None)], &mut cat, &ctx1, &p2)
            .unwrap();
        let after = cat.verdicts(&e2.filter);
        for ((n, a), (_, b)) in before.iter().zip(&after) {
            assert_eq!(a.polarity(), b.polarity(), "entry {n}");
        }
        // FS(y) ⊆ FS(x)
        let outer = fs_values(e1.filter.generators(), 0, 1024);
        assert!(fs_values(e2.filter.generators(), 0, 1024).iter().all(|v| outer.binary_search(v).is_ok()));
    }

    #[test]
    fn too_tight_is_refinement_failure() {
        // min_tail 2 leaves only tail 0, whose sums {1, 2, 3} are mixed
        let f = FfsFilter::new(AscendingSeq::generators(vec![1, 2]).unwrap(), Horizon::new(16, 2).unwrap(), -1)
            .unwrap();
        let ctx = OracleContext::closed(f.clone());
        let mut cat = AlgebraCatalog::new(0);
        let r = extend_filter(&f, &[("odd".into(), SetExpr::Residue { r: 1, q: 2 }, None)], &mut cat, &ctx, &params(2));
        assert!(matches!(r, Err(Error::RefinementFailed { stage: 0, .. })));
    }
}
