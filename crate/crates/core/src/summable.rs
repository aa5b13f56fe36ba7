//! Strongly summable variant: tail extraction, the stage-index functional,
//! monotone enumerations, and elimination that re-inserts the finite-sum set
//! of every extracted tail into the algebra.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::axioms::{Axiom, Report};
use crate::catalog::CatalogEntry;
use crate::eliminate::{eliminate_with, ElimConfig, ElimRun};
use crate::error::Error;
use crate::expr::{Program, SetExpr};
use crate::filter::{FfsFilter, Verdict};
use crate::sets::{fs_values, AscendingSeq, BoundedSet};

/// Result of [`extract_generators`]: the generators from the least witness
/// index on, or the zero sequence when the set is not a member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Extracted {
    Tail { generators: AscendingSeq, start: usize },
    ZeroSeq,
}

impl Extracted {
    pub fn tail(&self) -> Option<&AscendingSeq> {
        match self {
            Extracted::Tail { generators, .. } => Some(generators),
            Extracted::ZeroSeq => None,
        }
    }
}

/// The largest generator tail whose finite sums all lie in `x`.
pub fn extract_generators(f: &FfsFilter, x: &BoundedSet) -> Extracted {
    match f.member(x) {
        Verdict::In(m) => Extracted::Tail { generators: f.generators().tail(m), start: m },
        _ => Extracted::ZeroSeq,
    }
}

/// Least position in `filters` whose filter decides `x` In.
pub fn index_functional(filters: &[FfsFilter], x: &BoundedSet) -> Option<usize> {
    filters.iter().position(|f| f.member(x).is_in())
}

/// A finite table of a function on the naturals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Enumeration(pub Vec<u64>);

/// `g(0) = f(0)`, `g(n) = max(f(n), g(n-1) + 1)`.
pub fn hat_monotone(f: &Enumeration) -> Enumeration {
    let mut out = Vec::with_capacity(f.0.len());
    for &v in &f.0 {
        let next = match out.last() {
            Some(&prev) => v.max(u64::saturating_add(prev, 1)),
            None => v,
        };
        out.push(next);
    }
    Enumeration(out)
}

/// One extracted tail, recorded at the stage its entry first became In.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TailRecord {
    pub entry: String,
    pub stage: i64,
    pub start: usize,
    pub tail: Vec<u64>,
    /// Catalog entry holding the tail's finite sums.
    pub fs_entry: String,
    /// Verdict on that entry under the final filter.
    pub final_verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct SsRun {
    pub run: ElimRun,
    pub tails: Vec<TailRecord>,
}

fn fs_name(entry: &str) -> String {
    format!("FS[{entry}]")
}

/// [`crate::eliminate::eliminate`], additionally adding after each stage the
/// finite-sum set of the extracted tail of every entry newly decided In.
pub fn eliminate_ss(program: &Program, cfg: &ElimConfig) -> Result<SsRun, Error> {
    let mut records: Vec<TailRecord> = Vec::new();
    let mut done: BTreeSet<String> = BTreeSet::new();
    let mut hook = |f: &FfsFilter, cat: &mut crate::catalog::AlgebraCatalog, _: &[(usize, u64)]| {
        let h = f.bound();
        let mut added = Vec::new();
        for e in cat.entries() {
            if done.contains(&e.name) || e.name.starts_with("FS[") {
                continue;
            }
            let Extracted::Tail { generators, start } = extract_generators(f, &e.set) else { continue };
            done.insert(e.name.clone());
            let sums = fs_values(&generators, 0, h);
            let fs_entry = fs_name(&e.name);
            records.push(TailRecord {
                entry: e.name.clone(),
                stage: f.stage(),
                start,
                tail: generators.into_vec(),
                fs_entry: fs_entry.clone(),
                final_verdict: Verdict::Undecided,
            });
            added.push(CatalogEntry {
                name: fs_entry,
                expr: SetExpr::Literal(sums.iter().copied().collect()),
                param: None,
                shift: 0,
                set: BoundedSet::from_values(h, sums),
                stage: f.stage(),
            });
        }
        for entry in added {
            cat.push_raw(entry);
        }
        Ok(())
    };
    let run = eliminate_with(program, cfg, &mut hook)?;
    let last = run.final_filter();
    for r in &mut records {
        if let Some(e) = run.catalog.find(&r.fs_entry) {
            r.final_verdict = last.member(&e.set);
        }
    }
    Ok(SsRun { run, tails: records })
}

/// Every recorded tail's sums lie in its entry, and the finite-sum entry is
/// In under the final filter.
pub fn check_ss(ss: &SsRun) -> Report {
    let mut r = Report::default();
    let last = ss.run.final_filter();
    for t in &ss.tails {
        r.checked += 1;
        let (Some(x), Some(fs)) = (ss.run.catalog.find(&t.entry), ss.run.catalog.find(&t.fs_entry)) else {
            r.fail(&t.entry, Axiom::Summable, None, "missing catalog entry");
            continue;
        };
        if let Some(v) = fs.set.iter().find(|&v| !x.set.contains(v)) {
            r.fail(&t.entry, Axiom::Summable, Some(v), "tail sum outside the set");
        }
        let v = last.member(&fs.set);
        if !v.is_in() {
            r.fail(&t.fs_entry, Axiom::Summable, None, format!("final filter gives {v:?}"));
        }
    }
    r
}
