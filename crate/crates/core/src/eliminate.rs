//! Oracle elimination: stage the algebra of a program's term families,
//! refine the filter once per term, and evaluate the goal with the
//! ultrafilter oracle answered by the constructed filter.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::axioms::{Axiom, Report};
use crate::catalog::{extend_filter, AlgebraCatalog, ExtendParams, NewEntry};
use crate::error::Error;
use crate::eval::OracleContext;
use crate::expr::{Goal, NumExpr, Program, ProgramTerm, SetExpr};
use crate::filter::{frechet, FfsFilter, Verdict};
use crate::hindman::SearchBudget;
use crate::sets::{BoundedSet, Horizon};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElimConfig {
    pub horizon: Horizon,
    /// Translates `X - n` for `1 ≤ n ≤ T` join the catalog with every entry.
    pub trans_bound: u64,
    /// Each family is materialized for `j < J`.
    pub param_range: u64,
    pub budget: SearchBudget,
    pub max_block: Option<usize>,
}

impl ElimConfig {
    pub fn new(horizon: Horizon) -> Self {
        ElimConfig { horizon, trans_bound: 1, param_range: 2, budget: SearchBudget::default(), max_block: Some(3) }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.horizon.bound < 2 {
            return Err(Error::Config(format!("horizon must be at least 2, got {}", self.horizon.bound)));
        }
        if self.param_range == 0 {
            return Err(Error::Config("parameter range must be at least 1".into()));
        }
        Ok(())
    }

    /// Generators first asked of a refinement of a sequence of length `len`:
    /// half, so later stages still have room to pick block sums. A stage
    /// that fails retries with half the target, down to `min_tail + 1`.
    pub fn target_len(&self, len: usize) -> usize {
        (len / 2).max(self.horizon.min_tail + 1).min(len)
    }

    fn extend_params(&self, target_len: usize) -> ExtendParams {
        ExtendParams { target_len, max_block: self.max_block, budget: self.budget }
    }
}

/// Stable topological sort of the terms by oracle and term references.
/// Incomparable terms keep their input order; indices are rewritten.
pub fn validate_subterm_order(terms: &[ProgramTerm]) -> Result<Vec<ProgramTerm>, Error> {
    let n = terms.len();
    let by_name: BTreeMap<&str, usize> = terms.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let mut deps: Vec<Vec<usize>> = Vec::with_capacity(n);
    for t in terms {
        let mut d = Vec::new();
        for r in t.family.term_refs() {
            d.push(*by_name.get(r.name).ok_or_else(|| Error::UnknownTerm(r.name.to_string()))?);
        }
        d.sort_unstable();
        d.dedup();
        deps.push(d);
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !placed[i] && deps[i].iter().all(|&k| placed[k]));
        match next {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => {
                let stuck = (0..n).find(|&i| !placed[i]).expect("some term is unplaced");
                return Err(Error::CyclicReference(terms[stuck].name.clone()));
            }
        }
    }
    let mut new_index = vec![0; n];
    for (pos, &old) in order.iter().enumerate() {
        new_index[old] = pos;
    }
    Ok(order
        .iter()
        .enumerate()
        .map(|(pos, &old)| {
            let t = &terms[old];
            ProgramTerm { index: pos, name: t.name.clone(), family: reindex_set(&t.family, &by_name, &new_index) }
        })
        .collect())
}

fn reindex_set(e: &SetExpr, names: &BTreeMap<&str, usize>, map: &[usize]) -> SetExpr {
    let rs = |e: &SetExpr| Box::new(reindex_set(e, names, map));
    match e {
        SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => e.clone(),
        SetExpr::Complement(a) => SetExpr::Complement(rs(a)),
        SetExpr::Union(a, b) => SetExpr::Union(rs(a), rs(b)),
        SetExpr::Intersection(a, b) => SetExpr::Intersection(rs(a), rs(b)),
        SetExpr::TranslateDown(a, n) => SetExpr::TranslateDown(rs(a), *n),
        SetExpr::Comprehension { var, pred } => {
            SetExpr::Comprehension { var: var.clone(), pred: Box::new(reindex_pred(pred, names, map)) }
        }
        SetExpr::Term { name, arg, .. } => SetExpr::Term {
            name: name.clone(),
            index: map[names[name.as_str()]],
            arg: Box::new(reindex_num(arg, names, map)),
        },
    }
}

fn reindex_num(e: &NumExpr, names: &BTreeMap<&str, usize>, map: &[usize]) -> NumExpr {
    let rn = |e: &NumExpr| Box::new(reindex_num(e, names, map));
    match e {
        NumExpr::Const(_) | NumExpr::Var(_) | NumExpr::Param => e.clone(),
        NumExpr::Bin(op, a, b) => NumExpr::Bin(*op, rn(a), rn(b)),
        NumExpr::OracleU(s) => NumExpr::OracleU(Box::new(reindex_set(s, names, map))),
        NumExpr::OracleK(n, s) => NumExpr::OracleK(rn(n), Box::new(reindex_set(s, names, map))),
        NumExpr::BoundedMu { var, pred } => {
            NumExpr::BoundedMu { var: var.clone(), pred: Box::new(reindex_pred(pred, names, map)) }
        }
    }
}

fn reindex_pred(p: &crate::expr::Pred, names: &BTreeMap<&str, usize>, map: &[usize]) -> crate::expr::Pred {
    use crate::expr::Pred;
    let rp = |p: &Pred| Box::new(reindex_pred(p, names, map));
    match p {
        Pred::Bool(_) => p.clone(),
        Pred::Cmp(op, a, b) => Pred::Cmp(*op, reindex_num(a, names, map), reindex_num(b, names, map)),
        Pred::Member(n, s) => Pred::Member(reindex_num(n, names, map), reindex_set(s, names, map)),
        Pred::Not(a) => Pred::Not(rp(a)),
        Pred::And(a, b) => Pred::And(rp(a), rp(b)),
        Pred::Or(a, b) => Pred::Or(rp(a), rp(b)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryVerdict {
    pub entry: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleQuery {
    pub term: String,
    pub param: u64,
    pub verdict: Verdict,
}

/// Audit record of one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageTrace {
    pub stage: i64,
    pub term: String,
    pub catalog_before: usize,
    pub catalog_after: usize,
    pub generators_before: Vec<u64>,
    pub generators_after: Vec<u64>,
    /// Generator blocks (indices into the previous generators) of each new generator.
    pub blocks: Vec<Vec<usize>>,
    /// Oracle answers used while materializing this stage's entries.
    pub queries: Vec<OracleQuery>,
    /// Verdict of every catalog entry under the refined filter.
    pub verdicts: Vec<EntryVerdict>,
    pub colorings: usize,
    pub target_len: usize,
    pub nodes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum GoalValue {
    Verdict(Verdict),
    Number(u64),
    Bool(bool),
}

/// Everything an elimination run produces.
#[derive(Clone, Debug)]
pub struct ElimRun {
    pub terms: Vec<ProgramTerm>,
    pub config: ElimConfig,
    /// `filters[0]` is the Fréchet filter; `filters[i + 1]` is built at stage `i`.
    pub filters: Vec<FfsFilter>,
    pub catalog: AlgebraCatalog,
    pub traces: Vec<StageTrace>,
    /// `t_i(j)` as materialized at its own stage.
    pub materialized: BTreeMap<(usize, u64), BoundedSet>,
    pub goal: GoalValue,
}

impl ElimRun {
    pub fn final_filter(&self) -> &FfsFilter {
        self.filters.last().expect("the Fréchet filter is always present")
    }

    /// The filter in force at `stage` (−1 for Fréchet).
    pub fn filter_at(&self, stage: i64) -> &FfsFilter {
        &self.filters[(stage + 1) as usize]
    }
}

/// Hook run after each stage; `eliminate_ss` uses it to add entries.
pub(crate) type AfterStage<'h> =
    dyn FnMut(&FfsFilter, &mut AlgebraCatalog, &[(usize, u64)]) -> Result<(), Error> + 'h;

/// Runs the staged construction on `program` (terms validated and reordered
/// first) and evaluates its goal under the final filter.
pub fn eliminate(program: &Program, cfg: &ElimConfig) -> Result<ElimRun, Error> {
    eliminate_with(program, cfg, &mut |_, _, _| Ok(()))
}

pub(crate) fn eliminate_with(program: &Program, cfg: &ElimConfig, after: &mut AfterStage<'_>) -> Result<ElimRun, Error> {
    cfg.validate()?;
    let terms = validate_subterm_order(&program.terms)?;
    let goal = reindex_goal(&program.goal, &program.terms, &terms)?;
    let mut filters = vec![frechet(cfg.horizon)];
    let mut catalog = AlgebraCatalog::new(cfg.trans_bound);
    let mut traces = Vec::new();
    let mut materialized = BTreeMap::new();
    let mut staged: Vec<(usize, u64)> = Vec::new();

    for (i, t) in terms.iter().enumerate() {
        let f = filters.last().expect("nonempty").clone();
        let ctx = OracleContext::new(&terms, f.clone()).with_staged(staged.iter().copied());
        let mut new_entries: Vec<NewEntry> = Vec::new();
        let mut fresh = Vec::new();
        for j in 0..cfg.param_range {
            let e = SetExpr::term(&t.name, i, NumExpr::Const(j));
            materialized.insert((i, j), (*ctx.term_set(i, j)?).clone());
            new_entries.push((format!("{}({j})", t.name), e, None));
            fresh.push((i, j));
        }
        let before = catalog.len();
        let floor = cfg.horizon.min_tail + 1;
        let mut target = cfg.target_len(f.generators().len());
        // A tighter target leaves the solver more room; halve it on failure.
        let ext = loop {
            let mut trial = catalog.clone();
            match extend_filter(&f, &new_entries, &mut trial, &ctx, &cfg.extend_params(target)) {
                Ok(ext) => {
                    catalog = trial;
                    break ext;
                }
                Err(Error::RefinementFailed { .. }) if target > floor => target = (target / 2).max(floor),
                Err(e) => return Err(e),
            }
        };
        staged.extend(fresh.iter().copied());
        after(&ext.filter, &mut catalog, &fresh)?;
        let queries = ctx
            .decisions()
            .into_iter()
            .map(|((k, a), v)| OracleQuery { term: terms[k].name.clone(), param: a, verdict: v })
            .collect();
        let (blocks, nodes) = match &ext.solution {
            Some(s) => (s.ys.iter().map(|y| y.block.clone()).collect(), s.nodes),
            None => ((0..f.generators().len()).map(|k| vec![k]).collect(), 0),
        };
        traces.push(StageTrace {
            stage: i as i64,
            term: t.name.clone(),
            catalog_before: before,
            catalog_after: catalog.len(),
            generators_before: f.generators().as_slice().to_vec(),
            generators_after: ext.filter.generators().as_slice().to_vec(),
            blocks,
            queries,
            verdicts: catalog
                .verdicts(&ext.filter)
                .into_iter()
                .map(|(entry, verdict)| EntryVerdict { entry, verdict })
                .collect(),
            colorings: ext.colorings,
            target_len: target,
            nodes,
        });
        filters.push(ext.filter);
    }

    let last = filters.last().expect("nonempty").clone();
    let ctx = OracleContext::new(&terms, last).with_staged(staged.iter().copied());
    let goal = evaluate_goal(&goal, &ctx)?;
    Ok(ElimRun { terms, config: *cfg, filters, catalog, traces, materialized, goal })
}

fn reindex_goal(goal: &Goal, old: &[ProgramTerm], new: &[ProgramTerm]) -> Result<Goal, Error> {
    let names: BTreeMap<&str, usize> = old.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let mut map = vec![0; old.len()];
    for (pos, t) in new.iter().enumerate() {
        map[names[t.name.as_str()]] = pos;
    }
    for r in goal.term_refs() {
        if !names.contains_key(r.name) {
            return Err(Error::UnknownTerm(r.name.to_string()));
        }
    }
    Ok(match goal {
        Goal::Verdict(e) => Goal::Verdict(reindex_set(e, &names, &map)),
        Goal::Number(n) => Goal::Number(reindex_num(n, &names, &map)),
        Goal::Predicate(p) => Goal::Predicate(reindex_pred(p, &names, &map)),
    })
}

fn evaluate_goal(goal: &Goal, ctx: &OracleContext<'_>) -> Result<GoalValue, Error> {
    let undecided = |e: Error| match e {
        Error::UnresolvedOracle { .. } | Error::UndecidedOracle { .. } => Error::UndecidedGoal,
        other => other,
    };
    match goal {
        Goal::Verdict(SetExpr::Term { index, arg, .. }) => {
            let j = ctx.eval_num(arg, None).map_err(undecided)?;
            ctx.decide(*index, j).map(GoalValue::Verdict).map_err(undecided)
        }
        Goal::Verdict(e) => {
            let set = ctx.materialize(e, None).map_err(undecided)?;
            match ctx.filter().member(&set) {
                Verdict::Undecided => Err(Error::UndecidedGoal),
                v => Ok(GoalValue::Verdict(v)),
            }
        }
        Goal::Number(n) => ctx.eval_num(n, None).map(GoalValue::Number).map_err(undecided),
        Goal::Predicate(p) => ctx.eval_pred(p, None).map(GoalValue::Bool).map_err(undecided),
    }
}

/// Re-materializes every staged `t_i(j)` under each later stage's filter and
/// compares with the set recorded at stage `i`; also checks that every
/// catalog entry keeps its polarity from the stage that first decided it.
pub fn check_stability(run: &ElimRun) -> Report {
    let mut r = Report::default();
    let staged_below = |i: usize| -> Vec<(usize, u64)> {
        run.materialized.keys().copied().filter(|&(k, _)| k < i).collect()
    };
    for (&(i, j), reference) in &run.materialized {
        let name = format!("{}({j})", run.terms[i].name);
        for s in i..run.traces.len() {
            let f = run.filter_at(s as i64).clone();
            let ctx = OracleContext::new(&run.terms, f).with_staged(staged_below(i));
            r.checked += 1;
            match ctx.term_set(i, j) {
                Ok(set) => {
                    if let Some(p) = (0..reference.bound()).find(|&p| set.contains(p) != reference.contains(p)) {
                        r.fail(&name, Axiom::Stability, Some(p), format!("differs under the stage {s} filter"));
                        break;
                    }
                }
                Err(e) => {
                    r.fail(&name, Axiom::Stability, None, format!("stage {s}: {e}"));
                    break;
                }
            }
        }
    }
    for e in run.catalog.entries() {
        let first = (e.stage.max(-1)..run.traces.len() as i64)
            .map(|s| (s, run.filter_at(s).member(&e.set)))
            .find(|(_, v)| v.is_decided());
        let Some((s0, v0)) = first else { continue };
        for s in s0 + 1..run.traces.len() as i64 {
            r.checked += 1;
            let v = run.filter_at(s).member(&e.set);
            if v.polarity() != v0.polarity() {
                r.fail(&e.name, Axiom::Stability, None, format!("{v0:?} at stage {s0}, {v:?} at stage {s}"));
                break;
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_program, parse_program_with, ParseOptions};

    fn cfg(bound: u64) -> ElimConfig {
        ElimConfig { trans_bound: 0, param_range: 1, ..ElimConfig::new(Horizon::with_bound(bound).unwrap()) }
    }

    #[test]
    fn parity_goal() {
        let p = parse_program("t0(j) = { n : n % 2 == j }\ngoal = U(t0(0))").unwrap();
        let run = eliminate(&p, &cfg(4096)).unwrap();
        let evens = BoundedSet::from_fn(4096, |n| n % 2 == 0);
        assert_eq!(run.goal, GoalValue::Verdict(run.final_filter().member(&evens)));
        assert!(matches!(run.goal, GoalValue::Verdict(Verdict::In(_))));
        assert!(run.final_filter().generators().as_slice().iter().all(|g| g % 2 == 0));
        assert!(check_stability(&run).passed());
    }

    #[test]
    fn closed_goal_keeps_frechet() {
        let p = parse_program("goal = 2 + 3 == 5").unwrap();
        let run = eliminate(&p, &cfg(100)).unwrap();
        assert_eq!(run.goal, GoalValue::Bool(true));
        assert_eq!(run.final_filter(), &frechet(Horizon::with_bound(100).unwrap()));
        assert!(run.traces.is_empty());
    }

    #[test]
    fn k_of_threshold() {
        let p = parse_program("t0(j) = ge(5)\ngoal = K(3, t0(0))").unwrap();
        assert_eq!(eliminate(&p, &cfg(1024)).unwrap().goal, GoalValue::Number(5));
    }

    #[test]
    fn unstaged_goal_is_undecided() {
        let p = parse_program("t0(j) = { n : n % 2 == j }\ngoal = U(t0(3))").unwrap();
        assert_eq!(eliminate(&p, &cfg(1024)).unwrap_err(), Error::UndecidedGoal);
    }

    #[test]
    fn subterm_order() {
        let opts = ParseOptions { allow_forward: true };
        let p = parse_program_with("a(j) = { n : U(b(j)) == 0 }\nb(j) = res(0, 2)\ngoal = U(a(0))", opts).unwrap();
        let sorted = validate_subterm_order(&p.terms).unwrap();
        assert_eq!(sorted.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(sorted[1].family.term_refs()[0].index, 0);
        let p = parse_program("x(j) = res(0, 2)\ny(j) = res(1, 2)\ngoal = U(y(0))").unwrap();
        assert_eq!(validate_subterm_order(&p.terms).unwrap(), p.terms);
        let p = parse_program("y(j) = res(1, 2)\nx(j) = res(0, 2)\ngoal = U(y(0))").unwrap();
        assert_eq!(validate_subterm_order(&p.terms).unwrap(), p.terms);
        let run = eliminate(
            &parse_program_with("a(j) = { n : U(b(j)) == 0 }\nb(j) = res(0, 2)\ngoal = U(a(0))", opts).unwrap(),
            &cfg(4096),
        )
        .unwrap();
        assert_eq!(run.traces[0].term, "b");
    }

    #[test]
    fn cycle_is_rejected() {
        let opts = ParseOptions { allow_forward: true };
        let p = parse_program_with("a(j) = { n : U(b(j)) == 0 }\nb(j) = { n : U(a(j)) == 1 }\ngoal = 1", opts).unwrap();
        assert!(matches!(validate_subterm_order(&p.terms), Err(Error::CyclicReference(_))));
    }

    #[test]
    fn stability_negative_control() {
        let src = "t0(j) = res(0, 3)\nt1(j) = { n : U(t0(0)) == 0 && n >= j }\ngoal = U(t1(0))";
        let p = parse_program(src).unwrap();
        let mut run = eliminate(&p, &cfg(4096)).unwrap();
        assert!(check_stability(&run).passed());
        // Fréchet on (1..64) puts the multiples of 3 Out, unlike the refined filters.
        let fr = run.filters[0].clone();
        let last = run.filters.len() - 1;
        run.filters[last] = fr;
        let report = check_stability(&run);
        assert!(!report.passed());
        assert!(report.violations.iter().any(|v| v.entry == "t1(0)"));
    }

    #[test]
    fn replay_is_identical() {
        let src = "t0(j) = { n : n % 3 == j }\nt1(j) = { n : U(t0(j)) == 1 || n % 2 == 0 }\ngoal = U(t1(1))";
        let p = parse_program(src).unwrap();
        let c = ElimConfig { param_range: 2, trans_bound: 1, ..cfg(4096) };
        let a = eliminate(&p, &c).unwrap();
        let b = eliminate(&p, &c).unwrap();
        assert_eq!(serde_json::to_string(&a.traces).unwrap(), serde_json::to_string(&b.traces).unwrap());
        for t in &a.traces {
            let outer = crate::sets::fs_values(
                &crate::sets::AscendingSeq::new(t.generators_before.clone()).unwrap(),
                0,
                4096,
            );
            assert!(t.generators_after.iter().all(|v| outer.binary_search(v).is_ok()));
        }
    }

    #[test]
    fn min_tail_two_run() {
        let p = parse_program("t0(j) = { n : n % 2 == j }\ngoal = U(t0(0))").unwrap();
        let c = ElimConfig { horizon: Horizon::new(4096, 2).unwrap(), ..cfg(4096) };
        let run = eliminate(&p, &c).unwrap();
        assert!(check_stability(&run).passed());
        assert!(matches!(run.goal, GoalValue::Verdict(Verdict::In(_))));
    }
}
