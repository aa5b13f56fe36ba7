//! Exact finite solvers for Hindman's theorem and the iterated version,
//! relativized to the finite sums of a ground sequence.
//!
//! A solution is a sequence `y_0 < y_1 < ...` of block sums over pairwise
//! disjoint blocks of the ground sequence, so `FS(y) ⊆ FS(ground)`. Coloring
//! `k` constrains the tail `(y_i)_{i≥k}`: all of its finite sums below the
//! horizon share one color. Sums at or above the horizon are not inspected.
//!
//! Search is depth-first over candidate blocks in ascending `(value, block)`
//! order, so the first solution found is the least one in that order.
//! [`brute_force_iht`] enumerates every solution in the same order with an
//! independent checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sets::{fs_bounded, fs_values, AscendingSeq, BlockSum, Horizon};

/// A 2-coloring, total on `[0, domain_bound)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coloring {
    table: Vec<u8>,
}

impl Coloring {
    pub fn from_table(table: Vec<u8>) -> Result<Self, Error> {
        if let Some(c) = table.iter().find(|&&c| c > 1) {
            return Err(Error::Config(format!("color {c} is not 0 or 1")));
        }
        Ok(Coloring { table })
    }

    pub fn from_fn(bound: u64, f: impl Fn(u64) -> u8) -> Self {
        Coloring { table: (0..bound).map(|n| f(n) & 1).collect() }
    }

    pub fn constant(color: u8, bound: u64) -> Self {
        Self::from_fn(bound, |_| color)
    }

    /// Color 0 on `{n | n ≡ r mod q}`, 1 elsewhere. For `q = 2, r = 0`
    /// this is `n mod 2`.
    pub fn residue(q: u64, r: u64, bound: u64) -> Self {
        let q = q.max(1);
        Self::from_fn(bound, |n| u8::from(n % q != r % q))
    }

    /// Independent fair coin flips from a seeded stream.
    pub fn random(seed: u64, bound: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Coloring { table: (0..bound).map(|_| rng.gen_range(0..2u8)).collect() }
    }

    pub fn domain_bound(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn color(&self, n: u64) -> Option<u8> {
        self.table.get(usize::try_from(n).ok()?).copied()
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    /// `c^{-1}(color)` restricted to `[0, bound)`.
    pub fn class(&self, color: u8, bound: u64) -> crate::sets::BoundedSet {
        crate::sets::BoundedSet::from_fn(bound, |n| self.color(n) == Some(color))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExhaustionPolicy {
    #[default]
    Fail,
    /// Return the longest valid prefix seen before the budget ran out.
    BestEffort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_nodes: u64,
    pub policy: ExhaustionPolicy,
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SearchBudget { max_nodes: max_nodes.max(1), policy: ExhaustionPolicy::Fail }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget::nodes(2_000_000)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IhtSolution {
    pub ys: Vec<BlockSum>,
    /// Committed color per coloring; `None` when its tail has no sum below
    /// the horizon.
    pub colors: Vec<Option<u8>>,
    /// False only for a best-effort partial answer.
    pub complete: bool,
    pub nodes: u64,
}

impl IhtSolution {
    pub fn values(&self) -> AscendingSeq {
        AscendingSeq::new(self.ys.iter().map(|y| y.value).collect()).expect("solution values ascend")
    }
}

/// Exhaustive enumeration refuses spaces with more candidate blocks.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;
const CANDIDATE_LIMIT: u64 = 1 << 22;

/// A fully specified iterated Hindman instance.
#[derive(Clone, Debug)]
pub struct IhtProblem<'a> {
    pub colorings: &'a [Coloring],
    /// Tail index constrained by each coloring; defaults to `k` for coloring `k`.
    pub tails: Vec<usize>,
    /// Colors that must be taken, if any.
    pub pinned: Vec<Option<u8>>,
    pub ground: &'a AscendingSeq,
    pub target_len: usize,
    pub bound: u64,
    /// Largest block size considered; `None` for unlimited.
    pub max_block: Option<usize>,
}

impl<'a> IhtProblem<'a> {
    pub fn new(colorings: &'a [Coloring], ground: &'a AscendingSeq, target_len: usize, h: Horizon) -> Self {
        IhtProblem {
            colorings,
            tails: (0..colorings.len()).collect(),
            pinned: vec![None; colorings.len()],
            ground,
            target_len,
            bound: h.bound,
            max_block: None,
        }
    }

    fn check_colorings_total(&self) -> Result<(), Error> {
        // Every sum a solution can produce is a finite sum of the ground.
        let reach = fs_values(self.ground, 0, self.bound);
        for c in self.colorings {
            if let Some(&v) = reach.iter().find(|&&v| v >= c.domain_bound()) {
                return Err(Error::ColoringPartial(v));
            }
        }
        Ok(())
    }

    /// Candidate blocks in ascending `(value, block)` order.
    pub fn candidates(&self) -> Result<Vec<BlockSum>, Error> {
        let g = self.ground.as_slice();
        let limit = self.max_block.unwrap_or(usize::MAX);
        let mut out = Vec::new();
        let mut block = Vec::new();
        #[allow(clippy::too_many_arguments)]
        fn walk(
            g: &[u64],
            from: usize,
            sum: u64,
            bound: u64,
            limit: usize,
            block: &mut Vec<usize>,
            out: &mut Vec<BlockSum>,
        ) -> Result<(), Error> {
            if block.len() == limit {
                return Ok(());
            }
            for i in from..g.len() {
                let s = sum + g[i];
                if s >= bound {
                    break;
                }
                block.push(i);
                out.push(BlockSum { value: s, block: block.clone() });
                if out.len() as u64 > CANDIDATE_LIMIT {
                    return Err(Error::SpaceTooLarge(out.len() as u64));
                }
                walk(g, i + 1, s, bound, limit, block, out)?;
                block.pop();
            }
            Ok(())
        }
        walk(g, 0, 0, self.bound, limit, &mut block, &mut out)?;
        out.sort_unstable();
        Ok(out)
    }

    /// Depth-first search for the least solution.
    pub fn solve(&self, budget: SearchBudget) -> Result<IhtSolution, Error> {
        self.check_colorings_total()?;
        let cands = self.candidates()?;
        let mut s = Search::new(self, &cands, budget);
        match s.dfs(0) {
            Step::Found => Ok(s.solution(true)),
            Step::NotFound => Err(Error::NotFound),
            Step::Exhausted => match budget.policy {
                ExhaustionPolicy::Fail => Err(Error::BudgetExhausted { nodes: s.nodes }),
                ExhaustionPolicy::BestEffort => {
                    let mut sol = s.best_partial.take().unwrap_or_else(|| s.solution(false));
                    sol.complete = false;
                    sol.nodes = s.nodes;
                    Ok(sol)
                }
            },
        }
    }
}

enum Step {
    Found,
    NotFound,
    Exhausted,
}

struct Search<'p, 'a> {
    p: &'p IhtProblem<'a>,
    cands: &'p [BlockSum],
    budget: SearchBudget,
    nodes: u64,
    chosen: Vec<usize>,
    used: Vec<bool>,
    /// Per value below the bound: deepest tail start whose FS contains it, or -1.
    best: Vec<i32>,
    present: Vec<u64>,
    committed: Vec<Option<u8>>,
    best_partial: Option<IhtSolution>,
}

struct Undo {
    best: Vec<(usize, i32)>,
    present_len: usize,
    commits: Vec<usize>,
}

impl<'p, 'a> Search<'p, 'a> {
    fn new(p: &'p IhtProblem<'a>, cands: &'p [BlockSum], budget: SearchBudget) -> Self {
        Search {
            p,
            cands,
            budget,
            nodes: 0,
            chosen: Vec::new(),
            used: vec![false; p.ground.len()],
            best: vec![-1; p.bound as usize],
            present: Vec::new(),
            committed: p.pinned.clone(),
            best_partial: None,
        }
    }

    fn solution(&self, complete: bool) -> IhtSolution {
        IhtSolution {
            ys: self.chosen.iter().map(|&c| self.cands[c].clone()).collect(),
            colors: self.committed.clone(),
            complete,
            nodes: self.nodes,
        }
    }

    /// Records the sums created by appending candidate `c` at position `t`
    /// and checks them against the colorings.
    fn push(&mut self, c: usize, t: usize) -> Result<Undo, Undo> {
        let y = self.cands[c].value;
        let mut undo = Undo { best: Vec::new(), present_len: self.present.len(), commits: Vec::new() };
        let mut updates: Vec<(u64, i32)> = vec![(y, t as i32)];
        for &v in &self.present {
            let s = v + y;
            if s < self.p.bound {
                updates.push((s, self.best[v as usize]));
            }
        }
        for (s, depth) in updates {
            let old = self.best[s as usize];
            if depth <= old {
                continue;
            }
            if old < 0 {
                self.present.push(s);
            }
            self.best[s as usize] = depth;
            undo.best.push((s as usize, old));
            for k in 0..self.p.colorings.len() {
                let tail = self.p.tails[k] as i32;
                if tail <= old || tail > depth {
                    continue;
                }
                let col = self.p.colorings[k].color(s).expect("coloring totality checked up front");
                match self.committed[k] {
                    Some(have) if have != col => return Err(undo),
                    Some(_) => {}
                    None => {
                        self.committed[k] = Some(col);
                        undo.commits.push(k);
                    }
                }
            }
        }
        Ok(undo)
    }

    fn pop(&mut self, undo: Undo) {
        for (s, old) in undo.best.into_iter().rev() {
            self.best[s] = old;
        }
        self.present.truncate(undo.present_len);
        for k in undo.commits {
            self.committed[k] = None;
        }
    }

    fn dfs(&mut self, t: usize) -> Step {
        if t == self.p.target_len {
            return Step::Found;
        }
        let free = self.used.iter().filter(|u| !**u).count();
        if free < self.p.target_len - t {
            return Step::NotFound;
        }
        let start = match self.chosen.last() {
            Some(&c) => {
                let last = self.cands[c].value;
                self.cands.partition_point(|b| b.value <= last)
            }
            None => 0,
        };
        for c in start..self.cands.len() {
            if self.cands[c].block.iter().any(|&i| self.used[i]) {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget.max_nodes {
                return Step::Exhausted;
            }
            match self.push(c, t) {
                Err(undo) => self.pop(undo),
                Ok(undo) => {
                    for &i in &self.cands[c].block {
                        self.used[i] = true;
                    }
                    self.chosen.push(c);
                    if self.best_partial.as_ref().map_or(true, |b| b.ys.len() < self.chosen.len()) {
                        self.best_partial = Some(self.solution(false));
                    }
                    let r = self.dfs(t + 1);
                    if matches!(r, Step::Found | Step::Exhausted) {
                        return r;
                    }
                    self.chosen.pop();
                    for &i in &self.cands[c].block {
                        self.used[i] = false;
                    }
                    self.pop(undo);
                }
            }
        }
        Step::NotFound
    }
}

/// `FS(X)` homogeneous for `c`: `ys` of length `target_len`.
pub fn solve_ht(
    c: &Coloring,
    ground: &AscendingSeq,
    target_len: usize,
    h: Horizon,
    budget: SearchBudget,
) -> Result<IhtSolution, Error> {
    solve_iht(std::slice::from_ref(c), ground, target_len, h, budget)
}

/// For each `k`, the finite sums of `(y_i)_{i≥k}` below the horizon are
/// monochromatic under `cs[k]`.
pub fn solve_iht(
    cs: &[Coloring],
    ground: &AscendingSeq,
    target_len: usize,
    h: Horizon,
    budget: SearchBudget,
) -> Result<IhtSolution, Error> {
    IhtProblem::new(cs, ground, target_len, h).solve(budget)
}

/// Independent solution check by walking `fs_bounded` of every tail.
/// Returns the color of each tail, or `None` if some tail is not
/// monochromatic (or contradicts a pinned color).
pub fn check_solution(p: &IhtProblem<'_>, ys: &[BlockSum]) -> Option<Vec<Option<u8>>> {
    for (a, y) in ys.iter().enumerate() {
        if BlockSum::over(p.ground, y.block.clone()).map(|b| b.value) != Some(y.value) {
            return None;
        }
        if ys[..a].iter().any(|x| x.value >= y.value || !x.is_disjoint(y)) {
            return None;
        }
    }
    let seq = AscendingSeq::new(ys.iter().map(|y| y.value).collect()).ok()?;
    let mut colors = Vec::with_capacity(p.colorings.len());
    for (k, c) in p.colorings.iter().enumerate() {
        let mut color = p.pinned[k];
        for s in fs_bounded(&seq, p.tails[k], p.bound) {
            let col = c.color(s.value)?;
            match color {
                Some(have) if have != col => return None,
                _ => color = Some(col),
            }
        }
        colors.push(color);
    }
    Some(colors)
}

/// Every solution, in canonical order.
pub fn brute_force_iht(
    cs: &[Coloring],
    ground: &AscendingSeq,
    target_len: usize,
    h: Horizon,
) -> Result<Vec<IhtSolution>, Error> {
    brute_force(&IhtProblem::new(cs, ground, target_len, h))
}

pub fn brute_force(p: &IhtProblem<'_>) -> Result<Vec<IhtSolution>, Error> {
    p.check_colorings_total()?;
    let cands = p.candidates()?;
    if cands.len() as u64 > BRUTE_FORCE_LIMIT {
        return Err(Error::SpaceTooLarge(cands.len() as u64));
    }
    let masks: Vec<u128> = cands
        .iter()
        .map(|b| b.block.iter().fold(0u128, |m, &i| m | 1u128 << (i % 128)))
        .collect();
    if p.ground.len() > 128 {
        return Err(Error::SpaceTooLarge(cands.len() as u64));
    }
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(
        p: &IhtProblem<'_>,
        cands: &[BlockSum],
        masks: &[u128],
        used: u128,
        stack: &mut Vec<usize>,
        out: &mut Vec<IhtSolution>,
    ) {
        if stack.len() == p.target_len {
            let ys: Vec<BlockSum> = stack.iter().map(|&c| cands[c].clone()).collect();
            if let Some(colors) = check_solution(p, &ys) {
                out.push(IhtSolution { ys, colors, complete: true, nodes: 0 });
            }
            return;
        }
        let start = match stack.last() {
            Some(&c) => cands.partition_point(|b| b.value <= cands[c].value),
            None => 0,
        };
        for c in start..cands.len() {
            if masks[c] & used != 0 {
                continue;
            }
            stack.push(c);
            rec(p, cands, masks, used | masks[c], stack, out);
            stack.pop();
        }
    }
    rec(p, &cands, &masks, 0, &mut stack, &mut out);
    Ok(out)
}
