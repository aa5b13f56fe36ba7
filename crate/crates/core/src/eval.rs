//! Evaluation of set expressions with the ultrafilter oracle `U` answered by
//! a fixed [`FfsFilter`] and `K` answered by [`k_prime`].

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::error::Error;
use crate::expr::{NumExpr, Pred, ProgramTerm, SetExpr};
use crate::filter::{k_prime, FfsFilter, Verdict};
use crate::sets::{BoundedSet, Horizon};

/// Everything needed to evaluate terms of one program under one filter.
///
/// Term sets and oracle verdicts are memoized; the context is cheap to
/// rebuild for another filter.
pub struct OracleContext<'a> {
    terms: &'a [ProgramTerm],
    filter: FfsFilter,
    /// `(term, j)` pairs whose sets have been staged into the algebra.
    staged: BTreeSet<(usize, u64)>,
    sets: RefCell<HashMap<(usize, u64), Rc<BoundedSet>>>,
    decisions: RefCell<BTreeMap<(usize, u64), Verdict>>,
    /// Verdicts on variable-free non-term oracle arguments, by parameter.
    closed_verdicts: RefCell<HashMap<(String, Option<u64>), Verdict>>,
}

#[derive(Clone, Debug, Default)]
struct Env {
    param: Option<u64>,
    vars: Vec<(String, u64)>,
}

impl Env {
    fn with_param(j: u64) -> Self {
        Env { param: Some(j), vars: Vec::new() }
    }

    fn bind(&self, var: &str, v: u64) -> Env {
        let mut e = self.clone();
        e.vars.push((var.to_string(), v));
        e
    }

    fn lookup(&self, var: &str) -> Result<u64, Error> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == var)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Config(format!("unbound variable `{var}`")))
    }
}

impl<'a> OracleContext<'a> {
    pub fn new(terms: &'a [ProgramTerm], filter: FfsFilter) -> Self {
        OracleContext {
            terms,
            filter,
            staged: BTreeSet::new(),
            sets: RefCell::new(HashMap::new()),
            decisions: RefCell::new(BTreeMap::new()),
            closed_verdicts: RefCell::new(HashMap::new()),
        }
    }

    /// A context with no program terms, for closed expressions.
    pub fn closed(filter: FfsFilter) -> OracleContext<'static> {
        OracleContext::new(&[], filter)
    }

    pub fn with_staged(mut self, staged: impl IntoIterator<Item = (usize, u64)>) -> Self {
        self.staged.extend(staged);
        self
    }

    pub fn stage(&mut self, term: usize, j: u64) {
        self.staged.insert((term, j));
    }

    pub fn staged(&self) -> &BTreeSet<(usize, u64)> {
        &self.staged
    }

    pub fn filter(&self) -> &FfsFilter {
        &self.filter
    }

    pub fn horizon(&self) -> Horizon {
        self.filter.horizon()
    }

    fn bound(&self) -> u64 {
        self.filter.bound()
    }

    /// Oracle decisions made so far, keyed by `(term, j)`.
    pub fn decisions(&self) -> BTreeMap<(usize, u64), Verdict> {
        self.decisions.borrow().clone()
    }

    /// The set `t_term(j)` on `[0, H)`.
    pub fn term_set(&self, term: usize, j: u64) -> Result<Rc<BoundedSet>, Error> {
        if let Some(s) = self.sets.borrow().get(&(term, j)) {
            return Ok(s.clone());
        }
        let t = self.terms.get(term).ok_or_else(|| Error::UnknownTerm(format!("#{term}")))?;
        let env = Env::with_param(j);
        let set = Rc::new(BoundedSet::try_from_fn(self.bound(), |p| self.contains(&t.family, &env, p))?);
        self.sets.borrow_mut().insert((term, j), set.clone());
        Ok(set)
    }

    /// Filter verdict on a staged `t_term(j)`.
    pub fn decide(&self, term: usize, j: u64) -> Result<Verdict, Error> {
        if let Some(v) = self.decisions.borrow().get(&(term, j)) {
            return Ok(*v);
        }
        let name = || self.terms.get(term).map_or_else(|| format!("#{term}"), |t| t.name.clone());
        if !self.staged.contains(&(term, j)) {
            return Err(Error::UnresolvedOracle { term: name(), param: j });
        }
        let v = self.filter.member(&*self.term_set(term, j)?);
        if v == Verdict::Undecided {
            return Err(Error::UndecidedOracle { term: name(), param: j });
        }
        self.decisions.borrow_mut().insert((term, j), v);
        Ok(v)
    }

    /// Membership of `point` in `e` with the family parameter set to `j`.
    pub fn eval_set(&self, e: &SetExpr, j: u64, point: u64) -> Result<bool, Error> {
        self.contains(e, &Env::with_param(j), point)
    }

    pub fn eval_num(&self, e: &NumExpr, j: Option<u64>) -> Result<u64, Error> {
        self.num(e, &Env { param: j, vars: Vec::new() })
    }

    pub fn eval_pred(&self, p: &Pred, j: Option<u64>) -> Result<bool, Error> {
        self.pred(p, &Env { param: j, vars: Vec::new() })
    }

    /// `e` on `[0, H)` with parameter `j`.
    pub fn materialize(&self, e: &SetExpr, j: Option<u64>) -> Result<BoundedSet, Error> {
        let env = Env { param: j, vars: Vec::new() };
        self.materialize_in(e, &env)
    }

    fn materialize_in(&self, e: &SetExpr, env: &Env) -> Result<BoundedSet, Error> {
        if let SetExpr::Term { index, arg, .. } = e {
            let a = self.num(arg, env)?;
            return Ok((*self.term_set(*index, a)?).clone());
        }
        BoundedSet::try_from_fn(self.bound(), |p| self.contains(e, env, p))
    }

    fn contains(&self, e: &SetExpr, env: &Env, p: u64) -> Result<bool, Error> {
        Ok(match e {
            SetExpr::Literal(s) => s.contains(&p),
            SetExpr::Residue { r, q } => p % q == r % q,
            SetExpr::Threshold(c) => p >= *c,
            SetExpr::Complement(e) => !self.contains(e, env, p)?,
            SetExpr::Union(a, b) => self.contains(a, env, p)? || self.contains(b, env, p)?,
            SetExpr::Intersection(a, b) => self.contains(a, env, p)? && self.contains(b, env, p)?,
            SetExpr::TranslateDown(e, n) => self.contains(e, env, p.saturating_add(*n))?,
            SetExpr::Comprehension { var, pred } => self.pred(pred, &env.bind(var, p))?,
            SetExpr::Term { index, arg, .. } => {
                let a = self.num(arg, env)?;
                if p < self.bound() {
                    self.term_set(*index, a)?.contains(p)
                } else {
                    let t = self.terms.get(*index).ok_or_else(|| Error::UnknownTerm(format!("#{index}")))?;
                    self.contains(&t.family, &Env::with_param(a), p)?
                }
            }
        })
    }

    fn oracle_u(&self, e: &SetExpr, env: &Env) -> Result<u64, Error> {
        let v = match e {
            SetExpr::Term { index, arg, .. } => {
                let a = self.num(arg, env)?;
                self.decide(*index, a)?
            }
            other => {
                let key = (!other.has_free_vars()).then(|| (other.to_string(), env.param));
                if let Some(v) = key.as_ref().and_then(|k| self.closed_verdicts.borrow().get(k).copied()) {
                    return Ok(u64::from(!v.is_in()));
                }
                let v = self.filter.member(&self.materialize_in(other, env)?);
                if v == Verdict::Undecided {
                    return Err(Error::UndecidedOracle { term: other.to_string(), param: env.param.unwrap_or(0) });
                }
                if let Some(k) = key {
                    self.closed_verdicts.borrow_mut().insert(k, v);
                }
                v
            }
        };
        // n ∈ F is encoded as F(X) = 0
        Ok(u64::from(!v.is_in()))
    }

    fn num(&self, e: &NumExpr, env: &Env) -> Result<u64, Error> {
        Ok(match e {
            NumExpr::Const(c) => *c,
            NumExpr::Var(v) => env.lookup(v)?,
            NumExpr::Param => env.param.ok_or_else(|| Error::Config("`j` used outside a term family".into()))?,
            NumExpr::Bin(op, a, b) => op.apply(self.num(a, env)?, self.num(b, env)?),
            NumExpr::OracleU(e) => self.oracle_u(e, env)?,
            NumExpr::OracleK(n, e) => {
                let n = self.num(n, env)?;
                match &**e {
                    SetExpr::Term { index, arg, .. } => {
                        let a = self.num(arg, env)?;
                        k_prime(n, &*self.term_set(*index, a)?)
                    }
                    other => k_prime(n, &self.materialize_in(other, env)?),
                }
            }
            NumExpr::BoundedMu { var, pred } => {
                for x in 0..self.bound() {
                    if self.pred(pred, &env.bind(var, x))? {
                        return Ok(x);
                    }
                }
                0
            }
        })
    }

    fn pred(&self, p: &Pred, env: &Env) -> Result<bool, Error> {
        Ok(match p {
            Pred::Bool(b) => *b,
            Pred::Cmp(op, a, b) => op.apply(self.num(a, env)?, self.num(b, env)?),
            Pred::Member(n, e) => {
                let n = self.num(n, env)?;
                self.contains(e, env, n)?
            }
            Pred::Not(p) => !self.pred(p, env)?,
            Pred::And(a, b) => self.pred(a, env)? && self.pred(b, env)?,
            Pred::Or(a, b) => self.pred(a, env)? || self.pred(b, env)?,
        })
    }

    /// Substitutes the oracles: every `U(t(a))` becomes its 0/1 answer and
    /// every term application with a constant argument is inlined, so the
    /// result mentions neither terms nor `j`. Term applications whose
    /// argument depends on a bound variable are replaced by the literal
    /// set they denote on `[0, H)`.
    pub fn close_set(&self, e: &SetExpr, j: Option<u64>) -> Result<SetExpr, Error> {
        self.close_s(e, j)
    }

    fn const_arg(&self, arg: &NumExpr, j: Option<u64>) -> Option<u64> {
        // Only arguments free of bound variables fold to a constant.
        if arg.has_free_vars() {
            return None;
        }
        self.num(arg, &Env { param: j, vars: Vec::new() }).ok()
    }

    fn close_s(&self, e: &SetExpr, j: Option<u64>) -> Result<SetExpr, Error> {
        Ok(match e {
            SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => e.clone(),
            SetExpr::Complement(a) => self.close_s(a, j)?.complement(),
            SetExpr::Union(a, b) => self.close_s(a, j)?.or(self.close_s(b, j)?),
            SetExpr::Intersection(a, b) => self.close_s(a, j)?.and(self.close_s(b, j)?),
            SetExpr::TranslateDown(a, n) => self.close_s(a, j)?.translate(*n),
            SetExpr::Comprehension { var, pred } => {
                SetExpr::Comprehension { var: var.clone(), pred: Box::new(self.close_p(pred, j)?) }
            }
            SetExpr::Term { index, arg, .. } => match self.const_arg(arg, j) {
                Some(a) => {
                    let t = self.terms.get(*index).ok_or_else(|| Error::UnknownTerm(format!("#{index}")))?;
                    self.close_s(&t.family, Some(a))?
                }
                None => {
                    let t = self.terms.get(*index).ok_or_else(|| Error::UnknownTerm(format!("#{index}")))?;
                    let mut fresh = 0;
                    let inlined = subst_param_set(&t.family, arg, &mut Vec::new(), &mut fresh);
                    self.close_s(&inlined, j)?
                }
            },
        })
    }

    fn close_n(&self, e: &NumExpr, j: Option<u64>) -> Result<NumExpr, Error> {
        Ok(match e {
            NumExpr::Const(_) | NumExpr::Var(_) => e.clone(),
            NumExpr::Param => match j {
                Some(v) => NumExpr::Const(v),
                None => e.clone(),
            },
            NumExpr::Bin(op, a, b) => NumExpr::bin(*op, self.close_n(a, j)?, self.close_n(b, j)?),
            NumExpr::OracleU(s) => match &**s {
                SetExpr::Term { arg, .. } if self.const_arg(arg, j).is_some() => {
                    NumExpr::Const(self.oracle_u(s, &Env { param: j, vars: Vec::new() })?)
                }
                _ => NumExpr::OracleU(Box::new(self.close_s(s, j)?)),
            },
            NumExpr::OracleK(n, s) => NumExpr::OracleK(Box::new(self.close_n(n, j)?), Box::new(self.close_s(s, j)?)),
            NumExpr::BoundedMu { var, pred } => {
                NumExpr::BoundedMu { var: var.clone(), pred: Box::new(self.close_p(pred, j)?) }
            }
        })
    }

    fn close_p(&self, p: &Pred, j: Option<u64>) -> Result<Pred, Error> {
        Ok(match p {
            Pred::Bool(_) => p.clone(),
            Pred::Cmp(op, a, b) => Pred::Cmp(*op, self.close_n(a, j)?, self.close_n(b, j)?),
            Pred::Member(n, e) => Pred::Member(self.close_n(n, j)?, self.close_s(e, j)?),
            Pred::Not(a) => Pred::Not(Box::new(self.close_p(a, j)?)),
            Pred::And(a, b) => Pred::And(Box::new(self.close_p(a, j)?), Box::new(self.close_p(b, j)?)),
            Pred::Or(a, b) => Pred::Or(Box::new(self.close_p(a, j)?), Box::new(self.close_p(b, j)?)),
        })
    }
}

type Renames = Vec<(String, String)>;

fn rename(var: &str, renames: &mut Renames, fresh: &mut usize) -> String {
    *fresh += 1;
    let new = format!("_{var}{fresh}");
    renames.push((var.to_string(), new.clone()));
    new
}

fn subst_param_set(e: &SetExpr, arg: &NumExpr, renames: &mut Renames, fresh: &mut usize) -> SetExpr {
    match e {
        SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => e.clone(),
        SetExpr::Complement(a) => subst_param_set(a, arg, renames, fresh).complement(),
        SetExpr::Union(a, b) => {
            subst_param_set(a, arg, renames, fresh).or(subst_param_set(b, arg, renames, fresh))
        }
        SetExpr::Intersection(a, b) => {
            subst_param_set(a, arg, renames, fresh).and(subst_param_set(b, arg, renames, fresh))
        }
        SetExpr::TranslateDown(a, n) => subst_param_set(a, arg, renames, fresh).translate(*n),
        SetExpr::Comprehension { var, pred } => {
            let new = rename(var, renames, fresh);
            let pred = subst_param_pred(pred, arg, renames, fresh);
            renames.pop();
            SetExpr::Comprehension { var: new, pred: Box::new(pred) }
        }
        SetExpr::Term { name, index, arg: a } => {
            SetExpr::term(name, *index, subst_param_num(a, arg, renames, fresh))
        }
    }
}

fn subst_param_num(e: &NumExpr, arg: &NumExpr, renames: &mut Renames, fresh: &mut usize) -> NumExpr {
    match e {
        NumExpr::Const(_) => e.clone(),
        NumExpr::Var(v) => match renames.iter().rev().find(|(old, _)| old == v) {
            Some((_, new)) => NumExpr::Var(new.clone()),
            None => e.clone(),
        },
        NumExpr::Param => arg.clone(),
        NumExpr::Bin(op, a, b) => {
            NumExpr::bin(*op, subst_param_num(a, arg, renames, fresh), subst_param_num(b, arg, renames, fresh))
        }
        NumExpr::OracleU(s) => NumExpr::OracleU(Box::new(subst_param_set(s, arg, renames, fresh))),
        NumExpr::OracleK(n, s) => NumExpr::OracleK(
            Box::new(subst_param_num(n, arg, renames, fresh)),
            Box::new(subst_param_set(s, arg, renames, fresh)),
        ),
        NumExpr::BoundedMu { var, pred } => {
            let new = rename(var, renames, fresh);
            let pred = subst_param_pred(pred, arg, renames, fresh);
            renames.pop();
            NumExpr::BoundedMu { var: new, pred: Box::new(pred) }
        }
    }
}

fn subst_param_pred(p: &Pred, arg: &NumExpr, renames: &mut Renames, fresh: &mut usize) -> Pred {
    match p {
        Pred::Bool(_) => p.clone(),
        Pred::Cmp(op, a, b) => {
            Pred::Cmp(*op, subst_param_num(a, arg, renames, fresh), subst_param_num(b, arg, renames, fresh))
        }
        Pred::Member(n, e) => Pred::Member(subst_param_num(n, arg, renames, fresh), subst_param_set(e, arg, renames, fresh)),
        Pred::Not(a) => Pred::Not(Box::new(subst_param_pred(a, arg, renames, fresh))),
        Pred::And(a, b) => Pred::And(
            Box::new(subst_param_pred(a, arg, renames, fresh)),
            Box::new(subst_param_pred(b, arg, renames, fresh)),
        ),
        Pred::Or(a, b) => Pred::Or(
            Box::new(subst_param_pred(a, arg, renames, fresh)),
            Box::new(subst_param_pred(b, arg, renames, fresh)),
        ),
    }
}

/// Membership of `point` in `e` (parameter `j`) under `ctx`, requiring
/// `point` inside the horizon.
pub fn eval_set(e: &SetExpr, j: u64, point: u64, ctx: &OracleContext<'_>) -> Result<bool, Error> {
    if point >= ctx.bound() {
        return Err(Error::Config(format!("point {point} lies outside the horizon {}", ctx.bound())));
    }
    ctx.eval_set(e, j, point)
}
