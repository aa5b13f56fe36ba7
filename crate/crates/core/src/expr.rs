//! Abstract syntax for set expressions, numeric expressions and predicates.
//!
//! `Display` prints back into the concrete program syntax accepted by
//! [`crate::parse`], fully parenthesized.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Literal(BTreeSet<u64>),
    /// `{n | n ≡ r mod q}`
    Residue { r: u64, q: u64 },
    /// `{n | n ≥ c}`
    Threshold(u64),
    Complement(Box<SetExpr>),
    Union(Box<SetExpr>, Box<SetExpr>),
    Intersection(Box<SetExpr>, Box<SetExpr>),
    /// `e - n = {m | m + n ∈ e}`
    TranslateDown(Box<SetExpr>, u64),
    /// `{var : pred}`
    Comprehension { var: String, pred: Box<Pred> },
    /// Application `name(arg)` of a term family; `index` is its position in
    /// the program.
    Term { name: String, index: usize, arg: Box<NumExpr> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    /// Truncated at 0.
    Sub,
    Mul,
    /// Division by 0 yields 0.
    Div,
    /// Remainder by 0 yields the dividend.
    Rem,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NumExpr {
    Const(u64),
    Var(String),
    /// The family parameter `j`.
    Param,
    Bin(BinOp, Box<NumExpr>, Box<NumExpr>),
    /// `U(e)`: 0 if the set is in the filter, 1 if its complement is.
    OracleU(Box<SetExpr>),
    /// `K(n, e)`: least element of `e` above `n` within the horizon, else 0.
    OracleK(Box<NumExpr>, Box<SetExpr>),
    /// `mu(x : p)`: least `x` below the horizon satisfying `p`, else 0.
    BoundedMu { var: String, pred: Box<Pred> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply(self, a: u64, b: u64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl BinOp {
    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            BinOp::Add => a.saturating_add(b),
            BinOp::Sub => a.saturating_sub(b),
            BinOp::Mul => a.saturating_mul(b),
            BinOp::Div => a.checked_div(b).unwrap_or(0),
            BinOp::Rem => a.checked_rem(b).unwrap_or(a),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pred {
    Bool(bool),
    Cmp(CmpOp, NumExpr, NumExpr),
    Member(NumExpr, SetExpr),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

/// One entry `name(j) = family` of a normalized program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramTerm {
    pub index: usize,
    pub name: String,
    pub family: SetExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Goal {
    /// `goal = U(e)`: report the filter's verdict on `e`.
    Verdict(SetExpr),
    Number(NumExpr),
    Predicate(Pred),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub terms: Vec<ProgramTerm>,
    pub goal: Goal,
}

/// A reference from inside an expression to a term family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermRef<'a> {
    pub name: &'a str,
    pub index: usize,
    /// Whether the reference sits directly under `U` or `K`.
    pub under_oracle: bool,
}

impl SetExpr {
    /// True when some variable occurs outside the binder that introduces it.
    pub fn has_free_vars(&self) -> bool {
        self.free_vars_under(&mut Vec::new())
    }

    fn free_vars_under(&self, bound: &mut Vec<String>) -> bool {
        match self {
            SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => false,
            SetExpr::Complement(e) | SetExpr::TranslateDown(e, _) => e.free_vars_under(bound),
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => a.free_vars_under(bound) || b.free_vars_under(bound),
            SetExpr::Comprehension { var, pred } => {
                bound.push(var.clone());
                let free = pred.free_vars_under(bound);
                bound.pop();
                free
            }
            SetExpr::Term { arg, .. } => arg.free_vars_under(bound),
        }
    }

    pub fn complement(self) -> SetExpr {
        SetExpr::Complement(Box::new(self))
    }

    pub fn translate(self, n: u64) -> SetExpr {
        SetExpr::TranslateDown(Box::new(self), n)
    }

    pub fn and(self, other: SetExpr) -> SetExpr {
        SetExpr::Intersection(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: SetExpr) -> SetExpr {
        SetExpr::Union(Box::new(self), Box::new(other))
    }

    pub fn term(name: &str, index: usize, arg: NumExpr) -> SetExpr {
        SetExpr::Term { name: name.to_string(), index, arg: Box::new(arg) }
    }

    /// All term references, in syntactic order.
    pub fn term_refs(&self) -> Vec<TermRef<'_>> {
        let mut out = Vec::new();
        self.collect_refs(false, &mut out);
        out
    }

    fn collect_refs<'a>(&'a self, under_oracle: bool, out: &mut Vec<TermRef<'a>>) {
        match self {
            SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => {}
            SetExpr::Complement(e) | SetExpr::TranslateDown(e, _) => e.collect_refs(false, out),
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => {
                a.collect_refs(false, out);
                b.collect_refs(false, out);
            }
            SetExpr::Comprehension { pred, .. } => pred.collect_refs(out),
            SetExpr::Term { name, index, arg } => {
                out.push(TermRef { name, index: *index, under_oracle });
                arg.collect_refs(out);
            }
        }
    }

    /// Maximum nesting depth of `U`/`K` oracle calls.
    pub fn oracle_depth(&self) -> usize {
        match self {
            SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => 0,
            SetExpr::Complement(e) | SetExpr::TranslateDown(e, _) => e.oracle_depth(),
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => a.oracle_depth().max(b.oracle_depth()),
            SetExpr::Comprehension { pred, .. } => pred.oracle_depth(),
            SetExpr::Term { arg, .. } => arg.oracle_depth(),
        }
    }

    /// True when the expression mentions no term family and no parameter.
    pub fn is_closed(&self) -> bool {
        self.term_refs().is_empty() && !self.mentions_param()
    }

    pub fn mentions_param(&self) -> bool {
        match self {
            SetExpr::Literal(_) | SetExpr::Residue { .. } | SetExpr::Threshold(_) => false,
            SetExpr::Complement(e) | SetExpr::TranslateDown(e, _) => e.mentions_param(),
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => a.mentions_param() || b.mentions_param(),
            SetExpr::Comprehension { pred, .. } => pred.mentions_param(),
            SetExpr::Term { arg, .. } => arg.mentions_param(),
        }
    }
}

impl NumExpr {
    /// True when some variable occurs outside the binder that introduces it.
    pub fn has_free_vars(&self) -> bool {
        self.free_vars_under(&mut Vec::new())
    }

    fn free_vars_under(&self, bound: &mut Vec<String>) -> bool {
        match self {
            NumExpr::Const(_) | NumExpr::Param => false,
            NumExpr::Var(v) => !bound.contains(v),
            NumExpr::Bin(_, a, b) => a.free_vars_under(bound) || b.free_vars_under(bound),
            NumExpr::OracleU(e) => e.free_vars_under(bound),
            NumExpr::OracleK(n, e) => n.free_vars_under(bound) || e.free_vars_under(bound),
            NumExpr::BoundedMu { var, pred } => {
                bound.push(var.clone());
                let free = pred.free_vars_under(bound);
                bound.pop();
                free
            }
        }
    }

    pub fn bin(op: BinOp, a: NumExpr, b: NumExpr) -> NumExpr {
        NumExpr::Bin(op, Box::new(a), Box::new(b))
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<TermRef<'a>>) {
        match self {
            NumExpr::Const(_) | NumExpr::Var(_) | NumExpr::Param => {}
            NumExpr::Bin(_, a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            NumExpr::OracleU(e) => e.collect_refs(true, out),
            NumExpr::OracleK(n, e) => {
                n.collect_refs(out);
                e.collect_refs(true, out);
            }
            NumExpr::BoundedMu { pred, .. } => pred.collect_refs(out),
        }
    }

    fn oracle_depth(&self) -> usize {
        match self {
            NumExpr::Const(_) | NumExpr::Var(_) | NumExpr::Param => 0,
            NumExpr::Bin(_, a, b) => a.oracle_depth().max(b.oracle_depth()),
            NumExpr::OracleU(e) => 1 + e.oracle_depth(),
            NumExpr::OracleK(n, e) => n.oracle_depth().max(1 + e.oracle_depth()),
            NumExpr::BoundedMu { pred, .. } => pred.oracle_depth(),
        }
    }

    fn mentions_param(&self) -> bool {
        match self {
            NumExpr::Param => true,
            NumExpr::Const(_) | NumExpr::Var(_) => false,
            NumExpr::Bin(_, a, b) => a.mentions_param() || b.mentions_param(),
            NumExpr::OracleU(e) => e.mentions_param(),
            NumExpr::OracleK(n, e) => n.mentions_param() || e.mentions_param(),
            NumExpr::BoundedMu { pred, .. } => pred.mentions_param(),
        }
    }

    /// Term references reachable from this expression.
    pub fn term_refs(&self) -> Vec<TermRef<'_>> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }
}

impl Pred {
    fn free_vars_under(&self, bound: &mut Vec<String>) -> bool {
        match self {
            Pred::Bool(_) => false,
            Pred::Cmp(_, a, b) => a.free_vars_under(bound) || b.free_vars_under(bound),
            Pred::Member(n, e) => n.free_vars_under(bound) || e.free_vars_under(bound),
            Pred::Not(p) => p.free_vars_under(bound),
            Pred::And(a, b) | Pred::Or(a, b) => a.free_vars_under(bound) || b.free_vars_under(bound),
        }
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<TermRef<'a>>) {
        match self {
            Pred::Bool(_) => {}
            Pred::Cmp(_, a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            Pred::Member(n, e) => {
                n.collect_refs(out);
                e.collect_refs(false, out);
            }
            Pred::Not(p) => p.collect_refs(out),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }

    fn oracle_depth(&self) -> usize {
        match self {
            Pred::Bool(_) => 0,
            Pred::Cmp(_, a, b) => a.oracle_depth().max(b.oracle_depth()),
            Pred::Member(n, e) => n.oracle_depth().max(e.oracle_depth()),
            Pred::Not(p) => p.oracle_depth(),
            Pred::And(a, b) | Pred::Or(a, b) => a.oracle_depth().max(b.oracle_depth()),
        }
    }

    fn mentions_param(&self) -> bool {
        match self {
            Pred::Bool(_) => false,
            Pred::Cmp(_, a, b) => a.mentions_param() || b.mentions_param(),
            Pred::Member(n, e) => n.mentions_param() || e.mentions_param(),
            Pred::Not(p) => p.mentions_param(),
            Pred::And(a, b) | Pred::Or(a, b) => a.mentions_param() || b.mentions_param(),
        }
    }

    pub fn term_refs(&self) -> Vec<TermRef<'_>> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }
}

impl Goal {
    pub fn term_refs(&self) -> Vec<TermRef<'_>> {
        match self {
            Goal::Verdict(e) => {
                let mut refs = e.term_refs();
                for r in &mut refs {
                    r.under_oracle = true;
                }
                refs
            }
            Goal::Number(n) => n.term_refs(),
            Goal::Predicate(p) => p.term_refs(),
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Literal(s) => {
                write!(f, "[")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
            SetExpr::Residue { r, q } => write!(f, "res({r},{q})"),
            SetExpr::Threshold(c) => write!(f, "ge({c})"),
            SetExpr::Complement(e) => write!(f, "!{e}"),
            SetExpr::Union(a, b) => write!(f, "({a} | {b})"),
            SetExpr::Intersection(a, b) => write!(f, "({a} & {b})"),
            SetExpr::TranslateDown(e, n) => write!(f, "({e} - {n})"),
            SetExpr::Comprehension { var, pred } => write!(f, "{{{var} : {pred}}}"),
            SetExpr::Term { name, arg, .. } => write!(f, "{name}({arg})"),
        }
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Const(c) => write!(f, "{c}"),
            NumExpr::Var(v) => write!(f, "{v}"),
            NumExpr::Param => write!(f, "j"),
            NumExpr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            NumExpr::OracleU(e) => write!(f, "U({e})"),
            NumExpr::OracleK(n, e) => write!(f, "K({n}, {e})"),
            NumExpr::BoundedMu { var, pred } => write!(f, "mu({var} : {pred})"),
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Bool(b) => write!(f, "{b}"),
            Pred::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Pred::Member(n, e) => write!(f, "{n} in {e}"),
            Pred::Not(p) => write!(f, "not ({p})"),
            Pred::And(a, b) => write!(f, "({a} && {b})"),
            Pred::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Verdict(e) => write!(f, "U({e})"),
            Goal::Number(n) => write!(f, "{n}"),
            Goal::Predicate(p) => write!(f, "{p}"),
        }
    }
}

impl Program {
    /// Deepest nesting of oracle calls in any term family or in the goal.
    pub fn oracle_depth(&self) -> usize {
        let goal = match &self.goal {
            Goal::Verdict(e) => 1 + e.oracle_depth(),
            Goal::Number(n) => n.oracle_depth(),
            Goal::Predicate(p) => p.oracle_depth(),
        };
        self.terms.iter().map(|t| t.family.oracle_depth()).max().unwrap_or(0).max(goal)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{}(j) = {}", t.name, t.family)?;
        }
        write!(f, "goal = {}", self.goal)
    }
}
