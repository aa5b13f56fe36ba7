//! Parser for the line-oriented program syntax.
//!
//! ```text
//! # parity family and a query
//! t0(j) = {n : n % 2 == j}
//! t1(j) = {n : U(t0(0)) == 0 && n >= j}
//! goal = U(t0(0))
//! ```
//!
//! Statements are separated by newlines or `;`; newlines inside brackets
//! are ignored. Set syntax: `[1,2]`, `res(r,q)`, `ge(c)`, `{x : pred}`,
//! `name(num)`, `!e`, `e - 3`, `a & b`, `a | b`. Numeric syntax: naturals,
//! bound variables, `j`, `+ - * / %`, `U(set)`, `K(num, set)`,
//! `mu(x : pred)`. Predicates: comparisons, `num in set`, `not`/`!`, `&&`,
//! `||`, `true`, `false`.

use std::collections::{BTreeSet, HashMap};

use crate::error::Error;
use crate::expr::{BinOp, CmpOp, Goal, NumExpr, Pred, Program, ProgramTerm, SetExpr};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Nat(u64),
    Ident(String),
    Sym(&'static str),
    Sep,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 25] = [
    "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ":", ";", "=", "<", ">", "+", "-", "*",
    "/", "%", "&", "|",
];

const RESERVED: [&str; 12] = ["j", "U", "K", "mu", "res", "ge", "in", "not", "true", "false", "goal", "all"];

fn lex(text: &str) -> Result<Vec<Token>, Error> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = line[start..i].parse::<u64>().map_err(|_| Error::Syntax {
                    line: line_no,
                    col,
                    msg: "number out of range".into(),
                })?;
                out.push(Token { tok: Tok::Nat(n), line: line_no, col });
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(line[start..i].to_string()), line: line_no, col });
                continue;
            }
            if c == '!' && !line[i..].starts_with("!=") {
                out.push(Token { tok: Tok::Sym("!"), line: line_no, col });
                i += 1;
                continue;
            }
            let Some(sym) = SYMBOLS.iter().find(|s| line[i..].starts_with(**s)) else {
                return Err(Error::Syntax { line: line_no, col, msg: format!("unexpected character `{c}`") });
            };
            match *sym {
                "(" | "{" | "[" => depth += 1,
                ")" | "}" | "]" => depth = depth.saturating_sub(1),
                _ => {}
            }
            let tok = if *sym == ";" { Tok::Sep } else { Tok::Sym(sym) };
            out.push(Token { tok, line: line_no, col });
            i += sym.len();
        }
        if depth == 0 {
            out.push(Token { tok: Tok::Sep, line: line_no, col: line.len() + 1 });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept references to terms defined later; indices then refer to
    /// statement order and [`crate::eliminate::validate_subterm_order`]
    /// must be applied before use.
    pub allow_forward: bool,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    names: &'a HashMap<String, usize>,
    /// Index of the term being parsed; `None` while parsing the goal.
    current: Option<(usize, String)>,
    opts: ParseOptions,
}

type PResult<T> = Result<T, Error>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        };
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn expect_nat(&mut self) -> PResult<u64> {
        match self.peek() {
            Some(Tok::Nat(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a natural number"),
        }
    }

    fn expect_var(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(x)) if !RESERVED.contains(&x.as_str()) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => self.err("expected a variable name"),
        }
    }

    fn at_end_of_statement(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Sep))
    }

    // set := inter { "|" inter }
    fn set(&mut self) -> PResult<SetExpr> {
        let mut e = self.set_inter()?;
        while self.eat_sym("|") {
            let rhs = self.set_inter()?;
            e = e.or(rhs);
        }
        Ok(e)
    }

    fn set_inter(&mut self) -> PResult<SetExpr> {
        let mut e = self.set_unary()?;
        while self.eat_sym("&") {
            let rhs = self.set_unary()?;
            e = e.and(rhs);
        }
        Ok(e)
    }

    fn set_unary(&mut self) -> PResult<SetExpr> {
        if self.eat_sym("!") {
            return Ok(self.set_unary()?.complement());
        }
        self.set_postfix()
    }

    fn set_postfix(&mut self) -> PResult<SetExpr> {
        let mut e = self.set_atom()?;
        while self.is_sym("-") && matches!(self.peek_at(1), Some(Tok::Nat(_))) {
            self.pos += 1;
            let n = self.expect_nat()?;
            e = e.translate(n);
        }
        Ok(e)
    }

    fn set_atom(&mut self) -> PResult<SetExpr> {
        match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.set()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Sym("[")) => {
                self.pos += 1;
                let mut vals = BTreeSet::new();
                if !self.eat_sym("]") {
                    loop {
                        vals.insert(self.expect_nat()?);
                        if self.eat_sym("]") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                Ok(SetExpr::Literal(vals))
            }
            Some(Tok::Sym("{")) => {
                self.pos += 1;
                let var = self.expect_var()?;
                self.expect_sym(":")?;
                let pred = self.pred()?;
                self.expect_sym("}")?;
                Ok(SetExpr::Comprehension { var, pred: Box::new(pred) })
            }
            Some(Tok::Ident(id)) if id == "res" => {
                self.pos += 1;
                self.expect_sym("(")?;
                let r = self.expect_nat()?;
                self.expect_sym(",")?;
                let q = self.expect_nat()?;
                if q == 0 {
                    return self.err("residue modulus must be at least 1");
                }
                self.expect_sym(")")?;
                Ok(SetExpr::Residue { r, q })
            }
            Some(Tok::Ident(id)) if id == "ge" => {
                self.pos += 1;
                self.expect_sym("(")?;
                let c = self.expect_nat()?;
                self.expect_sym(")")?;
                Ok(SetExpr::Threshold(c))
            }
            Some(Tok::Ident(id)) if id == "all" => {
                self.pos += 1;
                Ok(SetExpr::Threshold(0))
            }
            Some(Tok::Ident(id)) if !RESERVED.contains(&id.as_str()) => {
                if !matches!(self.peek_at(1), Some(Tok::Sym("("))) {
                    return self.err(format!("expected `(` after term name `{id}`"));
                }
                let index = self.resolve(&id)?;
                self.pos += 2;
                let arg = self.num()?;
                self.expect_sym(")")?;
                Ok(SetExpr::term(&id, index, arg))
            }
            _ => self.err("expected a set expression"),
        }
    }

    fn resolve(&self, name: &str) -> PResult<usize> {
        let Some(&index) = self.names.get(name) else {
            return Err(Error::UnknownTerm(name.to_string()));
        };
        if let Some((cur, cur_name)) = &self.current {
            if index >= *cur && !self.opts.allow_forward {
                return Err(Error::ForwardReference { term: cur_name.clone(), target: name.to_string() });
            }
        }
        Ok(index)
    }

    // pred := conj { "||" conj }
    fn pred(&mut self) -> PResult<Pred> {
        let mut p = self.pred_conj()?;
        while self.eat_sym("||") {
            let rhs = self.pred_conj()?;
            p = Pred::Or(Box::new(p), Box::new(rhs));
        }
        Ok(p)
    }

    fn pred_conj(&mut self) -> PResult<Pred> {
        let mut p = self.pred_unary()?;
        while self.eat_sym("&&") {
            let rhs = self.pred_unary()?;
            p = Pred::And(Box::new(p), Box::new(rhs));
        }
        Ok(p)
    }

    fn pred_unary(&mut self) -> PResult<Pred> {
        if self.eat_sym("!") || (self.is_ident("not") && {
            self.pos += 1;
            true
        }) {
            return Ok(Pred::Not(Box::new(self.pred_unary()?)));
        }
        self.pred_atom()
    }

    fn pred_atom(&mut self) -> PResult<Pred> {
        if self.is_ident("true") {
            self.pos += 1;
            return Ok(Pred::Bool(true));
        }
        if self.is_ident("false") {
            self.pos += 1;
            return Ok(Pred::Bool(false));
        }
        let save = self.pos;
        match self.comparison() {
            Ok(p) => Ok(p),
            Err(first) => {
                self.pos = save;
                if self.eat_sym("(") {
                    if let Ok(p) = self.pred() {
                        if self.eat_sym(")") {
                            return Ok(p);
                        }
                    }
                }
                self.pos = save;
                Err(first)
            }
        }
    }

    fn comparison(&mut self) -> PResult<Pred> {
        let lhs = self.num()?;
        if self.is_ident("in") {
            self.pos += 1;
            let set = self.set_postfix_or_unary()?;
            return Ok(Pred::Member(lhs, set));
        }
        let op = match self.peek() {
            Some(Tok::Sym("==")) => CmpOp::Eq,
            Some(Tok::Sym("!=")) => CmpOp::Ne,
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            _ => return self.err("expected a comparison operator or `in`"),
        };
        self.pos += 1;
        let rhs = self.num()?;
        Ok(Pred::Cmp(op, lhs, rhs))
    }

    fn set_postfix_or_unary(&mut self) -> PResult<SetExpr> {
        if self.eat_sym("!") {
            return Ok(self.set_postfix_or_unary()?.complement());
        }
        self.set_postfix()
    }

    // num := prod { ("+"|"-") prod }
    fn num(&mut self) -> PResult<NumExpr> {
        let mut e = self.num_prod()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.pos += 1;
            let rhs = self.num_prod()?;
            e = NumExpr::bin(op, e, rhs);
        }
        Ok(e)
    }

    fn num_prod(&mut self) -> PResult<NumExpr> {
        let mut e = self.num_atom()?;
        loop {
            let op = if self.is_sym("*") {
                BinOp::Mul
            } else if self.is_sym("/") {
                BinOp::Div
            } else if self.is_sym("%") {
                BinOp::Rem
            } else {
                break;
            };
            self.pos += 1;
            let rhs = self.num_atom()?;
            e = NumExpr::bin(op, e, rhs);
        }
        Ok(e)
    }

    fn oracle_arg(&mut self) -> PResult<SetExpr> {
        let e = self.set()?;
        if let Some((_, name)) = &self.current {
            if !matches!(e, SetExpr::Term { .. }) {
                return Err(Error::OracleArgNotTerm(name.clone()));
            }
        }
        Ok(e)
    }

    fn num_atom(&mut self) -> PResult<NumExpr> {
        match self.peek().cloned() {
            Some(Tok::Nat(n)) => {
                self.pos += 1;
                Ok(NumExpr::Const(n))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.num()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Ident(id)) => match id.as_str() {
                "j" => {
                    self.pos += 1;
                    Ok(NumExpr::Param)
                }
                "U" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let e = self.oracle_arg()?;
                    self.expect_sym(")")?;
                    Ok(NumExpr::OracleU(Box::new(e)))
                }
                "K" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let n = self.num()?;
                    self.expect_sym(",")?;
                    let e = self.oracle_arg()?;
                    self.expect_sym(")")?;
                    Ok(NumExpr::OracleK(Box::new(n), Box::new(e)))
                }
                "mu" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let var = self.expect_var()?;
                    self.expect_sym(":")?;
                    let pred = self.pred()?;
                    self.expect_sym(")")?;
                    Ok(NumExpr::BoundedMu { var, pred: Box::new(pred) })
                }
                _ if RESERVED.contains(&id.as_str()) => self.err(format!("unexpected `{id}`")),
                _ => {
                    self.pos += 1;
                    Ok(NumExpr::Var(id))
                }
            },
            _ => self.err("expected a numeric expression"),
        }
    }

    fn goal(&mut self) -> PResult<Goal> {
        let save = self.pos;
        if let Ok(p) = self.pred() {
            if self.at_end_of_statement() {
                return Ok(Goal::Predicate(p));
            }
        }
        self.pos = save;
        let n = self.num()?;
        if !self.at_end_of_statement() {
            return self.err("unexpected trailing input in goal");
        }
        Ok(match n {
            NumExpr::OracleU(e) => Goal::Verdict(*e),
            n => Goal::Number(n),
        })
    }
}

fn split_statements(toks: &[Token]) -> Vec<&[Token]> {
    toks.split(|t| t.tok == Tok::Sep).filter(|s| !s.is_empty()).collect()
}

/// Parses a program, rejecting references to terms not defined earlier.
pub fn parse_program(text: &str) -> Result<Program, Error> {
    parse_program_with(text, ParseOptions::default())
}

pub fn parse_program_with(text: &str, opts: ParseOptions) -> Result<Program, Error> {
    let toks = lex(text)?;
    let stmts = split_statements(&toks);

    // Term headers: IDENT ( j ) =
    let mut names = HashMap::new();
    let mut headers = Vec::new();
    let mut goal_stmt = None;
    for s in &stmts {
        match s.first().map(|t| &t.tok) {
            Some(Tok::Ident(id)) if id == "goal" => {
                if goal_stmt.is_some() {
                    return Err(Error::Syntax { line: s[0].line, col: s[0].col, msg: "duplicate goal".into() });
                }
                goal_stmt = Some(*s);
            }
            Some(Tok::Ident(id)) if !RESERVED.contains(&id.as_str()) => {
                let header_ok = s.len() >= 5
                    && s[1].tok == Tok::Sym("(")
                    && s[2].tok == Tok::Ident("j".into())
                    && s[3].tok == Tok::Sym(")")
                    && s[4].tok == Tok::Sym("=");
                if !header_ok {
                    return Err(Error::Syntax {
                        line: s[0].line,
                        col: s[0].col,
                        msg: format!("expected `{id}(j) = <set>`"),
                    });
                }
                if goal_stmt.is_some() {
                    return Err(Error::Syntax {
                        line: s[0].line,
                        col: s[0].col,
                        msg: "terms must precede the goal".into(),
                    });
                }
                if names.insert(id.clone(), headers.len()).is_some() {
                    return Err(Error::DuplicateTerm(id.clone()));
                }
                headers.push((id.clone(), *s));
            }
            _ => {
                return Err(Error::Syntax {
                    line: s[0].line,
                    col: s[0].col,
                    msg: "expected a term definition or `goal = ...`".into(),
                })
            }
        }
    }
    let Some(goal_stmt) = goal_stmt else {
        let (line, col) = toks.last().map(|t| (t.line, t.col)).unwrap_or((1, 1));
        return Err(Error::Syntax { line, col, msg: "missing `goal = ...`".into() });
    };

    let mut terms = Vec::with_capacity(headers.len());
    for (index, (name, s)) in headers.iter().enumerate() {
        let mut p = Parser { toks: s, pos: 5, names: &names, current: Some((index, name.clone())), opts };
        let family = p.set()?;
        if !p.at_end_of_statement() {
            return p.err("unexpected trailing input");
        }
        terms.push(ProgramTerm { index, name: name.clone(), family });
    }

    let mut p = Parser { toks: goal_stmt, pos: 1, names: &names, current: None, opts };
    p.expect_sym("=")?;
    let goal = p.goal()?;
    Ok(Program { terms, goal })
}

/// Parses a closed set expression, e.g. a serialized catalog entry.
pub fn parse_set_expr(text: &str) -> Result<SetExpr, Error> {
    let toks: Vec<Token> = lex(text)?.into_iter().filter(|t| t.tok != Tok::Sep).collect();
    let names = HashMap::new();
    let mut p = Parser { toks: &toks, pos: 0, names: &names, current: None, opts: ParseOptions::default() };
    let e = p.set()?;
    if p.pos != toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}
