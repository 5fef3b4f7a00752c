//! Recursive-descent parser for programs and assertions.

use std::collections::BTreeSet;

use super::ast::{ACmd, AExp, ArithOp, BExp, CmpOp, RCmd};
use super::lexer::{tokenize, Tok, Token};
use crate::assertions::Assertion;
use crate::error::{Error, Result};
use crate::state::Flag;

const KEYWORDS: &[&str] = &[
    "vars", "skip", "nondet", "assume", "error", "if", "else", "while", "choice", "or", "iter", "and",
    "not", "true", "false", "exists",
];

/// A parsed program: declared variables and the desugared command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub vars: Vec<String>,
    pub body: RCmd,
}

/// Formula before lowering to `BExp` or `Assertion`.
#[derive(Clone, Debug)]
enum Formula {
    True,
    False,
    Cmp(CmpOp, AExp, AExp),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Tagged(Flag, Box<Formula>),
}

impl Formula {
    fn to_bexp(&self) -> Option<BExp> {
        Some(match self {
            Formula::True => BExp::tt(),
            Formula::False => BExp::False,
            Formula::Cmp(op, l, r) => BExp::Cmp(*op, l.clone(), r.clone()),
            Formula::Not(a) => BExp::not(a.to_bexp()?),
            Formula::And(l, r) => BExp::and(l.to_bexp()?, r.to_bexp()?),
            Formula::Or(l, r) => BExp::or(l.to_bexp()?, r.to_bexp()?),
            Formula::Implies(l, r) => BExp::implies(l.to_bexp()?, r.to_bexp()?),
            Formula::Exists(..) | Formula::Tagged(..) => return None,
        })
    }

    fn to_assertion(&self) -> Assertion {
        if let Some(b) = self.to_bexp() {
            return Assertion::Bool(b);
        }
        match self {
            Formula::Not(a) => Assertion::Not(a.to_assertion().into()),
            Formula::And(l, r) => Assertion::And(l.to_assertion().into(), r.to_assertion().into()),
            Formula::Or(l, r) => Assertion::Or(l.to_assertion().into(), r.to_assertion().into()),
            Formula::Implies(l, r) => Assertion::Implies(l.to_assertion().into(), r.to_assertion().into()),
            Formula::Exists(x, a) => Assertion::Exists(x.clone(), a.to_assertion().into()),
            Formula::Tagged(f, a) => Assertion::Tagged(*f, a.to_assertion().into()),
            _ => unreachable!("quantifier-free formulas lower to Bool"),
        }
    }

    fn top_disjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::Or(l, r) => {
                let mut v = l.top_disjuncts();
                v.extend(r.top_disjuncts());
                v
            }
            f => vec![f],
        }
    }

    fn has_tag(&self) -> bool {
        match self {
            Formula::Tagged(..) => true,
            Formula::Not(a) | Formula::Exists(_, a) => a.has_tag(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => l.has_tag() || r.has_tag(),
            _ => false,
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    declared: Vec<String>,
    bound: Vec<String>,
    allow_quantifiers: bool,
    in_tag: bool,
}

impl Parser {
    fn new(src: &str, declared: Vec<String>) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            declared,
            bound: Vec::new(),
            allow_quantifiers: false,
            in_tag: false,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::Parse {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        }
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn expect_eof(&self) -> Result<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(self.error(format!("unexpected {} after end of input", Self::describe(t)))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.error(format!("expected {what}, found {}", Self::describe(&t)))),
        }
    }

    /// A variable use: declared or bound by an enclosing quantifier.
    fn var_use(&mut self) -> Result<String> {
        let x = self.ident("variable")?;
        if self.declared.contains(&x) || self.bound.contains(&x) {
            Ok(x)
        } else {
            self.pos -= 1;
            Err(Error::UndeclaredVariable(x))
        }
    }

    fn program(&mut self) -> Result<Program> {
        self.expect_kw("vars")?;
        let mut vars = Vec::new();
        while !self.is_sym(";") {
            let x = self.ident("variable name")?;
            if x.contains('\'') {
                return Err(self.error(format!("variable name `{x}` may not contain primes")));
            }
            if vars.contains(&x) {
                return Err(self.error(format!("variable `{x}` declared twice")));
            }
            vars.push(x);
        }
        if vars.is_empty() {
            return Err(self.error("expected at least one variable after `vars`"));
        }
        self.expect_sym(";")?;
        self.declared = vars.clone();
        let body = self.stmt()?;
        self.expect_eof()?;
        Ok(Program { vars, body })
    }

    fn stmt(&mut self) -> Result<RCmd> {
        let mut items = vec![self.basic()?];
        while self.eat_sym(";") {
            if self.is_sym("}") || matches!(self.peek(), Tok::Eof) {
                break;
            }
            items.push(self.basic()?);
        }
        Ok(RCmd::seq_all(items))
    }

    fn block(&mut self) -> Result<RCmd> {
        self.expect_sym("{")?;
        let r = self.stmt()?;
        self.expect_sym("}")?;
        Ok(r)
    }

    fn paren_bexp(&mut self) -> Result<BExp> {
        self.expect_sym("(")?;
        let b = self.bexp()?;
        self.expect_sym(")")?;
        Ok(b)
    }

    fn basic(&mut self) -> Result<RCmd> {
        if self.is_sym("{") {
            return self.block();
        }
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            t => return Err(self.error(format!("expected a statement, found {}", Self::describe(t)))),
        };
        match kw.as_str() {
            "skip" => {
                self.bump();
                Ok(RCmd::Atom(ACmd::Skip))
            }
            "error" => {
                self.bump();
                self.expect_sym("(")?;
                self.expect_sym(")")?;
                Ok(RCmd::Atom(ACmd::Error))
            }
            "assume" => {
                self.bump();
                Ok(RCmd::Atom(ACmd::Assume(self.paren_bexp()?)))
            }
            "if" => {
                self.bump();
                let b = self.paren_bexp()?;
                let then = self.block()?;
                let otherwise = if self.eat_kw("else") {
                    self.block()?
                } else {
                    RCmd::Atom(ACmd::Skip)
                };
                Ok(RCmd::if_then_else(b, then, otherwise))
            }
            "while" => {
                self.bump();
                let b = self.paren_bexp()?;
                Ok(RCmd::while_loop(b, self.block()?))
            }
            "choice" => {
                self.bump();
                let l = self.block()?;
                self.expect_kw("or")?;
                Ok(RCmd::choice(l, self.block()?))
            }
            "iter" => {
                self.bump();
                Ok(RCmd::star(self.block()?))
            }
            _ => {
                let x = self.var_use()?;
                self.expect_sym(":=")?;
                if self.is_kw("nondet") {
                    self.bump();
                    self.expect_sym("(")?;
                    self.expect_sym(")")?;
                    Ok(RCmd::Atom(ACmd::Nondet(x)))
                } else {
                    Ok(RCmd::Atom(ACmd::Assign(x, self.aexp()?)))
                }
            }
        }
    }

    fn aexp(&mut self) -> Result<AExp> {
        let mut acc = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(acc);
            };
            acc = AExp::bin(op, acc, self.term()?);
        }
    }

    fn term(&mut self) -> Result<AExp> {
        let mut acc = self.unary()?;
        while self.eat_sym("*") {
            acc = AExp::bin(ArithOp::Mul, acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<AExp> {
        if self.eat_sym("-") {
            if let Tok::Int(n) = *self.peek() {
                self.bump();
                return Ok(AExp::Int(-n));
            }
            return Ok(AExp::bin(ArithOp::Sub, AExp::Int(0), self.unary()?));
        }
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(AExp::Int(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let a = self.aexp()?;
                self.expect_sym(")")?;
                Ok(a)
            }
            Tok::Ident(_) => Ok(AExp::Var(self.var_use()?)),
            t => Err(self.error(format!("expected an expression, found {}", Self::describe(&t)))),
        }
    }

    fn bexp(&mut self) -> Result<BExp> {
        let f = self.formula()?;
        f.to_bexp().ok_or_else(|| self.error("quantifiers and flags are not allowed in boolean expressions"))
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat_sym("=>") {
            let rhs = self.formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn at_tag(&self, k: usize) -> Option<Flag> {
        match (self.peek_at(k), self.peek_at(k + 1)) {
            (Tok::Ident(s), Tok::Sym(":")) if s == "ok" => Some(Flag::Ok),
            (Tok::Ident(s), Tok::Sym(":")) if s == "er" => Some(Flag::Er),
            _ => None,
        }
    }

    fn is_or(&self) -> bool {
        self.is_kw("or") || self.is_sym("||")
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut acc = self.conjunction()?;
        while self.is_or() {
            if self.in_tag && self.at_tag(1).is_some() {
                break;
            }
            self.bump();
            acc = Formula::Or(Box::new(acc), Box::new(self.conjunction()?));
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut acc = self.prefix()?;
        while self.eat_kw("and") || self.eat_sym("&&") {
            acc = Formula::And(Box::new(acc), Box::new(self.prefix()?));
        }
        Ok(acc)
    }

    fn prefix(&mut self) -> Result<Formula> {
        if self.eat_kw("not") || self.eat_sym("!") {
            return Ok(Formula::Not(Box::new(self.prefix()?)));
        }
        if let Some(flag) = self.at_tag(0) {
            if !self.allow_quantifiers {
                return Err(self.error("flag tags are only allowed in assertions"));
            }
            if self.in_tag {
                return Err(self.error("flag tags cannot nest"));
            }
            self.bump();
            self.bump();
            self.in_tag = true;
            let body = self.formula();
            self.in_tag = false;
            return Ok(Formula::Tagged(flag, Box::new(body?)));
        }
        if self.is_kw("exists") {
            if !self.allow_quantifiers {
                return Err(self.error("quantifiers are only allowed in assertions"));
            }
            self.bump();
            let x = self.ident("bound variable")?;
            self.expect_sym(".")?;
            self.bound.push(x.clone());
            let body = self.formula();
            self.bound.pop();
            return Ok(Formula::Exists(x, Box::new(body?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula> {
        if self.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.eat_kw("false") {
            return Ok(Formula::False);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(f) = self.formula() {
                if self.eat_sym(")") && !self.at_operator() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn at_operator(&self) -> bool {
        matches!(self.peek(), Tok::Sym(s) if ["+", "-", "*", "=", "==", "!=", "<", "<=", ">", ">="].contains(s))
    }

    fn comparison(&mut self) -> Result<Formula> {
        let l = self.aexp()?;
        let op = match self.peek() {
            Tok::Sym(s) => *s,
            t => return Err(self.error(format!("expected a comparison, found {}", Self::describe(t)))),
        };
        let build = |op: CmpOp, swap: bool, l: AExp, r: AExp| {
            if swap {
                Formula::Cmp(op, r, l)
            } else {
                Formula::Cmp(op, l, r)
            }
        };
        let (cop, swap) = match op {
            "=" | "==" => (CmpOp::Eq, false),
            "!=" => (CmpOp::Ne, false),
            "<=" => (CmpOp::Le, false),
            "<" => (CmpOp::Lt, false),
            ">=" => (CmpOp::Le, true),
            ">" => (CmpOp::Lt, true),
            _ => return Err(self.error(format!("expected a comparison, found `{op}`"))),
        };
        self.bump();
        let r = self.aexp()?;
        Ok(build(cop, swap, l, r))
    }

    fn assertion(&mut self) -> Result<Assertion> {
        self.allow_quantifiers = true;
        let f = self.formula()?;
        self.expect_eof()?;
        if !f.has_tag() {
            return Ok(Assertion::tagged(Flag::Ok, f.to_assertion()));
        }
        if f.top_disjuncts().iter().any(|d| !d.has_tag()) {
            return Err(self.error("every disjunct needs an `ok:` or `er:` tag once any disjunct is tagged"));
        }
        Ok(f.to_assertion())
    }
}

/// Parses `vars x y; stmt`.
pub fn parse_program(text: &str) -> Result<Program> {
    Parser::new(text, Vec::new())?.program()
}

/// Parses a statement over already-declared variables.
pub fn parse_command(text: &str, vars: &[String]) -> Result<RCmd> {
    let mut p = Parser::new(text, vars.to_vec())?;
    let r = p.stmt()?;
    p.expect_eof()?;
    Ok(r)
}

/// Parses a boolean expression over already-declared variables.
pub fn parse_bexp(text: &str, vars: &[String]) -> Result<BExp> {
    let mut p = Parser::new(text, vars.to_vec())?;
    let b = p.bexp()?;
    p.expect_eof()?;
    Ok(b)
}

/// Parses an assertion. An untagged formula denotes the ok-part.
pub fn parse_assertion(text: &str, vars: &[String]) -> Result<Assertion> {
    Parser::new(text, vars.to_vec())?.assertion()
}

/// Parses a single atomic command.
pub fn parse_atom(text: &str, vars: &[String]) -> Result<ACmd> {
    match parse_command(text, vars)? {
        RCmd::Atom(c) => Ok(c),
        _ => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: format!("`{text}` is not an atomic command"),
        }),
    }
}

/// Integer literals of `r` outside the representative range `[lo, hi]`.
pub fn out_of_range_literals(r: &RCmd, lo: i64, hi: i64) -> Vec<i64> {
    let set: BTreeSet<i64> = r.literals().into_iter().filter(|n| *n < lo || *n > hi).collect();
    set.into_iter().collect()
}
