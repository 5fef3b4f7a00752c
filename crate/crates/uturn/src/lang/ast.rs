use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AExp {
    Int(i64),
    Var(String),
    Bin(ArithOp, Box<AExp>, Box<AExp>),
}

/// Core comparisons. `>=` and `>` are parsed into these by swapping operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Lt,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BExp {
    False,
    Not(Box<BExp>),
    And(Box<BExp>, Box<BExp>),
    Cmp(CmpOp, AExp, AExp),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ACmd {
    Skip,
    Assign(String, AExp),
    Assume(BExp),
    Nondet(String),
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RCmd {
    Atom(ACmd),
    Seq(Box<RCmd>, Box<RCmd>),
    Choice(Box<RCmd>, Box<RCmd>),
    Star(Box<RCmd>),
}

impl AExp {
    pub fn var(x: &str) -> Self {
        AExp::Var(x.to_string())
    }

    pub fn bin(op: ArithOp, l: AExp, r: AExp) -> Self {
        AExp::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: AExp, r: AExp) -> Self {
        Self::bin(ArithOp::Add, l, r)
    }

    pub fn sub(l: AExp, r: AExp) -> Self {
        Self::bin(ArithOp::Sub, l, r)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            AExp::Int(_) => {}
            AExp::Var(x) => {
                out.insert(x.clone());
            }
            AExp::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, x: &str) -> bool {
        match self {
            AExp::Int(_) => false,
            AExp::Var(y) => y == x,
            AExp::Bin(_, l, r) => l.mentions(x) || r.mentions(x),
        }
    }

    /// `self[a/x]`. Expressions have no binders.
    pub fn subst(&self, x: &str, a: &AExp) -> AExp {
        match self {
            AExp::Int(n) => AExp::Int(*n),
            AExp::Var(y) if y == x => a.clone(),
            AExp::Var(y) => AExp::Var(y.clone()),
            AExp::Bin(op, l, r) => AExp::bin(*op, l.subst(x, a), r.subst(x, a)),
        }
    }

    pub(crate) fn for_each_literal(&self, f: &mut impl FnMut(i64)) {
        match self {
            AExp::Int(n) => f(*n),
            AExp::Var(_) => {}
            AExp::Bin(_, l, r) => {
                l.for_each_literal(f);
                r.for_each_literal(f);
            }
        }
    }
}

impl BExp {
    pub fn tt() -> Self {
        BExp::Not(Box::new(BExp::False))
    }

    pub fn not(b: BExp) -> Self {
        BExp::Not(Box::new(b))
    }

    pub fn and(l: BExp, r: BExp) -> Self {
        BExp::And(Box::new(l), Box::new(r))
    }

    /// `l or r` encoded as `!(!l and !r)`.
    pub fn or(l: BExp, r: BExp) -> Self {
        BExp::not(BExp::and(BExp::not(l), BExp::not(r)))
    }

    /// `l => r` encoded as `!(l and !r)`.
    pub fn implies(l: BExp, r: BExp) -> Self {
        BExp::not(BExp::and(l, BExp::not(r)))
    }

    pub fn cmp(op: CmpOp, l: AExp, r: AExp) -> Self {
        BExp::Cmp(op, l, r)
    }

    pub fn eq(l: AExp, r: AExp) -> Self {
        BExp::Cmp(CmpOp::Eq, l, r)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, BExp::Not(b) if **b == BExp::False)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BExp::False => {}
            BExp::Not(b) => b.collect_vars(out),
            BExp::And(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            BExp::Cmp(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, x: &str) -> bool {
        match self {
            BExp::False => false,
            BExp::Not(b) => b.mentions(x),
            BExp::And(l, r) => l.mentions(x) || r.mentions(x),
            BExp::Cmp(_, l, r) => l.mentions(x) || r.mentions(x),
        }
    }

    pub fn subst(&self, x: &str, a: &AExp) -> BExp {
        match self {
            BExp::False => BExp::False,
            BExp::Not(b) => BExp::not(b.subst(x, a)),
            BExp::And(l, r) => BExp::and(l.subst(x, a), r.subst(x, a)),
            BExp::Cmp(op, l, r) => BExp::Cmp(*op, l.subst(x, a), r.subst(x, a)),
        }
    }

    pub(crate) fn for_each_literal(&self, f: &mut impl FnMut(i64)) {
        match self {
            BExp::False => {}
            BExp::Not(b) => b.for_each_literal(f),
            BExp::And(l, r) => {
                l.for_each_literal(f);
                r.for_each_literal(f);
            }
            BExp::Cmp(_, l, r) => {
                l.for_each_literal(f);
                r.for_each_literal(f);
            }
        }
    }
}

impl ACmd {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ACmd::Skip | ACmd::Error => {}
            ACmd::Assign(x, a) => {
                out.insert(x.clone());
                a.collect_vars(out);
            }
            ACmd::Assume(b) => b.collect_vars(out),
            ACmd::Nondet(x) => {
                out.insert(x.clone());
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn name(&self) -> &'static str {
        match self {
            ACmd::Skip => "skip",
            ACmd::Assign(..) => "assign",
            ACmd::Assume(_) => "assume",
            ACmd::Nondet(_) => "nondet",
            ACmd::Error => "error",
        }
    }
}

impl RCmd {
    pub fn atom(c: ACmd) -> Self {
        RCmd::Atom(c)
    }

    pub fn seq(l: RCmd, r: RCmd) -> Self {
        RCmd::Seq(Box::new(l), Box::new(r))
    }

    pub fn choice(l: RCmd, r: RCmd) -> Self {
        RCmd::Choice(Box::new(l), Box::new(r))
    }

    pub fn star(r: RCmd) -> Self {
        RCmd::Star(Box::new(r))
    }

    /// Right-folds a nonempty statement list into nested `Seq`.
    pub fn seq_all(mut items: Vec<RCmd>) -> Self {
        let mut acc = items.pop().expect("nonempty statement list");
        while let Some(prev) = items.pop() {
            acc = RCmd::seq(prev, acc);
        }
        acc
    }

    /// `if (b) {r1} else {r2}` as `(b?; r1) + (!b?; r2)`.
    pub fn if_then_else(b: BExp, r1: RCmd, r2: RCmd) -> Self {
        RCmd::choice(
            RCmd::seq(RCmd::Atom(ACmd::Assume(b.clone())), r1),
            RCmd::seq(RCmd::Atom(ACmd::Assume(BExp::not(b))), r2),
        )
    }

    /// `while (b) {r}` as `(b?; r)*; !b?`.
    pub fn while_loop(b: BExp, r: RCmd) -> Self {
        RCmd::seq(
            RCmd::star(RCmd::seq(RCmd::Atom(ACmd::Assume(b.clone())), r)),
            RCmd::Atom(ACmd::Assume(BExp::not(b))),
        )
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            RCmd::Atom(c) => c.collect_vars(out),
            RCmd::Seq(l, r) | RCmd::Choice(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            RCmd::Star(r) => r.collect_vars(out),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            RCmd::Atom(_) => 1,
            RCmd::Seq(l, r) | RCmd::Choice(l, r) => 1 + l.depth().max(r.depth()),
            RCmd::Star(r) => 1 + r.depth(),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, RCmd::Atom(_))
    }

    pub fn literals(&self) -> Vec<i64> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |c| match c {
            ACmd::Assign(_, a) => a.for_each_literal(&mut |n| out.push(n)),
            ACmd::Assume(b) => b.for_each_literal(&mut |n| out.push(n)),
            _ => {}
        });
        out
    }

    fn visit_atoms(&self, f: &mut impl FnMut(&ACmd)) {
        match self {
            RCmd::Atom(c) => f(c),
            RCmd::Seq(l, r) | RCmd::Choice(l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
            RCmd::Star(r) => r.visit_atoms(f),
        }
    }
}

/// Every variable read or written anywhere in `r`.
pub fn free_vars(r: &RCmd) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    r.collect_vars(&mut out);
    out
}
