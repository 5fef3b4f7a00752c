//! Concrete syntax printing. Output re-parses to the same tree.

use std::fmt::{self, Display, Formatter};

use super::ast::{ACmd, AExp, ArithOp, BExp, CmpOp, RCmd};

fn prec(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul => 2,
    }
}

impl Display for ArithOp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        })
    }
}

impl Display for CmpOp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
        })
    }
}

impl Display for AExp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            AExp::Int(n) => write!(f, "{n}"),
            AExp::Var(x) => f.write_str(x),
            AExp::Bin(op, l, r) => {
                let paren_l = matches!(&**l, AExp::Bin(o, ..) if prec(*o) < prec(*op));
                let paren_r = matches!(&**r, AExp::Bin(o, ..) if prec(*o) <= prec(*op));
                wrap(f, l, paren_l)?;
                write!(f, " {op} ")?;
                wrap(f, r, paren_r)
            }
        }
    }
}

fn wrap(f: &mut Formatter<'_>, x: &impl Display, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({x})")
    } else {
        write!(f, "{x}")
    }
}

/// Matches the `!(!l and !r)` encoding of `l or r`.
pub(crate) fn as_or(b: &BExp) -> Option<(&BExp, &BExp)> {
    if let BExp::Not(inner) = b {
        if let BExp::And(l, r) = &**inner {
            if let (BExp::Not(l), BExp::Not(r)) = (&**l, &**r) {
                return Some((l, r));
            }
        }
    }
    None
}

impl Display for BExp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some((l, r)) = as_or(self) {
            let paren_r = as_or(r).is_some();
            write!(f, "{l} or ")?;
            return wrap(f, r, paren_r);
        }
        match self {
            BExp::False => f.write_str("false"),
            b if b.is_true() => f.write_str("true"),
            BExp::Not(b) => write!(f, "!({b})"),
            BExp::And(l, r) => {
                wrap(f, l, as_or(l).is_some())?;
                f.write_str(" and ")?;
                wrap(f, r, as_or(r).is_some() || matches!(**r, BExp::And(..)))
            }
            BExp::Cmp(op, l, r) => write!(f, "{l} {op} {r}"),
        }
    }
}

impl Display for ACmd {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ACmd::Skip => f.write_str("skip"),
            ACmd::Assign(x, a) => write!(f, "{x} := {a}"),
            ACmd::Assume(b) => write!(f, "assume({b})"),
            ACmd::Nondet(x) => write!(f, "{x} := nondet()"),
            ACmd::Error => f.write_str("error()"),
        }
    }
}

/// `(b?; r1) + (!b?; r2)` as produced by `if`.
fn as_if(r: &RCmd) -> Option<(&BExp, &RCmd, &RCmd)> {
    if let RCmd::Choice(l, r) = r {
        if let (RCmd::Seq(g1, r1), RCmd::Seq(g2, r2)) = (&**l, &**r) {
            if let (RCmd::Atom(ACmd::Assume(b)), RCmd::Atom(ACmd::Assume(BExp::Not(nb)))) = (&**g1, &**g2) {
                if **nb == *b {
                    return Some((b, r1, r2));
                }
            }
        }
    }
    None
}

/// `(b?; r)*; !b?` as produced by `while`.
fn as_while(r: &RCmd) -> Option<(&BExp, &RCmd)> {
    if let RCmd::Seq(star, exit) = r {
        if let (RCmd::Star(body), RCmd::Atom(ACmd::Assume(BExp::Not(nb)))) = (&**star, &**exit) {
            if let RCmd::Seq(guard, body) = &**body {
                if let RCmd::Atom(ACmd::Assume(b)) = &**guard {
                    if **nb == *b {
                        return Some((b, body));
                    }
                }
            }
        }
    }
    None
}

impl Display for RCmd {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some((b, body)) = as_while(self) {
            return write!(f, "while ({b}) {{ {body} }}");
        }
        if let Some((b, r1, r2)) = as_if(self) {
            return write!(f, "if ({b}) {{ {r1} }} else {{ {r2} }}");
        }
        match self {
            RCmd::Atom(c) => write!(f, "{c}"),
            RCmd::Seq(l, r) => {
                if matches!(**l, RCmd::Seq(..)) && as_while(l).is_none() {
                    write!(f, "{{ {l} }}; {r}")
                } else {
                    write!(f, "{l}; {r}")
                }
            }
            RCmd::Choice(l, r) => write!(f, "choice {{ {l} }} or {{ {r} }}"),
            RCmd::Star(r) => write!(f, "iter {{ {r} }}"),
        }
    }
}
