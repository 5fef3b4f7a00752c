use std::fmt::{self, Display, Formatter};

use super::Assertion;

// Binding strength: implication < or < and < prefix forms.
const IMPL: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const ATOM: u8 = 3;

fn level(a: &Assertion) -> u8 {
    match a {
        Assertion::Implies(..) | Assertion::Exists(..) | Assertion::Tagged(..) => IMPL,
        Assertion::Or(..) => OR,
        Assertion::And(..) => AND,
        Assertion::Bool(b) if crate::lang::print::as_or(b).is_some() => OR,
        Assertion::Bool(crate::lang::BExp::And(..)) => AND,
        _ => ATOM,
    }
}

fn write_at(f: &mut Formatter<'_>, a: &Assertion, min: u8) -> fmt::Result {
    if level(a) < min {
        write!(f, "(")?;
        write_bare(f, a)?;
        write!(f, ")")
    } else {
        write_bare(f, a)
    }
}

fn write_bare(f: &mut Formatter<'_>, a: &Assertion) -> fmt::Result {
    match a {
        Assertion::Bool(b) => write!(f, "{b}"),
        Assertion::Not(a) => {
            write!(f, "!")?;
            write_at(f, a, 4)
        }
        Assertion::And(l, r) => {
            write_at(f, l, AND)?;
            write!(f, " and ")?;
            write_at(f, r, ATOM)
        }
        Assertion::Or(l, r) => {
            write_at(f, l, OR)?;
            write!(f, " or ")?;
            write_at(f, r, AND)
        }
        Assertion::Implies(l, r) => {
            write_at(f, l, OR)?;
            write!(f, " => ")?;
            write_at(f, r, IMPL)
        }
        Assertion::Exists(x, a) => {
            write!(f, "exists {x}. ")?;
            write_at(f, a, IMPL)
        }
        Assertion::Tagged(flag, a) => {
            write!(f, "{flag}: ")?;
            write_at(f, a, IMPL)
        }
        Assertion::FwAtom(c, a) => {
            write!(f, "post[{c}](")?;
            write_at(f, a, IMPL)?;
            write!(f, ")")
        }
        Assertion::BwAtom(c, a) => {
            write!(f, "pre[{c}](")?;
            write_at(f, a, IMPL)?;
            write!(f, ")")
        }
    }
}

impl Display for Assertion {
    /// A top-level disjunction of tagged parts prints as `ok: A or er: B`.
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let parts = self.disjuncts();
        if parts.len() > 1 && parts.iter().all(|p| matches!(p, Assertion::Tagged(..))) {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " or ")?;
                }
                if let Assertion::Tagged(flag, body) = p {
                    write!(f, "{flag}: ")?;
                    write_at(f, body, AND)?;
                }
            }
            return Ok(());
        }
        write_bare(f, self)
    }
}
