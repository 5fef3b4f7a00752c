//! Random programs, expressions and assertions for property suites and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::assertions::Assertion;
use crate::lang::{ACmd, AExp, ArithOp, BExp, CmpOp, RCmd};
use crate::state::{Flag, StateSet, Universe};

/// Shape limits for generated programs.
#[derive(Clone, Debug)]
pub struct ProgramShape {
    /// Maximum `RCmd` nesting depth (an atom has depth 1).
    pub max_depth: usize,
    /// Relative weight of `error()` among atoms, in percent.
    pub error_percent: u32,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            max_depth: 5,
            error_percent: 15,
        }
    }
}

fn literal<R: Rng>(rng: &mut R, u: &Universe) -> i64 {
    rng.gen_range(u.lo()..=u.hi())
}

fn small_literal<R: Rng>(rng: &mut R, u: &Universe) -> i64 {
    rng.gen_range(u.lo().max(-2)..=u.hi().min(2))
}

pub fn random_aexp<R: Rng>(rng: &mut R, u: &Universe, depth: usize) -> AExp {
    if depth == 0 || rng.gen_bool(0.5) {
        return if rng.gen_bool(0.6) {
            AExp::Var(u.vars().choose(rng).unwrap().clone())
        } else {
            AExp::Int(literal(rng, u))
        };
    }
    let op = *[ArithOp::Add, ArithOp::Add, ArithOp::Sub, ArithOp::Mul].choose(rng).unwrap();
    let rhs = if op == ArithOp::Mul || rng.gen_bool(0.6) {
        AExp::Int(small_literal(rng, u))
    } else {
        random_aexp(rng, u, depth - 1)
    };
    AExp::bin(op, random_aexp(rng, u, depth - 1), rhs)
}

pub fn random_cmp<R: Rng>(rng: &mut R, u: &Universe) -> BExp {
    let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Le, CmpOp::Lt].choose(rng).unwrap();
    let lhs = AExp::Var(u.vars().choose(rng).unwrap().clone());
    let rhs = if rng.gen_bool(0.7) {
        AExp::Int(literal(rng, u))
    } else {
        random_aexp(rng, u, 1)
    };
    BExp::Cmp(op, lhs, rhs)
}

pub fn random_bexp<R: Rng>(rng: &mut R, u: &Universe, depth: usize) -> BExp {
    if depth == 0 {
        return random_cmp(rng, u);
    }
    match rng.gen_range(0..10) {
        0..=4 => random_cmp(rng, u),
        5 => BExp::not(random_bexp(rng, u, depth - 1)),
        6 | 7 => BExp::and(random_bexp(rng, u, depth - 1), random_bexp(rng, u, depth - 1)),
        8 => BExp::or(random_bexp(rng, u, depth - 1), random_bexp(rng, u, depth - 1)),
        _ => {
            if rng.gen_bool(0.5) {
                BExp::tt()
            } else {
                BExp::False
            }
        }
    }
}

/// A non-error atom.
pub fn random_plain_atom<R: Rng>(rng: &mut R, u: &Universe) -> ACmd {
    let x = u.vars().choose(rng).unwrap().clone();
    match rng.gen_range(0..10) {
        0 => ACmd::Skip,
        1..=4 => ACmd::Assign(x, random_aexp(rng, u, 2)),
        5..=7 => ACmd::Assume(random_bexp(rng, u, 1)),
        _ => ACmd::Nondet(x),
    }
}

pub fn random_atom<R: Rng>(rng: &mut R, u: &Universe, shape: &ProgramShape) -> ACmd {
    if rng.gen_range(0..100) < shape.error_percent {
        ACmd::Error
    } else {
        random_plain_atom(rng, u)
    }
}

/// A program of depth at most `shape.max_depth`, mixing raw regular
/// combinators with desugared `if` and `while`.
pub fn random_rcmd<R: Rng>(rng: &mut R, u: &Universe, shape: &ProgramShape) -> RCmd {
    gen_rcmd(rng, u, shape, shape.max_depth.max(1))
}

fn gen_rcmd<R: Rng>(rng: &mut R, u: &Universe, shape: &ProgramShape, depth: usize) -> RCmd {
    if depth <= 1 || rng.gen_bool(0.2) {
        return RCmd::Atom(random_atom(rng, u, shape));
    }
    match rng.gen_range(0..12) {
        0..=3 => RCmd::seq(gen_rcmd(rng, u, shape, depth - 1), gen_rcmd(rng, u, shape, depth - 1)),
        4 | 5 => RCmd::choice(gen_rcmd(rng, u, shape, depth - 1), gen_rcmd(rng, u, shape, depth - 1)),
        6 | 7 => RCmd::star(gen_rcmd(rng, u, shape, depth - 1)),
        8 | 9 if depth >= 3 => RCmd::if_then_else(
            random_bexp(rng, u, 1),
            gen_rcmd(rng, u, shape, depth - 2),
            gen_rcmd(rng, u, shape, depth - 2),
        ),
        10 | 11 if depth >= 4 => RCmd::while_loop(random_bexp(rng, u, 0), gen_rcmd(rng, u, shape, depth - 3)),
        _ => RCmd::seq(RCmd::Atom(random_atom(rng, u, shape)), gen_rcmd(rng, u, shape, depth - 1)),
    }
}

/// A flag-free formula, possibly quantified.
pub fn random_formula<R: Rng>(rng: &mut R, u: &Universe, depth: usize) -> Assertion {
    if depth == 0 {
        return Assertion::Bool(random_bexp(rng, u, 1));
    }
    match rng.gen_range(0..10) {
        0..=3 => Assertion::Bool(random_bexp(rng, u, 2)),
        4 | 5 => Assertion::And(random_formula(rng, u, depth - 1).into(), random_formula(rng, u, depth - 1).into()),
        6 => Assertion::Or(random_formula(rng, u, depth - 1).into(), random_formula(rng, u, depth - 1).into()),
        7 => Assertion::Not(random_formula(rng, u, depth - 1).into()),
        8 => Assertion::Implies(random_formula(rng, u, depth - 1).into(), random_formula(rng, u, depth - 1).into()),
        _ => {
            let x = u.vars().choose(rng).unwrap().clone();
            Assertion::Exists(x, random_formula(rng, u, depth - 1).into())
        }
    }
}

/// An ok-tagged formula.
pub fn random_ok_assertion<R: Rng>(rng: &mut R, u: &Universe) -> Assertion {
    Assertion::tagged(Flag::Ok, random_formula(rng, u, 2))
}

/// A well-formed top-level assertion: mostly ok-tagged, sometimes er-tagged
/// or a two-flag disjunction, sometimes an explicit state enumeration.
pub fn random_assertion<R: Rng>(rng: &mut R, u: &Universe) -> Assertion {
    match rng.gen_range(0..10) {
        0..=5 => random_ok_assertion(rng, u),
        6 => Assertion::tagged(Flag::Er, random_formula(rng, u, 2)),
        7 | 8 => Assertion::or(random_ok_assertion(rng, u), Assertion::tagged(Flag::Er, random_formula(rng, u, 1))),
        _ => {
            let full = StateSet::full(u);
            Assertion::from_states(&random_subset(rng, &full, u), u)
        }
    }
}

/// A random subset of `set`, nonempty whenever `set` is. Sometimes a single
/// state, sometimes a dense sample.
pub fn random_subset<R: Rng>(rng: &mut R, set: &StateSet, u: &Universe) -> StateSet {
    let elems: Vec<usize> = set.iter().collect();
    let mut out = StateSet::empty(u);
    if elems.is_empty() {
        return out;
    }
    let keep = match rng.gen_range(0..4) {
        0 => 0.0,
        1 => 0.1,
        2 => 0.5,
        _ => 0.9,
    };
    for &i in &elems {
        if rng.gen_bool(keep) {
            out.insert(i);
        }
    }
    if out.is_empty() {
        out.insert(*elems.choose(rng).unwrap());
    }
    out
}
