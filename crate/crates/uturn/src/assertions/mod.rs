//! Symbolic assertions over flagged states.

mod eval;
mod print;
mod transform;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lang::{ACmd, AExp, BExp};
use crate::state::{Flag, StateSet, Universe};

pub use eval::{equivalent, extension, implies, implies_witness, is_empty, Evaluator};
pub use transform::{expand_atom, retag, sp_atom, split_flags, substitute, view, wp_atom};

/// A formula denoting a set of flagged states.
///
/// Untagged formulas are flag-agnostic; `Tagged` restricts to one flag.
/// `FwAtom(c, P)` is the image of `P` under `c` and `BwAtom(c, Q)` its
/// preimage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assertion {
    Bool(BExp),
    Not(Arc<Assertion>),
    And(Arc<Assertion>, Arc<Assertion>),
    Or(Arc<Assertion>, Arc<Assertion>),
    Implies(Arc<Assertion>, Arc<Assertion>),
    Exists(String, Arc<Assertion>),
    Tagged(Flag, Arc<Assertion>),
    FwAtom(ACmd, Arc<Assertion>),
    BwAtom(ACmd, Arc<Assertion>),
}

impl Assertion {
    pub fn tt() -> Self {
        Assertion::Bool(BExp::tt())
    }

    pub fn ff() -> Self {
        Assertion::Bool(BExp::False)
    }

    pub fn is_syntactically_false(&self) -> bool {
        matches!(self, Assertion::Bool(BExp::False))
    }

    pub fn is_syntactically_true(&self) -> bool {
        matches!(self, Assertion::Bool(b) if b.is_true())
    }

    pub fn ok(body: Assertion) -> Self {
        Self::tagged(Flag::Ok, body)
    }

    pub fn er(body: Assertion) -> Self {
        Self::tagged(Flag::Er, body)
    }

    pub fn tagged(flag: Flag, body: Assertion) -> Self {
        if body.is_syntactically_false() {
            return body;
        }
        Assertion::Tagged(flag, Arc::new(body))
    }

    pub fn not(a: Assertion) -> Self {
        match a {
            Assertion::Bool(b) => Assertion::Bool(BExp::not(b)),
            a => Assertion::Not(Arc::new(a)),
        }
    }

    /// Conjunction with unit/zero simplification; two quantifier-free sides
    /// merge into one boolean expression.
    pub fn and(l: Assertion, r: Assertion) -> Self {
        if l.is_syntactically_false() || r.is_syntactically_true() {
            return l;
        }
        if r.is_syntactically_false() || l.is_syntactically_true() {
            return r;
        }
        match (l, r) {
            (Assertion::Bool(a), Assertion::Bool(b)) => Assertion::Bool(BExp::and(a, b)),
            (l, r) => Assertion::And(Arc::new(l), Arc::new(r)),
        }
    }

    pub fn or(l: Assertion, r: Assertion) -> Self {
        if l.is_syntactically_false() {
            return r;
        }
        if r.is_syntactically_false() {
            return l;
        }
        Assertion::Or(Arc::new(l), Arc::new(r))
    }

    pub fn implies(l: Assertion, r: Assertion) -> Self {
        Assertion::Implies(Arc::new(l), Arc::new(r))
    }

    /// `exists x. body`, dropping the binder when `x` is not free.
    pub fn exists(x: &str, body: Assertion) -> Self {
        if !body.has_free(x) {
            return body;
        }
        Assertion::Exists(x.to_string(), Arc::new(body))
    }

    pub fn fw_atom(c: ACmd, body: Assertion) -> Self {
        Assertion::FwAtom(c, Arc::new(body))
    }

    pub fn bw_atom(c: ACmd, body: Assertion) -> Self {
        Assertion::BwAtom(c, Arc::new(body))
    }

    /// Balanced disjunction of `items`; `false` when empty.
    pub fn or_all(mut items: Vec<Assertion>) -> Self {
        match items.len() {
            0 => Self::ff(),
            1 => items.pop().unwrap(),
            n => {
                let right = items.split_off(n / 2);
                Self::or(Self::or_all(items), Self::or_all(right))
            }
        }
    }

    pub fn and_all(items: Vec<Assertion>) -> Self {
        items.into_iter().fold(Self::tt(), Self::and)
    }

    /// Names an arbitrary state set as a disjunction of tagged equality
    /// conjunctions.
    pub fn from_states(set: &StateSet, u: &Universe) -> Self {
        let mut parts = Vec::new();
        for flag in Flag::ALL {
            let disjuncts: Vec<Assertion> = set
                .restrict(flag)
                .states(u)
                .map(|s| {
                    let conj = u
                        .vars()
                        .iter()
                        .zip(&s.store.values)
                        .map(|(x, v)| BExp::eq(AExp::var(x), AExp::Int(*v)))
                        .reduce(BExp::and)
                        .expect("universe has variables");
                    Assertion::Bool(conj)
                })
                .collect();
            if !disjuncts.is_empty() {
                parts.push(Self::tagged(flag, Self::or_all(disjuncts)));
            }
        }
        Self::or_all(parts)
    }

    /// Top-level disjuncts, looking through `Or` and through a tag applied to
    /// a disjunction.
    pub fn disjuncts(&self) -> Vec<Assertion> {
        let mut out = Vec::new();
        self.collect_disjuncts(None, &mut out);
        out
    }

    fn collect_disjuncts(&self, tag: Option<Flag>, out: &mut Vec<Assertion>) {
        match (self, tag) {
            (Assertion::Or(l, r), _) => {
                l.collect_disjuncts(tag, out);
                r.collect_disjuncts(tag, out);
            }
            (Assertion::Tagged(f, body), None) if matches!(**body, Assertion::Or(..)) => {
                body.collect_disjuncts(Some(*f), out);
            }
            (a, Some(f)) => out.push(Assertion::tagged(f, a.clone())),
            (a, None) => out.push(a.clone()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Assertion::Bool(b) => {
                for x in b.vars() {
                    if !bound.contains(&x) {
                        out.insert(x);
                    }
                }
            }
            Assertion::Not(a) | Assertion::Tagged(_, a) => a.collect_free(bound, out),
            Assertion::And(l, r) | Assertion::Or(l, r) | Assertion::Implies(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Assertion::Exists(x, a) => {
                bound.push(x.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
            Assertion::FwAtom(c, a) | Assertion::BwAtom(c, a) => {
                for x in c.vars() {
                    if !bound.contains(&x) {
                        out.insert(x);
                    }
                }
                a.collect_free(bound, out);
            }
        }
    }

    pub fn has_free(&self, x: &str) -> bool {
        match self {
            Assertion::Bool(b) => b.mentions(x),
            Assertion::Not(a) | Assertion::Tagged(_, a) => a.has_free(x),
            Assertion::And(l, r) | Assertion::Or(l, r) | Assertion::Implies(l, r) => l.has_free(x) || r.has_free(x),
            Assertion::Exists(y, a) => y != x && a.has_free(x),
            Assertion::FwAtom(c, a) | Assertion::BwAtom(c, a) => c.vars().contains(x) || a.has_free(x),
        }
    }

    /// Every name occurring in the formula, free or bound.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Assertion::Bool(b) => b.collect_vars(out),
            Assertion::Not(a) | Assertion::Tagged(_, a) => a.all_names(out),
            Assertion::And(l, r) | Assertion::Or(l, r) | Assertion::Implies(l, r) => {
                l.all_names(out);
                r.all_names(out);
            }
            Assertion::Exists(x, a) => {
                out.insert(x.clone());
                a.all_names(out);
            }
            Assertion::FwAtom(c, a) | Assertion::BwAtom(c, a) => {
                c.collect_vars(out);
                a.all_names(out);
            }
        }
    }

    /// True when no `Tagged`, `FwAtom` or `BwAtom` occurs, so the formula
    /// holds identically at both flags.
    pub fn is_flag_free(&self) -> bool {
        match self {
            Assertion::Bool(_) => true,
            Assertion::Not(a) | Assertion::Exists(_, a) => a.is_flag_free(),
            Assertion::And(l, r) | Assertion::Or(l, r) | Assertion::Implies(l, r) => l.is_flag_free() && r.is_flag_free(),
            Assertion::Tagged(..) | Assertion::FwAtom(..) | Assertion::BwAtom(..) => false,
        }
    }

    pub fn contains_tag(&self) -> bool {
        match self {
            Assertion::Bool(_) => false,
            Assertion::Tagged(..) => true,
            Assertion::Not(a) | Assertion::Exists(_, a) | Assertion::FwAtom(_, a) | Assertion::BwAtom(_, a) => {
                a.contains_tag()
            }
            Assertion::And(l, r) | Assertion::Or(l, r) | Assertion::Implies(l, r) => l.contains_tag() || r.contains_tag(),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self {
            Assertion::Bool(_) => 1,
            Assertion::Not(a) | Assertion::Exists(_, a) | Assertion::Tagged(_, a) | Assertion::FwAtom(_, a) | Assertion::BwAtom(_, a) => {
                1 + a.size()
            }
            Assertion::And(l, r) | Assertion::Or(l, r) | Assertion::Implies(l, r) => 1 + l.size() + r.size(),
        }
    }
}

/// First of `x'`, `x''`, ... (primes appended to the unprimed stem of `base`)
/// that is not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = base.trim_end_matches('\'').to_string();
    loop {
        name.push('\'');
        if !avoid.contains(&name) {
            return name;
        }
    }
}
