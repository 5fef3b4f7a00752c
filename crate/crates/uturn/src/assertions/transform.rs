use std::collections::BTreeSet;
use std::sync::Arc;

use super::{fresh_name, Assertion};
use crate::lang::{ACmd, AExp, BExp};
use crate::state::Flag;

/// `P[a/x]`, renaming binders that would capture a variable of `a`.
pub fn substitute(p: &Assertion, a: &AExp, x: &str) -> Assertion {
    subst(p, x, a).unwrap_or_else(|| p.clone())
}

fn subst_arc(p: &Arc<Assertion>, x: &str, a: &AExp) -> Option<Arc<Assertion>> {
    subst(p, x, a).map(Arc::new)
}

/// `None` when `x` does not occur free, so unchanged subtrees stay shared.
fn subst(p: &Assertion, x: &str, a: &AExp) -> Option<Assertion> {
    match p {
        Assertion::Bool(b) => b.mentions(x).then(|| Assertion::Bool(b.subst(x, a))),
        Assertion::Not(q) => subst_arc(q, x, a).map(Assertion::Not),
        Assertion::Tagged(f, q) => subst_arc(q, x, a).map(|q| Assertion::Tagged(*f, q)),
        Assertion::And(l, r) => pair(l, r, x, a).map(|(l, r)| Assertion::And(l, r)),
        Assertion::Or(l, r) => pair(l, r, x, a).map(|(l, r)| Assertion::Or(l, r)),
        Assertion::Implies(l, r) => pair(l, r, x, a).map(|(l, r)| Assertion::Implies(l, r)),
        Assertion::Exists(y, body) => {
            if y == x || !body.has_free(x) {
                return None;
            }
            if a.mentions(y) {
                let mut avoid = a.vars();
                body.all_names(&mut avoid);
                avoid.insert(x.to_string());
                avoid.insert(y.clone());
                let y2 = fresh_name(y, &avoid);
                let renamed = substitute(body, &AExp::Var(y2.clone()), y);
                Some(Assertion::Exists(y2, Arc::new(substitute(&renamed, a, x))))
            } else {
                subst_arc(body, x, a).map(|b| Assertion::Exists(y.clone(), b))
            }
        }
        Assertion::FwAtom(..) | Assertion::BwAtom(..) => {
            if !p.has_free(x) {
                return None;
            }
            Some(substitute(&expand_atom(p), a, x))
        }
    }
}

fn pair(l: &Arc<Assertion>, r: &Arc<Assertion>, x: &str, a: &AExp) -> Option<(Arc<Assertion>, Arc<Assertion>)> {
    match (subst_arc(l, x, a), subst_arc(r, x, a)) {
        (None, None) => None,
        (nl, nr) => Some((nl.unwrap_or_else(|| l.clone()), nr.unwrap_or_else(|| r.clone()))),
    }
}

/// Flag-free formula for `{ σ | (flag, σ) ∈ P }`.
pub fn view(flag: Flag, p: &Assertion) -> Assertion {
    if p.is_flag_free() {
        return p.clone();
    }
    match p {
        Assertion::Bool(_) => p.clone(),
        Assertion::Not(q) => Assertion::not(view(flag, q)),
        Assertion::And(l, r) => Assertion::and(view(flag, l), view(flag, r)),
        Assertion::Or(l, r) => Assertion::or(view(flag, l), view(flag, r)),
        Assertion::Implies(l, r) => Assertion::implies(view(flag, l), view(flag, r)),
        Assertion::Exists(x, q) => Assertion::exists(x, view(flag, q)),
        Assertion::Tagged(g, q) if *g == flag => view(flag, q),
        Assertion::Tagged(..) => Assertion::ff(),
        Assertion::FwAtom(..) | Assertion::BwAtom(..) => view(flag, &expand_atom(p)),
    }
}

/// Moves the `from`-part of `P` to flag `to`.
pub fn retag(p: &Assertion, from: Flag, to: Flag) -> Assertion {
    let parts = p
        .disjuncts()
        .iter()
        .map(|d| match d {
            Assertion::Tagged(g, body) if *g == from && body.is_flag_free() => Assertion::Tagged(to, body.clone()),
            d => Assertion::tagged(to, view(from, d)),
        })
        .collect();
    Assertion::or_all(parts)
}

/// Splits `P` into its ok-part and er-part, each tagged.
pub fn split_flags(p: &Assertion) -> (Assertion, Assertion) {
    let (mut oks, mut ers) = (Vec::new(), Vec::new());
    for d in p.disjuncts() {
        match &d {
            Assertion::Tagged(Flag::Ok, body) if body.is_flag_free() => oks.push(d.clone()),
            Assertion::Tagged(Flag::Er, body) if body.is_flag_free() => ers.push(d.clone()),
            _ => {
                oks.push(Assertion::tagged(Flag::Ok, view(Flag::Ok, &d)));
                ers.push(Assertion::tagged(Flag::Er, view(Flag::Er, &d)));
            }
        }
    }
    (Assertion::or_all(oks), Assertion::or_all(ers))
}

fn per_disjunct(p: &Assertion, f: impl Fn(&Assertion) -> Assertion) -> Assertion {
    let ds = p.disjuncts();
    if ds.len() == 1 {
        return f(p);
    }
    Assertion::or_all(ds.iter().map(f).collect())
}

/// `exists v. P[v/x] and x = a[v/x]` with `v` a fresh primed copy of `x`.
pub(crate) fn assign_post(p: &Assertion, x: &str, a: &AExp) -> Assertion {
    let mut avoid: BTreeSet<String> = a.vars();
    p.all_names(&mut avoid);
    avoid.insert(x.to_string());
    let v = fresh_name(x, &avoid);
    let vexp = AExp::Var(v.clone());
    let body = Assertion::and(
        substitute(p, &vexp, x),
        Assertion::Bool(BExp::eq(AExp::var(x), a.subst(x, &vexp))),
    );
    Assertion::exists(&v, body)
}

/// Closed-form strongest post of an atom; `P` is expected to be ok-tagged.
pub fn sp_atom(c: &ACmd, p: &Assertion) -> Assertion {
    match c {
        ACmd::Skip => p.clone(),
        ACmd::Assign(x, a) => per_disjunct(p, |d| assign_post(d, x, a)),
        ACmd::Assume(b) => per_disjunct(p, |d| Assertion::and(d.clone(), Assertion::Bool(b.clone()))),
        ACmd::Nondet(x) => per_disjunct(p, |d| Assertion::exists(x, d.clone())),
        ACmd::Error => retag(p, Flag::Ok, Flag::Er),
    }
}

/// Closed-form weakest pre of an atom (backward substitution for
/// assignment); `Q` is expected to be ok-tagged, or er-tagged for `error()`.
pub fn wp_atom(c: &ACmd, q: &Assertion) -> Assertion {
    match c {
        ACmd::Skip => q.clone(),
        ACmd::Assign(x, a) => substitute(q, a, x),
        ACmd::Assume(b) => per_disjunct(q, |d| Assertion::and(d.clone(), Assertion::Bool(b.clone()))),
        ACmd::Nondet(x) => per_disjunct(q, |d| Assertion::exists(x, d.clone())),
        ACmd::Error => retag(q, Flag::Er, Flag::Ok),
    }
}

/// Rewrites a top-level `FwAtom`/`BwAtom` into tagged closed forms; other
/// formulas are returned unchanged.
pub fn expand_atom(p: &Assertion) -> Assertion {
    match p {
        Assertion::FwAtom(c, body) => {
            let er = Assertion::tagged(Flag::Er, view(Flag::Er, body));
            let ok_view = view(Flag::Ok, body);
            let moved = match c {
                ACmd::Error => Assertion::tagged(Flag::Er, ok_view),
                c => Assertion::tagged(Flag::Ok, flag_free_post(c, &ok_view)),
            };
            Assertion::or(er, moved)
        }
        Assertion::BwAtom(c, body) => {
            let er_view = view(Flag::Er, body);
            let er = Assertion::tagged(Flag::Er, er_view.clone());
            let ok = match c {
                ACmd::Error => Assertion::tagged(Flag::Ok, er_view),
                c => Assertion::tagged(Flag::Ok, flag_free_pre(c, &view(Flag::Ok, body))),
            };
            Assertion::or(er, ok)
        }
        _ => p.clone(),
    }
}

fn flag_free_post(c: &ACmd, p: &Assertion) -> Assertion {
    match c {
        ACmd::Skip | ACmd::Error => p.clone(),
        ACmd::Assign(x, a) => assign_post(p, x, a),
        ACmd::Assume(b) => Assertion::and(p.clone(), Assertion::Bool(b.clone())),
        ACmd::Nondet(x) => Assertion::exists(x, p.clone()),
    }
}

fn flag_free_pre(c: &ACmd, q: &Assertion) -> Assertion {
    match c {
        ACmd::Skip | ACmd::Error => q.clone(),
        ACmd::Assign(x, a) => substitute(q, a, x),
        ACmd::Assume(b) => Assertion::and(q.clone(), Assertion::Bool(b.clone())),
        ACmd::Nondet(x) => Assertion::exists(x, q.clone()),
    }
}
