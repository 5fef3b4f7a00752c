//! Extensional evaluation. Every subformula is evaluated to a table over
//! exactly its free variables, so quantifier nesting costs a projection
//! rather than a multiplication of the search space.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::Assertion;
use crate::error::Result;
use crate::lang::ACmd;
use crate::semantics::SlotCmd;
use crate::state::{table_size, Flag, FlaggedState, SlotBExp, StateSet, Universe};

/// Flagged tuples over `vars`, indexed flag-major then lexicographically.
#[derive(Clone, Debug)]
struct Table {
    vars: Vec<String>,
    stores: usize,
    bits: FixedBitSet,
}

impl Table {
    fn new(vars: Vec<String>, stores: usize) -> Self {
        Table {
            vars,
            stores,
            bits: FixedBitSet::with_capacity(2 * stores),
        }
    }
}

type Cache = HashMap<usize, (Arc<Assertion>, Rc<Table>)>;

/// Extension evaluator with a cache for shared subformulas.
///
/// Only subformulas reachable through more than one `Arc` are cached; the
/// cache holds those `Arc`s so keys stay valid for its lifetime.
pub struct Evaluator<'u> {
    u: &'u Universe,
    cache: RefCell<Cache>,
}

impl<'u> Evaluator<'u> {
    pub fn new(u: &'u Universe) -> Self {
        Evaluator {
            u,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn universe(&self) -> &'u Universe {
        self.u
    }

    pub fn extension(&self, p: &Assertion) -> Result<StateSet> {
        let t = self.eval(p)?;
        let u = self.u;
        u.check_vars(&t.vars)?;
        let full = self.expand(&t, u.vars())?;
        Ok(StateSet::from_bits(u.num_stores(), full.bits))
    }

    pub fn implies(&self, p: &Assertion, q: &Assertion) -> Result<bool> {
        Ok(self.extension(p)?.is_subset(&self.extension(q)?))
    }

    pub fn implies_witness(&self, p: &Assertion, q: &Assertion) -> Result<Option<FlaggedState>> {
        let (ep, eq) = (self.extension(p)?, self.extension(q)?);
        Ok(ep.first_outside(&eq).map(|i| self.u.state(i)))
    }

    pub fn equivalent(&self, p: &Assertion, q: &Assertion) -> Result<bool> {
        Ok(self.extension(p)? == self.extension(q)?)
    }

    pub fn is_empty(&self, p: &Assertion) -> Result<bool> {
        Ok(self.extension(p)?.is_empty())
    }

    fn eval_arc(&self, p: &Arc<Assertion>) -> Result<Rc<Table>> {
        if Arc::strong_count(p) < 2 || matches!(**p, Assertion::Bool(_)) {
            return self.eval(p).map(Rc::new);
        }
        let key = Arc::as_ptr(p) as usize;
        if let Some((_, t)) = self.cache.borrow().get(&key) {
            return Ok(t.clone());
        }
        let t = Rc::new(self.eval(p)?);
        self.cache.borrow_mut().insert(key, (p.clone(), t.clone()));
        Ok(t)
    }

    fn eval(&self, p: &Assertion) -> Result<Table> {
        match p {
            Assertion::Bool(b) => self.eval_bool(b),
            Assertion::Not(a) => {
                let mut t = (*self.eval_arc(a)?).clone();
                t.bits.toggle_range(..);
                Ok(t)
            }
            Assertion::And(l, r) => self.combine(l, r, |a, b| a.intersect_with(b)),
            Assertion::Or(l, r) => self.combine(l, r, |a, b| a.union_with(b)),
            Assertion::Implies(l, r) => self.combine(l, r, |a, b| {
                a.toggle_range(..);
                a.union_with(b);
            }),
            Assertion::Exists(x, a) => {
                let t = self.eval_arc(a)?;
                match t.vars.iter().position(|v| v == x) {
                    None => Ok((*t).clone()),
                    Some(pos) => self.project(&t, pos),
                }
            }
            Assertion::Tagged(flag, a) => {
                let mut t = (*self.eval_arc(a)?).clone();
                let other = match flag {
                    Flag::Ok => t.stores..2 * t.stores,
                    Flag::Er => 0..t.stores,
                };
                t.bits.remove_range(other);
                Ok(t)
            }
            Assertion::FwAtom(c, a) => self.eval_atom(c, a, true),
            Assertion::BwAtom(c, a) => self.eval_atom(c, a, false),
        }
    }

    fn stores_for(&self, k: usize) -> Result<usize> {
        Ok(table_size(self.u.modulus(), k, self.u.budget())? / 2)
    }

    fn eval_bool(&self, b: &crate::lang::BExp) -> Result<Table> {
        let vars: Vec<String> = b.vars().into_iter().collect();
        let stores = self.stores_for(vars.len())?;
        let compiled = SlotBExp::compile(b, &|x: &str| Ok(vars.iter().position(|v| v == x).expect("collected")))?;
        let mut t = Table::new(vars, stores);
        let m = self.u.modulus();
        let mut vals = vec![self.u.lo(); t.vars.len()];
        for s in 0..stores {
            if compiled.eval(m, &vals) {
                t.bits.insert(s);
                t.bits.insert(stores + s);
            }
            self.advance(&mut vals);
        }
        Ok(t)
    }

    /// Odometer step over residues, last slot fastest.
    fn advance(&self, vals: &mut [i64]) {
        for v in vals.iter_mut().rev() {
            *v += 1;
            if *v <= self.u.hi() {
                return;
            }
            *v = self.u.lo();
        }
    }

    fn combine(&self, l: &Arc<Assertion>, r: &Arc<Assertion>, op: impl Fn(&mut FixedBitSet, &FixedBitSet)) -> Result<Table> {
        let (tl, tr) = (self.eval_arc(l)?, self.eval_arc(r)?);
        let mut vars = tl.vars.clone();
        for v in &tr.vars {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        let mut a = self.expand(&tl, &vars)?;
        let b = self.expand(&tr, &vars)?;
        op(&mut a.bits, &b.bits);
        Ok(a)
    }

    /// Broadcasts `t` to `target`, a superset of its variables.
    fn expand(&self, t: &Table, target: &[String]) -> Result<Table> {
        if t.vars == target {
            return Ok(t.clone());
        }
        let m = self.u.modulus() as usize;
        let stores = self.stores_for(target.len())?;
        let src_k = t.vars.len();
        let mult: Vec<usize> = target
            .iter()
            .map(|v| match t.vars.iter().position(|w| w == v) {
                Some(p) => m.pow((src_k - 1 - p) as u32),
                None => 0,
            })
            .collect();
        let mut out = Table::new(target.to_vec(), stores);
        let mut digits = vec![0usize; target.len()];
        let mut src = 0usize;
        for s in 0..stores {
            if t.bits.contains(src) {
                out.bits.insert(s);
            }
            if t.bits.contains(t.stores + src) {
                out.bits.insert(stores + s);
            }
            for j in (0..digits.len()).rev() {
                digits[j] += 1;
                src += mult[j];
                if digits[j] < m {
                    break;
                }
                src -= mult[j] * m;
                digits[j] = 0;
            }
        }
        Ok(out)
    }

    fn project(&self, t: &Table, pos: usize) -> Result<Table> {
        let m = self.u.modulus() as usize;
        let k = t.vars.len();
        let low = m.pow((k - 1 - pos) as u32);
        let mut vars = t.vars.clone();
        vars.remove(pos);
        let stores = t.stores / m;
        let mut out = Table::new(vars, stores);
        for i in t.bits.ones() {
            let (f, s) = (i / t.stores, i % t.stores);
            let dest = (s / (low * m)) * low + s % low;
            out.bits.insert(f * stores + dest);
        }
        Ok(out)
    }

    /// Image (`forward`) or preimage of the body's table under one atom.
    fn eval_atom(&self, c: &ACmd, a: &Arc<Assertion>, forward: bool) -> Result<Table> {
        let body = self.eval_arc(a)?;
        let mut vars = body.vars.clone();
        for v in c.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let t = self.expand(&body, &vars)?;
        let cmd = SlotCmd::compile(c, &|x: &str| Ok(vars.iter().position(|v| v == x).expect("collected")))?;
        let m = self.u.modulus();
        let mut out = Table::new(vars.clone(), t.stores);
        let mut vals = vec![0i64; vars.len()];
        let encode = |f: Flag, vals: &[i64]| -> usize {
            let mut idx = 0usize;
            for &v in vals {
                idx = idx * m as usize + (v - self.u.lo()) as usize;
            }
            f.index() * t.stores + idx
        };
        let candidates: Box<dyn Iterator<Item = usize>> = if forward {
            Box::new(t.bits.ones().collect::<Vec<_>>().into_iter())
        } else {
            Box::new(0..2 * t.stores)
        };
        for i in candidates {
            let flag = if i >= t.stores { Flag::Er } else { Flag::Ok };
            let mut rest = i % t.stores;
            for slot in vals.iter_mut().rev() {
                *slot = (rest % m as usize) as i64 + self.u.lo();
                rest /= m as usize;
            }
            if forward {
                cmd.successors(m, flag, &mut vals, &mut |f, v| out.bits.insert(encode(f, v)));
            } else {
                let mut hit = false;
                cmd.successors(m, flag, &mut vals, &mut |f, v| hit |= t.bits.contains(encode(f, v)));
                if hit {
                    out.bits.insert(i);
                }
            }
        }
        Ok(out)
    }
}

/// The set of flagged states denoted by `p`.
pub fn extension(p: &Assertion, u: &Universe) -> Result<StateSet> {
    Evaluator::new(u).extension(p)
}

/// `extension(p) ⊆ extension(q)`.
pub fn implies(p: &Assertion, q: &Assertion, u: &Universe) -> Result<bool> {
    Evaluator::new(u).implies(p, q)
}

/// A state of `p` outside `q`, if any.
pub fn implies_witness(p: &Assertion, q: &Assertion, u: &Universe) -> Result<Option<FlaggedState>> {
    Evaluator::new(u).implies_witness(p, q)
}

pub fn equivalent(p: &Assertion, q: &Assertion, u: &Universe) -> Result<bool> {
    Evaluator::new(u).equivalent(p, q)
}

pub fn is_empty(p: &Assertion, u: &Universe) -> Result<bool> {
    Evaluator::new(u).is_empty(p)
}
