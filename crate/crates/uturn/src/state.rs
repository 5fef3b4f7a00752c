//! Bounded values, stores, flagged states and expression evaluation.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{AExp, ArithOp, BExp, CmpOp};

pub const DEFAULT_BUDGET: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Ok,
    Er,
}

impl Flag {
    pub const ALL: [Flag; 2] = [Flag::Ok, Flag::Er];

    pub fn index(self) -> usize {
        match self {
            Flag::Ok => 0,
            Flag::Er => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flag::Ok => "ok",
            Flag::Er => "er",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The finite configuration every oracle check runs over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Universe {
    modulus: i64,
    vars: Vec<String>,
    budget: usize,
    stores: usize,
}

impl Universe {
    pub fn new(modulus: i64, vars: Vec<String>) -> Result<Self> {
        Self::with_budget(modulus, vars, DEFAULT_BUDGET)
    }

    pub fn with_budget(modulus: i64, vars: Vec<String>, budget: usize) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::Config(format!("modulus must be at least 2, got {modulus}")));
        }
        if vars.is_empty() {
            return Err(Error::Config("a universe needs at least one variable".into()));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::Config(format!("variable `{v}` declared twice")));
            }
        }
        let stores = table_size(modulus, vars.len(), budget)? / 2;
        Ok(Universe {
            modulus,
            vars,
            budget,
            stores,
        })
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Smallest representative residue, `-floor(M/2)`.
    pub fn lo(&self) -> i64 {
        -(self.modulus / 2)
    }

    /// Largest representative residue, `ceil(M/2) - 1`.
    pub fn hi(&self) -> i64 {
        self.lo() + self.modulus - 1
    }

    pub fn wrap(&self, v: i64) -> i64 {
        wrap(self.modulus, v)
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo()..=self.hi()
    }

    pub fn in_range(&self, v: i64) -> bool {
        (self.lo()..=self.hi()).contains(&v)
    }

    pub fn num_stores(&self) -> usize {
        self.stores
    }

    pub fn num_states(&self) -> usize {
        2 * self.stores
    }

    pub fn index_of(&self, x: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == x)
    }

    /// State index: flag-major, then stores in lexicographic order with the
    /// first declared variable most significant.
    pub fn encode(&self, flag: Flag, values: &[i64]) -> usize {
        let mut idx = 0usize;
        for &v in values {
            idx = idx * self.modulus as usize + (v - self.lo()) as usize;
        }
        flag.index() * self.stores + idx
    }

    pub fn decode_into(&self, idx: usize, values: &mut [i64]) -> Flag {
        let (flag, mut rest) = if idx >= self.stores {
            (Flag::Er, idx - self.stores)
        } else {
            (Flag::Ok, idx)
        };
        let m = self.modulus as usize;
        for slot in values.iter_mut().rev() {
            *slot = (rest % m) as i64 + self.lo();
            rest /= m;
        }
        flag
    }

    pub fn state(&self, idx: usize) -> FlaggedState {
        let mut values = vec![0; self.vars.len()];
        let flag = self.decode_into(idx, &mut values);
        FlaggedState {
            flag,
            store: Store { values },
        }
    }

    pub fn index(&self, s: &FlaggedState) -> usize {
        self.encode(s.flag, &s.store.values)
    }

    pub fn show(&self, s: &FlaggedState) -> String {
        let parts: Vec<String> = self
            .vars
            .iter()
            .zip(&s.store.values)
            .map(|(x, v)| format!("{x} = {v}"))
            .collect();
        format!("{} {{{}}}", s.flag, parts.join(", "))
    }

    pub fn check_vars<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> Result<()> {
        for x in names {
            if self.index_of(x).is_none() {
                return Err(Error::UndeclaredVariable(x.clone()));
            }
        }
        Ok(())
    }
}

pub(crate) fn wrap(modulus: i64, v: i64) -> i64 {
    let lo = -(modulus / 2);
    (v - lo).rem_euclid(modulus) + lo
}

/// Number of flagged tuples over `k` variables, or a budget error.
pub(crate) fn table_size(modulus: i64, k: usize, budget: usize) -> Result<usize> {
    let mut size: u128 = 2;
    for _ in 0..k {
        size = size.saturating_mul(modulus as u128);
    }
    if size > budget as u128 {
        return Err(Error::Budget {
            needed: size,
            budget,
        });
    }
    Ok(size as usize)
}

/// Values of the universe variables, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Store {
    pub values: Vec<i64>,
}

impl Store {
    pub fn get(&self, u: &Universe, x: &str) -> Option<i64> {
        u.index_of(x).map(|i| self.values[i])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlaggedState {
    pub flag: Flag,
    pub store: Store,
}

/// Every flagged state of the universe, ok states first, each exactly once.
pub fn enumerate_states(u: &Universe) -> impl Iterator<Item = FlaggedState> + '_ {
    (0..u.num_states()).map(move |i| u.state(i))
}

/// A set of flagged states, stored as a bitset over state indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateSet {
    stores: usize,
    bits: FixedBitSet,
}

impl StateSet {
    pub fn empty(u: &Universe) -> Self {
        Self::with_stores(u.num_stores())
    }

    pub(crate) fn with_stores(stores: usize) -> Self {
        StateSet {
            stores,
            bits: FixedBitSet::with_capacity(2 * stores),
        }
    }

    pub fn full(u: &Universe) -> Self {
        let mut s = Self::empty(u);
        s.bits.insert_range(..);
        s
    }

    pub fn flag_part(u: &Universe, flag: Flag) -> Self {
        let mut s = Self::empty(u);
        let start = flag.index() * u.num_stores();
        s.bits.insert_range(start..start + u.num_stores());
        s
    }

    pub fn singleton(u: &Universe, idx: usize) -> Self {
        let mut s = Self::empty(u);
        s.insert(idx);
        s
    }

    pub fn from_indices(u: &Universe, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(u);
        for i in idx {
            s.insert(i);
        }
        s
    }

    pub(crate) fn from_bits(stores: usize, bits: FixedBitSet) -> Self {
        debug_assert_eq!(bits.len(), 2 * stores);
        StateSet { stores, bits }
    }

    pub fn insert(&mut self, idx: usize) {
        self.bits.insert(idx);
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.bits.contains(idx)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn intersects(&self, other: &StateSet) -> bool {
        !self.bits.is_disjoint(&other.bits)
    }

    /// Some element of `self` missing from `other`.
    pub fn first_outside(&self, other: &StateSet) -> Option<usize> {
        self.bits.difference(&other.bits).next()
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &StateSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &StateSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn restrict(&self, flag: Flag) -> StateSet {
        let mut s = self.clone();
        let other = match flag {
            Flag::Ok => self.stores..2 * self.stores,
            Flag::Er => 0..self.stores,
        };
        s.bits.remove_range(other);
        s
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        let range = flag.index() * self.stores..(flag.index() + 1) * self.stores;
        self.bits.ones().any(|i| range.contains(&i))
    }

    pub fn states<'a>(&'a self, u: &'a Universe) -> impl Iterator<Item = FlaggedState> + 'a {
        self.iter().map(move |i| u.state(i))
    }

    pub fn show(&self, u: &Universe, limit: usize) -> String {
        let mut parts: Vec<String> = self.states(u).take(limit).map(|s| u.show(&s)).collect();
        if self.len() > limit {
            parts.push(format!("... ({} more)", self.len() - limit));
        }
        format!("[{}]", parts.join(", "))
    }
}

/// Arithmetic expression with variables resolved to slot positions.
#[derive(Clone, Debug)]
pub(crate) enum SlotExp {
    Int(i64),
    Slot(usize),
    Bin(ArithOp, Box<SlotExp>, Box<SlotExp>),
}

#[derive(Clone, Debug)]
pub(crate) enum SlotBExp {
    False,
    Not(Box<SlotBExp>),
    And(Box<SlotBExp>, Box<SlotBExp>),
    Cmp(CmpOp, SlotExp, SlotExp),
}

impl SlotExp {
    pub fn compile(a: &AExp, slot: &impl Fn(&str) -> Result<usize>) -> Result<SlotExp> {
        Ok(match a {
            AExp::Int(n) => SlotExp::Int(*n),
            AExp::Var(x) => SlotExp::Slot(slot(x)?),
            AExp::Bin(op, l, r) => {
                SlotExp::Bin(*op, Box::new(Self::compile(l, slot)?), Box::new(Self::compile(r, slot)?))
            }
        })
    }

    pub fn eval(&self, modulus: i64, vals: &[i64]) -> i64 {
        match self {
            SlotExp::Int(n) => wrap(modulus, *n),
            SlotExp::Slot(i) => vals[*i],
            SlotExp::Bin(op, l, r) => {
                let (a, b) = (l.eval(modulus, vals) as i128, r.eval(modulus, vals) as i128);
                let v = match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                };
                let lo = -(modulus as i128 / 2);
                ((v - lo).rem_euclid(modulus as i128) + lo) as i64
            }
        }
    }
}

impl SlotBExp {
    pub fn compile(b: &BExp, slot: &impl Fn(&str) -> Result<usize>) -> Result<SlotBExp> {
        Ok(match b {
            BExp::False => SlotBExp::False,
            BExp::Not(b) => SlotBExp::Not(Box::new(Self::compile(b, slot)?)),
            BExp::And(l, r) => {
                SlotBExp::And(Box::new(Self::compile(l, slot)?), Box::new(Self::compile(r, slot)?))
            }
            BExp::Cmp(op, l, r) => SlotBExp::Cmp(*op, SlotExp::compile(l, slot)?, SlotExp::compile(r, slot)?),
        })
    }

    pub fn eval(&self, modulus: i64, vals: &[i64]) -> bool {
        match self {
            SlotBExp::False => false,
            SlotBExp::Not(b) => !b.eval(modulus, vals),
            SlotBExp::And(l, r) => l.eval(modulus, vals) && r.eval(modulus, vals),
            SlotBExp::Cmp(op, l, r) => {
                let (a, b) = (l.eval(modulus, vals), r.eval(modulus, vals));
                match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Le => a <= b,
                    CmpOp::Lt => a < b,
                }
            }
        }
    }
}

pub(crate) fn universe_slots(u: &Universe) -> impl Fn(&str) -> Result<usize> + '_ {
    move |x: &str| u.index_of(x).ok_or_else(|| Error::UndeclaredVariable(x.to_string()))
}

/// Evaluates `a` in `store`; every variable of `a` must be declared in `u`.
pub fn eval_aexp(a: &AExp, store: &Store, u: &Universe) -> Result<i64> {
    Ok(SlotExp::compile(a, &universe_slots(u))?.eval(u.modulus, &store.values))
}

/// Evaluates `b` in `store`; comparisons act on representative residues.
pub fn eval_bexp(b: &BExp, store: &Store, u: &Universe) -> Result<bool> {
    Ok(SlotBExp::compile(b, &universe_slots(u))?.eval(u.modulus, &store.values))
}
