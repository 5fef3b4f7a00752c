//! Forward and backward collecting semantics over a finite universe.

use crate::error::Result;
use crate::exec::Strategy;
use crate::lang::{free_vars, ACmd, RCmd};
use crate::state::{universe_slots, Flag, FlaggedState, SlotBExp, SlotExp, StateSet, Universe};

/// Atomic command with variables resolved to slot positions.
#[derive(Clone, Debug)]
pub(crate) enum SlotCmd {
    Skip,
    Assign(usize, SlotExp),
    Assume(SlotBExp),
    Nondet(usize),
    Error,
}

impl SlotCmd {
    pub fn compile(c: &ACmd, slot: &impl Fn(&str) -> Result<usize>) -> Result<SlotCmd> {
        Ok(match c {
            ACmd::Skip => SlotCmd::Skip,
            ACmd::Assign(x, a) => SlotCmd::Assign(slot(x)?, SlotExp::compile(a, slot)?),
            ACmd::Assume(b) => SlotCmd::Assume(SlotBExp::compile(b, slot)?),
            ACmd::Nondet(x) => SlotCmd::Nondet(slot(x)?),
            ACmd::Error => SlotCmd::Error,
        })
    }

    /// Calls `emit` once per successor of `(flag, vals)`. `vals` is used as
    /// scratch space and restored before returning.
    pub fn successors(&self, modulus: i64, flag: Flag, vals: &mut [i64], emit: &mut impl FnMut(Flag, &[i64])) {
        if flag == Flag::Er {
            emit(Flag::Er, vals);
            return;
        }
        match self {
            SlotCmd::Skip => emit(Flag::Ok, vals),
            SlotCmd::Assign(x, a) => {
                let old = vals[*x];
                vals[*x] = a.eval(modulus, vals);
                emit(Flag::Ok, vals);
                vals[*x] = old;
            }
            SlotCmd::Assume(b) => {
                if b.eval(modulus, vals) {
                    emit(Flag::Ok, vals);
                }
            }
            SlotCmd::Nondet(x) => {
                let old = vals[*x];
                let lo = -(modulus / 2);
                for v in lo..lo + modulus {
                    vals[*x] = v;
                    emit(Flag::Ok, vals);
                }
                vals[*x] = old;
            }
            SlotCmd::Error => emit(Flag::Er, vals),
        }
    }
}

#[derive(Clone, Debug)]
enum Prog {
    Atom(SlotCmd),
    Seq(Box<Prog>, Box<Prog>),
    Choice(Box<Prog>, Box<Prog>),
    Star(Box<Prog>),
}

impl Prog {
    fn compile(r: &RCmd, u: &Universe) -> Result<Prog> {
        Ok(match r {
            RCmd::Atom(c) => Prog::Atom(SlotCmd::compile(c, &universe_slots(u))?),
            RCmd::Seq(a, b) => Prog::Seq(Box::new(Self::compile(a, u)?), Box::new(Self::compile(b, u)?)),
            RCmd::Choice(a, b) => Prog::Choice(Box::new(Self::compile(a, u)?), Box::new(Self::compile(b, u)?)),
            RCmd::Star(a) => Prog::Star(Box::new(Self::compile(a, u)?)),
        })
    }

    fn forward(&self, s: &StateSet, u: &Universe, scratch: &mut [i64]) -> StateSet {
        match self {
            Prog::Atom(c) => {
                let mut out = StateSet::empty(u);
                for idx in s.iter() {
                    let flag = u.decode_into(idx, scratch);
                    c.successors(u.modulus(), flag, scratch, &mut |f, vals| out.insert(u.encode(f, vals)));
                }
                out
            }
            Prog::Seq(a, b) => {
                let mid = a.forward(s, u, scratch);
                b.forward(&mid, u, scratch)
            }
            Prog::Choice(a, b) => {
                let mut out = a.forward(s, u, scratch);
                out.union_with(&b.forward(s, u, scratch));
                out
            }
            Prog::Star(body) => {
                let mut acc = s.clone();
                let mut frontier = s.clone();
                loop {
                    let mut next = body.forward(&frontier, u, scratch);
                    next.difference_with(&acc);
                    if next.is_empty() {
                        return acc;
                    }
                    acc.union_with(&next);
                    frontier = next;
                }
            }
        }
    }
}

/// A command compiled against a universe, for repeated forward runs.
#[derive(Clone, Debug)]
pub struct Compiled<'u> {
    prog: Prog,
    u: &'u Universe,
}

impl<'u> Compiled<'u> {
    pub fn new(r: &RCmd, u: &'u Universe) -> Result<Self> {
        u.check_vars(&free_vars(r))?;
        Ok(Compiled {
            prog: Prog::compile(r, u)?,
            u,
        })
    }

    pub fn forward(&self, s: &StateSet) -> StateSet {
        let mut scratch = vec![0; self.u.vars().len()];
        self.prog.forward(s, self.u, &mut scratch)
    }

    pub fn backward(&self, s: &StateSet, strategy: Strategy) -> StateSet {
        let u = self.u;
        let hits = strategy.filter_range(u.num_states(), |idx| {
            self.forward(&StateSet::singleton(u, idx)).intersects(s)
        });
        StateSet::from_indices(u, hits)
    }
}

/// Successors of a single flagged state under an atomic command.
pub fn atomic_step(c: &ACmd, s: &FlaggedState, u: &Universe) -> Result<StateSet> {
    let cmd = SlotCmd::compile(c, &universe_slots(u))?;
    let mut out = StateSet::empty(u);
    let mut vals = s.store.values.clone();
    cmd.successors(u.modulus(), s.flag, &mut vals, &mut |f, v| out.insert(u.encode(f, v)));
    Ok(out)
}

/// Forward collecting semantics; `Star` is a Kleene fixpoint.
pub fn fwsem(r: &RCmd, s: &StateSet, u: &Universe) -> Result<StateSet> {
    Ok(Compiled::new(r, u)?.forward(s))
}

/// Backward collecting semantics `{ s | fwsem(r, {s}) meets S }`, by
/// enumerating every flagged state and running it forward.
pub fn bwsem(r: &RCmd, s: &StateSet, u: &Universe) -> Result<StateSet> {
    bwsem_with(r, s, u, Strategy::default())
}

pub fn bwsem_with(r: &RCmd, s: &StateSet, u: &Universe, strategy: Strategy) -> Result<StateSet> {
    Ok(Compiled::new(r, u)?.backward(s, strategy))
}
