//! Reference implementations used only by tests. They share no evaluation
//! code with the library: expressions are interpreted over a name map, and
//! commands by explicit per-state reachability.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uturn::assertions::Assertion;
use uturn::lang::{ACmd, AExp, ArithOp, BExp, CmpOp, RCmd};
use uturn::state::{Flag, StateSet, Universe};

pub type Env = HashMap<String, i64>;
pub type State = (Flag, Vec<i64>);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn universe(m: i64, vars: &[&str]) -> Universe {
    Universe::new(m, vars.iter().map(|s| s.to_string()).collect()).unwrap()
}

pub fn residue(m: i64, v: i128) -> i64 {
    let lo = -(m as i128 / 2);
    let r = ((v - lo) % m as i128 + m as i128) % m as i128;
    (r + lo) as i64
}

pub fn eval_a(a: &AExp, env: &Env, m: i64) -> i64 {
    match a {
        AExp::Int(n) => residue(m, *n as i128),
        AExp::Var(x) => *env.get(x).unwrap_or_else(|| panic!("unbound {x}")),
        AExp::Bin(op, l, r) => {
            let (a, b) = (eval_a(l, env, m) as i128, eval_a(r, env, m) as i128);
            residue(
                m,
                match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                },
            )
        }
    }
}

pub fn eval_b(b: &BExp, env: &Env, m: i64) -> bool {
    match b {
        BExp::False => false,
        BExp::Not(b) => !eval_b(b, env, m),
        BExp::And(l, r) => eval_b(l, env, m) && eval_b(r, env, m),
        BExp::Cmp(op, l, r) => {
            let (a, b) = (eval_a(l, env, m), eval_a(r, env, m));
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Le => a <= b,
                CmpOp::Lt => a < b,
            }
        }
    }
}

pub fn env_of(u: &Universe, vals: &[i64]) -> Env {
    u.vars().iter().cloned().zip(vals.iter().copied()).collect()
}

pub fn all_states(u: &Universe) -> Vec<State> {
    let mut out = Vec::new();
    for flag in [Flag::Ok, Flag::Er] {
        let mut vals = vec![u.lo(); u.vars().len()];
        loop {
            out.push((flag, vals.clone()));
            let mut i = vals.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if vals[i] < u.hi() {
                    vals[i] += 1;
                    break;
                }
                vals[i] = u.lo();
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    out
}

pub fn step(c: &ACmd, s: &State, u: &Universe) -> Vec<State> {
    let (flag, vals) = s;
    if *flag == Flag::Er {
        return vec![s.clone()];
    }
    let env = env_of(u, vals);
    let pos = |x: &str| u.vars().iter().position(|v| v == x).unwrap();
    match c {
        ACmd::Skip => vec![s.clone()],
        ACmd::Assign(x, a) => {
            let mut v = vals.clone();
            v[pos(x)] = eval_a(a, &env, u.modulus());
            vec![(Flag::Ok, v)]
        }
        ACmd::Assume(b) => {
            if eval_b(b, &env, u.modulus()) {
                vec![s.clone()]
            } else {
                vec![]
            }
        }
        ACmd::Nondet(x) => u
            .values()
            .map(|n| {
                let mut v = vals.clone();
                v[pos(x)] = n;
                (Flag::Ok, v)
            })
            .collect(),
        ACmd::Error => vec![(Flag::Er, vals.clone())],
    }
}

/// Per-state reachability with results memoized by (subcommand, state), so
/// nested loops are explored once per state instead of once per visit.
pub struct Runner<'u> {
    u: &'u Universe,
    cache: HashMap<(usize, State), Rc<BTreeSet<State>>>,
}

impl<'u> Runner<'u> {
    pub fn new(u: &'u Universe) -> Self {
        Runner { u, cache: HashMap::new() }
    }

    /// States reachable from `s` through `r`.
    pub fn run(&mut self, r: &RCmd, s: &State) -> Rc<BTreeSet<State>> {
        let key = (r as *const RCmd as usize, s.clone());
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let out: BTreeSet<State> = match r {
            RCmd::Atom(c) => step(c, s, self.u).into_iter().collect(),
            RCmd::Seq(a, b) => {
                let mid = self.run(a, s);
                let mut out = BTreeSet::new();
                for m in mid.iter() {
                    out.extend(self.run(b, m).iter().cloned());
                }
                out
            }
            RCmd::Choice(a, b) => {
                let mut out = (*self.run(a, s)).clone();
                out.extend(self.run(b, s).iter().cloned());
                out
            }
            RCmd::Star(body) => {
                let mut seen: BTreeSet<State> = BTreeSet::new();
                let mut todo = vec![s.clone()];
                while let Some(t) = todo.pop() {
                    if seen.insert(t.clone()) {
                        todo.extend(self.run(body, &t).iter().filter(|n| !seen.contains(*n)).cloned());
                    }
                }
                seen
            }
        };
        let out = Rc::new(out);
        self.cache.insert(key, out.clone());
        out
    }
}

/// States reachable from `s` through `r`.
pub fn run(r: &RCmd, s: &State, u: &Universe) -> BTreeSet<State> {
    (*Runner::new(u).run(r, s)).clone()
}

/// States with some run of `r` ending in `post`.
pub fn preimage(r: &RCmd, post: &StateSet, u: &Universe) -> StateSet {
    let mut runner = Runner::new(u);
    to_set(
        u,
        all_states(u)
            .into_iter()
            .filter(|s| runner.run(r, s).iter().any(|(f, v)| post.contains(u.encode(*f, v)))),
    )
}

pub fn to_set(u: &Universe, states: impl IntoIterator<Item = State>) -> StateSet {
    StateSet::from_indices(u, states.into_iter().map(|(f, v)| u.encode(f, &v)))
}

pub fn naive_fwsem(r: &RCmd, s: &StateSet, u: &Universe) -> StateSet {
    let mut runner = Runner::new(u);
    let mut out = BTreeSet::new();
    for st in s.states(u) {
        out.extend(runner.run(r, &(st.flag, st.store.values)).iter().cloned());
    }
    to_set(u, out)
}

/// Pointwise truth of `a` at a flag and an environment covering its free
/// variables.
pub fn holds(a: &Assertion, flag: Flag, env: &mut Env, u: &Universe) -> bool {
    let m = u.modulus();
    match a {
        Assertion::Bool(b) => eval_b(b, env, m),
        Assertion::Not(p) => !holds(p, flag, env, u),
        Assertion::And(l, r) => holds(l, flag, env, u) && holds(r, flag, env, u),
        Assertion::Or(l, r) => holds(l, flag, env, u) || holds(r, flag, env, u),
        Assertion::Implies(l, r) => !holds(l, flag, env, u) || holds(r, flag, env, u),
        Assertion::Exists(x, p) => {
            let saved = env.get(x).copied();
            let mut found = false;
            for v in u.values() {
                env.insert(x.clone(), v);
                if holds(p, flag, env, u) {
                    found = true;
                    break;
                }
            }
            match saved {
                Some(v) => env.insert(x.clone(), v),
                None => env.remove(x),
            };
            found
        }
        Assertion::Tagged(f, p) => *f == flag && holds(p, flag, env, u),
        Assertion::FwAtom(c, p) => {
            let here: Vec<i64> = u.vars().iter().map(|x| env[x]).collect();
            all_states(u).iter().any(|s0| {
                step(c, s0, u).contains(&(flag, here.clone())) && {
                    let mut e = env.clone();
                    e.extend(env_of(u, &s0.1));
                    holds(p, s0.0, &mut e, u)
                }
            })
        }
        Assertion::BwAtom(c, p) => {
            let here: Vec<i64> = u.vars().iter().map(|x| env[x]).collect();
            step(c, &(flag, here), u).iter().any(|s1| {
                let mut e = env.clone();
                e.extend(env_of(u, &s1.1));
                holds(p, s1.0, &mut e, u)
            })
        }
    }
}

pub fn naive_extension(a: &Assertion, u: &Universe) -> StateSet {
    let states = all_states(u);
    to_set(
        u,
        states.into_iter().filter(|(f, v)| holds(a, *f, &mut env_of(u, v), u)),
    )
}

/// `post ⊆ fwsem(cmd, pre)` by per-state runs.
pub fn oracle_il_valid(pre: &Assertion, r: &RCmd, post: &Assertion, u: &Universe) -> bool {
    let reach = naive_fwsem(r, &naive_extension(pre, u), u);
    naive_extension(post, u).is_subset(&reach)
}

/// Every pre state has a run ending in the post.
pub fn oracle_sil_valid(pre: &Assertion, r: &RCmd, post: &Assertion, u: &Universe) -> bool {
    let q = naive_extension(post, u);
    naive_extension(pre, u).is_subset(&preimage(r, &q, u))
}

pub fn oracle_empty(a: &Assertion, u: &Universe) -> bool {
    naive_extension(a, u).is_empty()
}

pub fn oracle_subset(a: &Assertion, b: &Assertion, u: &Universe) -> bool {
    naive_extension(a, u).is_subset(&naive_extension(b, u))
}

/// Validity checks over extensions computed by the library evaluator, with
/// the semantics still taken from the per-state interpreter above. Replay
/// assertions nest quantifiers deeply enough that `naive_extension` would
/// take exponential time; the evaluator itself is checked against
/// `naive_extension` in the assertion tests.
pub mod sets {
    use super::*;

    pub fn ext(a: &Assertion, u: &Universe) -> StateSet {
        uturn::assertions::extension(a, u).unwrap()
    }

    pub fn il_valid(pre: &Assertion, r: &RCmd, post: &Assertion, u: &Universe) -> bool {
        ext(post, u).is_subset(&naive_fwsem(r, &ext(pre, u), u))
    }

    pub fn sil_valid(pre: &Assertion, r: &RCmd, post: &Assertion, u: &Universe) -> bool {
        ext(pre, u).is_subset(&preimage(r, &ext(post, u), u))
    }

    pub fn subset(a: &Assertion, b: &Assertion, u: &Universe) -> bool {
        ext(a, u).is_subset(&ext(b, u))
    }

    pub fn empty(a: &Assertion, u: &Universe) -> bool {
        ext(a, u).is_empty()
    }
}
