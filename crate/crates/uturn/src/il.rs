//! Incorrectness Logic: rule checking, validity, and the forward engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assertions::{sp_atom, split_flags, Assertion, Evaluator};
use crate::error::Result;
use crate::lang::{free_vars, RCmd};
use crate::proof::{check_tree, select_disjuncts, BranchPolicy, Checker, Heuristics, IlDerivation, RuleKind, Triple};
use crate::semantics::Compiled;
use crate::state::{Flag, FlaggedState, Universe};

/// Checks every rule instance and returns the root triple.
///
/// Consequence reads as in the rule: the premise pre implies the conclusion
/// pre and the conclusion post implies the premise post.
pub fn check_il_derivation(d: &IlDerivation, u: &Universe) -> Result<Triple> {
    check_tree(d, u, &|ck: &Checker, d: &IlDerivation| {
        let Triple { pre, cmd, post } = &d.triple;
        match (d.rule, cmd) {
            (RuleKind::Cons, _) => {
                let k = &d.children[0];
                ck.implies(k.pre(), pre, "premise pre implies pre")?;
                ck.implies(post, k.post(), "post implies premise post")
            }
            (_, RCmd::Atom(c)) => {
                ck.within(pre, Flag::Ok, "pre")?;
                ck.equiv(post, &sp_atom(c, pre), &format!("post = sp({c}, pre)"))
            }
            _ => unreachable!("structural rules are checked generically"),
        }
    })
}

/// `post ⊆ fwsem(cmd, pre)`.
pub fn il_valid(t: &Triple, u: &Universe) -> Result<bool> {
    Ok(il_counterexample(t, u)?.is_none())
}

/// A post state that no pre state reaches, if any.
pub fn il_counterexample(t: &Triple, u: &Universe) -> Result<Option<FlaggedState>> {
    let ev = Evaluator::new(u);
    let reach = Compiled::new(&t.cmd, u)?.forward(&ev.extension(&t.pre)?);
    Ok(ev.extension(&t.post)?.first_outside(&reach).map(|i| u.state(i)))
}

/// Builds an IL derivation for `⟨p⟩ r ⟨Q⟩`, choosing `Q` by strongest posts
/// on atoms and the heuristics elsewhere.
pub fn synthesize_forward(p: &Assertion, r: &RCmd, h: &Heuristics, u: &Universe) -> Result<IlDerivation> {
    h.validate()?;
    u.check_vars(&free_vars(r))?;
    u.check_vars(&p.free_vars())?;
    let mut engine = Forward {
        ev: Evaluator::new(u),
        h,
        rng: match h.branch_policy {
            BranchPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        },
    };
    engine.derive(p.clone(), r)
}

struct Forward<'a> {
    ev: Evaluator<'a>,
    h: &'a Heuristics,
    rng: Option<ChaCha8Rng>,
}

impl Forward<'_> {
    fn derive(&mut self, p: Assertion, r: &RCmd) -> Result<IlDerivation> {
        let e = self.ev.extension(&p)?;
        if e.is_empty() {
            return Ok(IlDerivation::leaf(RuleKind::Empty, p, r.clone(), Assertion::ff()));
        }
        if !e.has_flag(Flag::Ok) {
            return Ok(IlDerivation::leaf(RuleKind::ErId, p.clone(), r.clone(), p));
        }
        if !e.has_flag(Flag::Er) {
            return self.derive_ok(p, r);
        }
        let (ok, er) = split_flags(&p);
        let d1 = self.derive_ok(ok, r)?;
        let d2 = IlDerivation::leaf(RuleKind::ErId, er.clone(), r.clone(), er);
        self.disj(p, r, d1, d2)
    }

    /// `p` is nonempty and holds only ok states.
    fn derive_ok(&mut self, p: Assertion, r: &RCmd) -> Result<IlDerivation> {
        match r {
            RCmd::Atom(c) => {
                let q = sp_atom(c, &p);
                Ok(IlDerivation::leaf(RuleKind::for_atom(c), p, r.clone(), q))
            }
            RCmd::Seq(r1, r2) => {
                let d1 = self.derive(p.clone(), r1)?;
                let d2 = self.derive(d1.post().clone(), r2)?;
                let q = d2.post().clone();
                Ok(IlDerivation::node(RuleKind::Seq, p, r.clone(), q, vec![d1, d2]))
            }
            RCmd::Choice(r1, r2) => {
                let left = |s: &mut Self, p: Assertion| -> Result<IlDerivation> {
                    let d = s.derive(p.clone(), r1)?;
                    let q = d.post().clone();
                    Ok(IlDerivation::node(RuleKind::ChoiceL, p, r.clone(), q, vec![d]))
                };
                let right = |s: &mut Self, p: Assertion| -> Result<IlDerivation> {
                    let d = s.derive(p.clone(), r2)?;
                    let q = d.post().clone();
                    Ok(IlDerivation::node(RuleKind::ChoiceR, p, r.clone(), q, vec![d]))
                };
                match self.h.branch_policy {
                    BranchPolicy::Left => left(self, p),
                    BranchPolicy::Right => right(self, p),
                    BranchPolicy::Random(_) => {
                        if self.rng.as_mut().expect("seeded").gen_bool(0.5) {
                            left(self, p)
                        } else {
                            right(self, p)
                        }
                    }
                    BranchPolicy::Both => {
                        let d1 = left(self, p.clone())?;
                        let d2 = right(self, p.clone())?;
                        self.disj(p, r, d1, d2)
                    }
                }
            }
            RCmd::Star(body) => self.derive_star(p, r, body),
        }
    }

    /// Unrolls cumulatively: `D_k` joins zero iterations with one more
    /// iteration after `D_{k-1}`, so its post covers up to `k` iterations.
    /// Stops at the first `k` whose post adds no state over `D_{k-1}`.
    fn derive_star(&mut self, p: Assertion, r: &RCmd, body: &RCmd) -> Result<IlDerivation> {
        let iter0 = || IlDerivation::leaf(RuleKind::Iter0, p.clone(), r.clone(), p.clone());
        let mut d = iter0();
        let mut reached = self.ev.extension(&p)?;
        let unrolled = RCmd::seq(r.clone(), body.clone());
        for _ in 0..self.h.max_unroll {
            let b = self.derive(d.post().clone(), body)?;
            let q = b.post().clone();
            let seq = IlDerivation::node(RuleKind::Seq, p.clone(), unrolled.clone(), q.clone(), vec![d.clone(), b]);
            let unroll = IlDerivation::node(RuleKind::Unroll, p.clone(), r.clone(), q, vec![seq]);
            let next = self.disj(p.clone(), r, iter0(), unroll)?;
            let ext = self.ev.extension(next.post())?;
            if ext.is_subset(&reached) {
                break;
            }
            reached = ext;
            d = next;
        }
        Ok(d)
    }

    /// Disjunction rule with pre `p`, followed by a consequence step when
    /// the post has empty disjuncts or more than `max_disjuncts` of them.
    fn disj(&mut self, p: Assertion, r: &RCmd, d1: IlDerivation, d2: IlDerivation) -> Result<IlDerivation> {
        let q = Assertion::or(d1.post().clone(), d2.post().clone());
        let parts = q.disjuncts();
        let node = IlDerivation::node(RuleKind::Disj, p.clone(), r.clone(), q, vec![d1, d2]);
        if parts.len() < 2 {
            return Ok(node);
        }
        let exts = parts.iter().map(|d| self.ev.extension(d)).collect::<Result<Vec<_>>>()?;
        let keep = select_disjuncts(&exts, self.h);
        if keep.len() == parts.len() {
            return Ok(node);
        }
        let kept = Assertion::or_all(keep.into_iter().map(|i| parts[i].clone()).collect());
        Ok(IlDerivation::node(RuleKind::Cons, p, r.clone(), kept, vec![node]))
    }
}
