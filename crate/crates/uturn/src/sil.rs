//! Sufficient Incorrectness Logic: rule checking, validity, and the backward
//! engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assertions::{split_flags, wp_atom, Assertion, Evaluator};
use crate::error::Result;
use crate::exec::Strategy;
use crate::lang::{free_vars, ACmd, RCmd};
use crate::proof::{check_tree, select_disjuncts, BranchPolicy, Checker, Heuristics, RuleKind, SilDerivation, Triple};
use crate::semantics::Compiled;
use crate::state::{Flag, FlaggedState, Universe};

/// Checks every rule instance and returns the root triple.
///
/// Consequence strengthens the pre and weakens the post: the conclusion pre
/// implies the premise pre and the premise post implies the conclusion post.
pub fn check_sil_derivation(d: &SilDerivation, u: &Universe) -> Result<Triple> {
    check_tree(d, u, &|ck: &Checker, d: &SilDerivation| {
        let Triple { pre, cmd, post } = &d.triple;
        match (d.rule, cmd) {
            (RuleKind::Cons, _) => {
                let k = &d.children[0];
                ck.implies(pre, k.pre(), "pre implies premise pre")?;
                ck.implies(k.post(), post, "premise post implies post")
            }
            (_, RCmd::Atom(c)) => {
                let flag = if *c == ACmd::Error { Flag::Er } else { Flag::Ok };
                ck.within(post, flag, "post")?;
                ck.equiv(pre, &wp_atom(c, post), &format!("pre = wp({c}, post)"))
            }
            _ => unreachable!("structural rules are checked generically"),
        }
    })
}

/// `pre ⊆ bwsem(cmd, post)`.
pub fn sil_valid(t: &Triple, u: &Universe) -> Result<bool> {
    Ok(sil_counterexample(t, u)?.is_none())
}

/// A pre state with no execution into the post, if any.
pub fn sil_counterexample(t: &Triple, u: &Universe) -> Result<Option<FlaggedState>> {
    let ev = Evaluator::new(u);
    let pre = ev.extension(&t.pre)?;
    if pre.is_empty() {
        return Ok(None);
    }
    let back = Compiled::new(&t.cmd, u)?.backward(&ev.extension(&t.post)?, Strategy::default());
    Ok(pre.first_outside(&back).map(|i| u.state(i)))
}

/// Builds a SIL derivation for `⟨P⟩ r ⟨q⟩`, choosing `P` by backward
/// substitution on atoms and the heuristics elsewhere.
pub fn synthesize_backward(r: &RCmd, q: &Assertion, h: &Heuristics, u: &Universe) -> Result<SilDerivation> {
    h.validate()?;
    u.check_vars(&free_vars(r))?;
    u.check_vars(&q.free_vars())?;
    let mut engine = Backward {
        ev: Evaluator::new(u),
        h,
        rng: match h.branch_policy {
            BranchPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        },
    };
    engine.derive(r, q.clone())
}

struct Backward<'a> {
    ev: Evaluator<'a>,
    h: &'a Heuristics,
    rng: Option<ChaCha8Rng>,
}

impl Backward<'_> {
    fn derive(&mut self, r: &RCmd, q: Assertion) -> Result<SilDerivation> {
        let e = self.ev.extension(&q)?;
        if e.is_empty() {
            return Ok(SilDerivation::leaf(RuleKind::Empty, Assertion::ff(), r.clone(), q));
        }
        match r {
            RCmd::Atom(c) => self.derive_atom(c, r, q, e.has_flag(Flag::Ok), e.has_flag(Flag::Er)),
            RCmd::Seq(r1, r2) => {
                let d2 = self.derive(r2, q.clone())?;
                let d1 = self.derive(r1, d2.pre().clone())?;
                let p = d1.pre().clone();
                Ok(SilDerivation::node(RuleKind::Seq, p, r.clone(), q, vec![d1, d2]))
            }
            RCmd::Choice(r1, r2) => {
                let branch = |s: &mut Self, left: bool| -> Result<SilDerivation> {
                    let (rule, sub) = if left { (RuleKind::ChoiceL, r1) } else { (RuleKind::ChoiceR, r2) };
                    let d = s.derive(sub, q.clone())?;
                    let p = d.pre().clone();
                    Ok(SilDerivation::node(rule, p, r.clone(), q.clone(), vec![d]))
                };
                match self.h.branch_policy {
                    BranchPolicy::Left => branch(self, true),
                    BranchPolicy::Right => branch(self, false),
                    BranchPolicy::Random(_) => {
                        let left = self.rng.as_mut().expect("seeded").gen_bool(0.5);
                        branch(self, left)
                    }
                    BranchPolicy::Both => {
                        let d1 = branch(self, true)?;
                        let d2 = branch(self, false)?;
                        self.disj(r, q.clone(), d1, d2)
                    }
                }
            }
            RCmd::Star(body) => self.derive_star(r, body, q),
        }
    }

    fn derive_atom(&mut self, c: &ACmd, r: &RCmd, q: Assertion, has_ok: bool, has_er: bool) -> Result<SilDerivation> {
        let er_id = |e: Assertion| SilDerivation::leaf(RuleKind::ErId, e.clone(), r.clone(), e);
        if *c == ACmd::Error {
            let (_, er) = split_flags(&q);
            if !has_er {
                let empty = SilDerivation::leaf(RuleKind::Empty, Assertion::ff(), r.clone(), Assertion::ff());
                return Ok(SilDerivation::node(RuleKind::Cons, Assertion::ff(), r.clone(), q, vec![empty]));
            }
            let raise = SilDerivation::leaf(RuleKind::Error, wp_atom(c, &er), r.clone(), er.clone());
            let joined = if has_ok { er.clone() } else { q.clone() };
            let d = self.disj(r, joined, raise, er_id(er))?;
            if !has_ok {
                return Ok(d);
            }
            let p = d.pre().clone();
            return Ok(SilDerivation::node(RuleKind::Cons, p, r.clone(), q, vec![d]));
        }
        let axiom = |ok: Assertion| SilDerivation::leaf(RuleKind::for_atom(c), wp_atom(c, &ok), r.clone(), ok);
        match (has_ok, has_er) {
            (true, false) => Ok(axiom(q)),
            (false, _) => Ok(er_id(q)),
            (true, true) => {
                let (ok, er) = split_flags(&q);
                self.disj(r, q, axiom(ok), er_id(er))
            }
        }
    }

    /// Unrolls backward as a chain: `R_0 = q` and `⟨R_i⟩ body ⟨R_{i-1}⟩`,
    /// stopping once a new `R_i` adds nothing to the union of the earlier
    /// ones. The chain is then folded from the innermost iteration outward,
    /// each level joining zero iterations with one more.
    fn derive_star(&mut self, r: &RCmd, body: &RCmd, q: Assertion) -> Result<SilDerivation> {
        let mut levels = vec![q.clone()];
        let mut steps = Vec::new();
        let mut seen = self.ev.extension(&q)?;
        for _ in 0..self.h.max_unroll {
            let b = self.derive(body, levels.last().expect("nonempty").clone())?;
            let e = self.ev.extension(b.pre())?;
            if e.is_subset(&seen) {
                break;
            }
            seen = seen.union(&e);
            levels.push(b.pre().clone());
            steps.push(b);
        }
        let iter0 = |a: &Assertion| SilDerivation::leaf(RuleKind::Iter0, a.clone(), r.clone(), a.clone());
        let mut inner = iter0(levels.last().expect("nonempty"));
        let unrolled = RCmd::seq(r.clone(), body.clone());
        while let Some(b) = steps.pop() {
            let post = levels[steps.len()].clone();
            let p = inner.pre().clone();
            let seq = SilDerivation::node(RuleKind::Seq, p.clone(), unrolled.clone(), post.clone(), vec![inner, b]);
            let unroll = SilDerivation::node(RuleKind::Unroll, p, r.clone(), post.clone(), vec![seq]);
            inner = self.disj(r, post.clone(), iter0(&post), unroll)?;
        }
        Ok(inner)
    }

    /// Disjunction rule with post `q`, followed by a consequence step when
    /// the pre has empty disjuncts or more than `max_disjuncts` of them.
    fn disj(&mut self, r: &RCmd, q: Assertion, d1: SilDerivation, d2: SilDerivation) -> Result<SilDerivation> {
        let p = Assertion::or(d1.pre().clone(), d2.pre().clone());
        let parts = p.disjuncts();
        let node = SilDerivation::node(RuleKind::Disj, p, r.clone(), q.clone(), vec![d1, d2]);
        if parts.len() < 2 {
            return Ok(node);
        }
        let exts = parts.iter().map(|d| self.ev.extension(d)).collect::<Result<Vec<_>>>()?;
        let keep = select_disjuncts(&exts, self.h);
        if keep.len() == parts.len() {
            return Ok(node);
        }
        let kept = Assertion::or_all(keep.into_iter().map(|i| parts[i].clone()).collect());
        Ok(SilDerivation::node(RuleKind::Cons, kept, r.clone(), q, vec![node]))
    }
}
