//! Derivation trees shared by the IL and SIL proof systems.

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use crate::assertions::{Assertion, Evaluator};
use crate::error::{Error, Result};
use crate::lang::{ACmd, RCmd};
use crate::state::{Flag, StateSet, Universe};

/// A triple `pre / cmd / post`; whether it is read as IL or SIL depends on
/// the proof system it appears in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub pre: Assertion,
    pub cmd: RCmd,
    pub post: Assertion,
}

impl Triple {
    pub fn new(pre: Assertion, cmd: RCmd, post: Assertion) -> Self {
        Triple { pre, cmd, post }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> {} <{}>", self.pre, self.cmd, self.post)
    }
}

/// Rule shapes common to both proof systems. IL and SIL share every
/// structural rule; only the axioms and the consequence rule differ in their
/// side conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Assign,
    Assume,
    Nondet,
    Skip,
    Error,
    ErId,
    Disj,
    Cons,
    Seq,
    ChoiceL,
    ChoiceR,
    Iter0,
    Unroll,
    Empty,
}

impl RuleKind {
    pub const ALL: [RuleKind; 14] = [
        RuleKind::Assign,
        RuleKind::Assume,
        RuleKind::Nondet,
        RuleKind::Skip,
        RuleKind::Error,
        RuleKind::ErId,
        RuleKind::Disj,
        RuleKind::Cons,
        RuleKind::Seq,
        RuleKind::ChoiceL,
        RuleKind::ChoiceR,
        RuleKind::Iter0,
        RuleKind::Unroll,
        RuleKind::Empty,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            RuleKind::Assign => "Assign",
            RuleKind::Assume => "Assume",
            RuleKind::Nondet => "Nondet",
            RuleKind::Skip => "Skip",
            RuleKind::Error => "Error",
            RuleKind::ErId => "ErId",
            RuleKind::Disj => "Disj",
            RuleKind::Cons => "Cons",
            RuleKind::Seq => "Seq",
            RuleKind::ChoiceL => "ChoiceL",
            RuleKind::ChoiceR => "ChoiceR",
            RuleKind::Iter0 => "Iter0",
            RuleKind::Unroll => "Unroll",
            RuleKind::Empty => "Empty",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            RuleKind::Disj | RuleKind::Seq => 2,
            RuleKind::Cons | RuleKind::ChoiceL | RuleKind::ChoiceR | RuleKind::Unroll => 1,
            _ => 0,
        }
    }

    /// The axiom for an atomic command.
    pub fn for_atom(c: &ACmd) -> RuleKind {
        match c {
            ACmd::Skip => RuleKind::Skip,
            ACmd::Assign(..) => RuleKind::Assign,
            ACmd::Assume(_) => RuleKind::Assume,
            ACmd::Nondet(_) => RuleKind::Nondet,
            ACmd::Error => RuleKind::Error,
        }
    }
}

/// Marker for a proof system.
pub trait Logic: Copy + fmt::Debug + Default + PartialEq + Eq + 'static {
    const PREFIX: &'static str;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Il;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sil;

impl Logic for Il {
    const PREFIX: &'static str = "IL";
}

impl Logic for Sil {
    const PREFIX: &'static str = "SIL";
}

pub fn rule_name<L: Logic>(k: RuleKind) -> String {
    format!("{}{}", L::PREFIX, k.suffix())
}

pub fn parse_rule<L: Logic>(name: &str) -> Option<RuleKind> {
    let rest = name.strip_prefix(L::PREFIX)?;
    RuleKind::ALL.into_iter().find(|k| k.suffix() == rest)
}

/// A proof tree: each node concludes its triple from its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation<L> {
    pub rule: RuleKind,
    pub triple: Triple,
    pub children: Vec<Derivation<L>>,
    logic: PhantomData<L>,
}

pub type IlDerivation = Derivation<Il>;
pub type SilDerivation = Derivation<Sil>;

impl<L: Logic> Derivation<L> {
    pub fn new(rule: RuleKind, triple: Triple, children: Vec<Derivation<L>>) -> Self {
        Derivation {
            rule,
            triple,
            children,
            logic: PhantomData,
        }
    }

    pub fn leaf(rule: RuleKind, pre: Assertion, cmd: RCmd, post: Assertion) -> Self {
        Self::new(rule, Triple::new(pre, cmd, post), Vec::new())
    }

    pub fn node(rule: RuleKind, pre: Assertion, cmd: RCmd, post: Assertion, children: Vec<Derivation<L>>) -> Self {
        Self::new(rule, Triple::new(pre, cmd, post), children)
    }

    pub fn rule_name(&self) -> String {
        rule_name::<L>(self.rule)
    }

    pub fn pre(&self) -> &Assertion {
        &self.triple.pre
    }

    pub fn post(&self) -> &Assertion {
        &self.triple.post
    }

    pub fn cmd(&self) -> &RCmd {
        &self.triple.cmd
    }

    /// The node at `path` (child indices from the root).
    pub fn at(&self, path: &[usize]) -> Option<&Self> {
        path.iter().try_fold(self, |d, &i| d.children.get(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Self> {
        path.iter().try_fold(self, |d, &i| d.children.get_mut(i))
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Self::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Self::depth).max().unwrap_or(0)
    }

    /// Rules in preorder.
    pub fn rules(&self) -> Vec<RuleKind> {
        let mut out = Vec::new();
        self.visit(&mut |d, _| out.push(d.rule));
        out
    }

    /// Preorder walk with node paths.
    pub fn visit(&self, f: &mut impl FnMut(&Self, &[usize])) {
        fn go<L: Logic>(d: &Derivation<L>, path: &mut Vec<usize>, f: &mut impl FnMut(&Derivation<L>, &[usize])) {
            f(d, path);
            for (i, c) in d.children.iter().enumerate() {
                path.push(i);
                go(c, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f);
    }
}

/// How the forward and backward engines treat `r1 + r2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPolicy {
    /// Analyse both branches and join them with the disjunction rule.
    Both,
    Left,
    Right,
    /// Pick one branch per choice with a seeded generator.
    Random(u64),
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(BranchPolicy::Both),
            "left" => Ok(BranchPolicy::Left),
            "right" => Ok(BranchPolicy::Right),
            "random" => Ok(BranchPolicy::Random(0)),
            _ => match s.strip_prefix("random:").map(str::parse) {
                Some(Ok(seed)) => Ok(BranchPolicy::Random(seed)),
                _ => Err(Error::Config(format!("unknown branch policy `{s}`"))),
            },
        }
    }
}

/// Which disjuncts survive when an assertion exceeds `max_disjuncts`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropPolicy {
    /// Disjuncts holding error states first, then by extension size.
    ErrorsThenLargest,
    KeepFirst,
}

pub const MAX_UNROLL_LIMIT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heuristics {
    pub max_unroll: usize,
    pub branch_policy: BranchPolicy,
    pub max_disjuncts: usize,
    pub drop_policy: DropPolicy,
}

impl Default for Heuristics {
    fn default() -> Self {
        Heuristics {
            max_unroll: 10,
            branch_policy: BranchPolicy::Both,
            max_disjuncts: 16,
            drop_policy: DropPolicy::ErrorsThenLargest,
        }
    }
}

impl Heuristics {
    pub fn validate(&self) -> Result<()> {
        if self.max_unroll > MAX_UNROLL_LIMIT {
            return Err(Error::Config(format!(
                "max_unroll {} exceeds the limit {MAX_UNROLL_LIMIT}",
                self.max_unroll
            )));
        }
        if self.max_disjuncts == 0 {
            return Err(Error::Config("max_disjuncts must be positive".into()));
        }
        Ok(())
    }
}

/// Indices of the disjuncts kept under the cap, in their original order.
/// Empty disjuncts and repeats of an earlier extension are always dropped.
pub(crate) fn select_disjuncts(exts: &[StateSet], h: &Heuristics) -> Vec<usize> {
    let mut live: Vec<usize> = Vec::new();
    for (i, e) in exts.iter().enumerate() {
        if !e.is_empty() && !live.iter().any(|&j| exts[j] == *e) {
            live.push(i);
        }
    }
    if live.len() > h.max_disjuncts {
        if h.drop_policy == DropPolicy::ErrorsThenLargest {
            live.sort_by_key(|&i| (!exts[i].has_flag(Flag::Er), std::cmp::Reverse(exts[i].len()), i));
        }
        live.truncate(h.max_disjuncts);
        live.sort_unstable();
    }
    live
}

/// Side-condition helpers that report the first offending state.
pub(crate) struct Checker<'e, 'u> {
    pub ev: &'e Evaluator<'u>,
    pub path: &'e [usize],
    pub rule: String,
}

impl Checker<'_, '_> {
    pub fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::check(self.path, self.rule.clone(), msg))
    }

    pub fn ensure(&self, cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
        if cond {
            Ok(())
        } else {
            self.fail(msg())
        }
    }

    pub fn implies(&self, p: &Assertion, q: &Assertion, what: &str) -> Result<()> {
        match self.ev.implies_witness(p, q)? {
            None => Ok(()),
            Some(s) => self.fail(format!("{what} fails at {}", self.ev.universe().show(&s))),
        }
    }

    pub fn equiv(&self, p: &Assertion, q: &Assertion, what: &str) -> Result<()> {
        let (ep, eq) = (self.ev.extension(p)?, self.ev.extension(q)?);
        if ep == eq {
            return Ok(());
        }
        let u = self.ev.universe();
        let (side, s) = match ep.first_outside(&eq) {
            Some(s) => ("only on the left", s),
            None => ("only on the right", eq.first_outside(&ep).expect("sets differ")),
        };
        self.fail(format!("{what} fails: {} holds {side}", u.show(&u.state(s))))
    }

    pub fn within(&self, p: &Assertion, flag: Flag, what: &str) -> Result<()> {
        let u = self.ev.universe();
        match self.ev.extension(p)?.iter().find(|&i| u.state(i).flag != flag) {
            None => Ok(()),
            Some(i) => self.fail(format!("{what} must hold only {flag} states, has {}", u.show(&u.state(i)))),
        }
    }

    pub fn empty(&self, p: &Assertion, what: &str) -> Result<()> {
        let first = self.ev.extension(p)?.iter().next();
        match first {
            None => Ok(()),
            Some(i) => {
                let u = self.ev.universe();
                self.fail(format!("{what} must be false, holds at {}", u.show(&u.state(i))))
            }
        }
    }

    pub fn same_cmd(&self, got: &RCmd, want: &RCmd, what: &str) -> Result<()> {
        self.ensure(got == want, || format!("{what} is `{got}`, expected `{want}`"))
    }
}

/// Checks every node of `d`. Structural rules are shared; `local` handles the
/// atomic axioms and the consequence rule, whose side conditions differ
/// between the two logics.
pub(crate) fn check_tree<L: Logic>(
    d: &Derivation<L>,
    u: &Universe,
    local: &dyn Fn(&Checker, &Derivation<L>) -> Result<()>,
) -> Result<Triple> {
    let ev = Evaluator::new(u);
    let mut first = Ok(());
    d.visit(&mut |node, path| {
        if first.is_ok() {
            let ck = Checker {
                ev: &ev,
                path,
                rule: node.rule_name(),
            };
            first = check_node(&ck, node, local);
        }
    });
    first.map(|_| d.triple.clone())
}

fn check_node<L: Logic>(
    ck: &Checker,
    d: &Derivation<L>,
    local: &dyn Fn(&Checker, &Derivation<L>) -> Result<()>,
) -> Result<()> {
    ck.ev.universe().check_vars(&crate::lang::free_vars(d.cmd()))?;
    let arity = d.rule.arity();
    ck.ensure(d.children.len() == arity, || {
        format!("expected {arity} premises, found {}", d.children.len())
    })?;
    let Triple { pre, cmd, post } = &d.triple;
    let kids = &d.children;
    match d.rule {
        RuleKind::Assign | RuleKind::Assume | RuleKind::Nondet | RuleKind::Skip | RuleKind::Error => {
            let want = match cmd {
                RCmd::Atom(c) => RuleKind::for_atom(c),
                _ => return ck.fail(format!("command `{cmd}` is not atomic")),
            };
            ck.ensure(want == d.rule, || format!("command `{cmd}` needs rule {}", rule_name::<L>(want)))?;
            local(ck, d)
        }
        RuleKind::Cons => {
            ck.same_cmd(kids[0].cmd(), cmd, "premise command")?;
            local(ck, d)
        }
        RuleKind::ErId => {
            ck.within(pre, Flag::Er, "pre")?;
            ck.equiv(post, pre, "post = pre")
        }
        RuleKind::Empty => {
            ck.empty(pre, "pre")?;
            ck.empty(post, "post")
        }
        RuleKind::Disj => {
            for k in kids {
                ck.same_cmd(k.cmd(), cmd, "premise command")?;
            }
            ck.equiv(pre, &Assertion::or(kids[0].pre().clone(), kids[1].pre().clone()), "pre = P1 or P2")?;
            ck.equiv(post, &Assertion::or(kids[0].post().clone(), kids[1].post().clone()), "post = Q1 or Q2")
        }
        RuleKind::Seq => {
            let RCmd::Seq(r1, r2) = cmd else {
                return ck.fail(format!("command `{cmd}` is not a sequence"));
            };
            ck.same_cmd(kids[0].cmd(), r1, "first premise command")?;
            ck.same_cmd(kids[1].cmd(), r2, "second premise command")?;
            ck.equiv(kids[0].pre(), pre, "first premise pre = pre")?;
            ck.equiv(kids[0].post(), kids[1].pre(), "middle assertions agree")?;
            ck.equiv(kids[1].post(), post, "second premise post = post")
        }
        RuleKind::ChoiceL | RuleKind::ChoiceR => {
            let RCmd::Choice(r1, r2) = cmd else {
                return ck.fail(format!("command `{cmd}` is not a choice"));
            };
            let branch = if d.rule == RuleKind::ChoiceL { r1 } else { r2 };
            ck.same_cmd(kids[0].cmd(), branch, "premise command")?;
            ck.equiv(kids[0].pre(), pre, "premise pre = pre")?;
            ck.equiv(kids[0].post(), post, "premise post = post")
        }
        RuleKind::Iter0 => {
            ck.ensure(matches!(cmd, RCmd::Star(_)), || format!("command `{cmd}` is not an iteration"))?;
            ck.equiv(post, pre, "post = pre")
        }
        RuleKind::Unroll => {
            let RCmd::Star(body) = cmd else {
                return ck.fail(format!("command `{cmd}` is not an iteration"));
            };
            let unrolled = RCmd::seq(cmd.clone(), (**body).clone());
            ck.same_cmd(kids[0].cmd(), &unrolled, "premise command")?;
            ck.equiv(kids[0].pre(), pre, "premise pre = pre")?;
            ck.equiv(kids[0].post(), post, "premise post = post")
        }
    }
}
