//! U-Turn: replaying an IL derivation backward with SIL, and the dual TurnU
//! replaying a SIL derivation forward with IL.
//!
//! Both directions share one node type. A replay node points at the guide
//! node it follows by its path in the guide tree.

use std::fmt;

use crate::assertions::{retag, sp_atom, substitute, Assertion, Evaluator};
use crate::error::{Error, Result};
use crate::il::{check_il_derivation, il_counterexample};
use crate::lang::{ACmd, RCmd};
use crate::proof::{Checker, Derivation, IlDerivation, Logic, RuleKind, SilDerivation, Triple};
use crate::sil::{check_sil_derivation, sil_counterexample};
use crate::state::{Flag, Universe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReplayRule {
    Assign,
    Nondet,
    Assume,
    Skip,
    Error,
    ErId,
    Empty,
    Disj,
    Seq,
    ChoiceL,
    ChoiceR,
    Iter0,
    Unroll,
    ConsIL,
    ConsSIL,
}

impl ReplayRule {
    pub const ALL: [ReplayRule; 15] = [
        ReplayRule::Assign,
        ReplayRule::Nondet,
        ReplayRule::Assume,
        ReplayRule::Skip,
        ReplayRule::Error,
        ReplayRule::ErId,
        ReplayRule::Empty,
        ReplayRule::Disj,
        ReplayRule::Seq,
        ReplayRule::ChoiceL,
        ReplayRule::ChoiceR,
        ReplayRule::Iter0,
        ReplayRule::Unroll,
        ReplayRule::ConsIL,
        ReplayRule::ConsSIL,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            ReplayRule::Assign => "Assign",
            ReplayRule::Nondet => "Nondet",
            ReplayRule::Assume => "Assume",
            ReplayRule::Skip => "Skip",
            ReplayRule::Error => "Error",
            ReplayRule::ErId => "ErId",
            ReplayRule::Empty => "Empty",
            ReplayRule::Disj => "Disj",
            ReplayRule::Seq => "Seq",
            ReplayRule::ChoiceL => "ChoiceL",
            ReplayRule::ChoiceR => "ChoiceR",
            ReplayRule::Iter0 => "Iter0",
            ReplayRule::Unroll => "Unroll",
            ReplayRule::ConsIL => "ConsIL",
            ReplayRule::ConsSIL => "ConsSIL",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            ReplayRule::Disj | ReplayRule::Seq => 2,
            ReplayRule::ChoiceL
            | ReplayRule::ChoiceR
            | ReplayRule::Unroll
            | ReplayRule::ConsIL
            | ReplayRule::ConsSIL => 1,
            _ => 0,
        }
    }
}

/// Which guide the replay follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Guide is IL, replay is SIL.
    UTurn,
    /// Guide is SIL, replay is IL.
    TurnU,
}

impl Direction {
    pub fn prefix(self) -> &'static str {
        match self {
            Direction::UTurn => "U",
            Direction::TurnU => "T",
        }
    }

    pub fn rule_name(self, r: ReplayRule) -> String {
        format!("{}{}", self.prefix(), r.suffix())
    }

    pub fn parse_rule(self, name: &str) -> Option<ReplayRule> {
        let rest = name.strip_prefix(self.prefix())?;
        ReplayRule::ALL.into_iter().find(|r| r.suffix() == rest)
    }

    /// The consequence rule that replays the guide's own consequence step.
    fn guide_cons(self) -> ReplayRule {
        match self {
            Direction::UTurn => ReplayRule::ConsIL,
            Direction::TurnU => ReplayRule::ConsSIL,
        }
    }

    /// The replay logic's own consequence rule, which keeps the guide node.
    fn own_cons(self) -> ReplayRule {
        match self {
            Direction::UTurn => ReplayRule::ConsSIL,
            Direction::TurnU => ReplayRule::ConsIL,
        }
    }
}

/// The replay rule that follows a guide rule.
fn replay_of(k: RuleKind, dir: Direction) -> ReplayRule {
    match k {
        RuleKind::Assign => ReplayRule::Assign,
        RuleKind::Assume => ReplayRule::Assume,
        RuleKind::Nondet => ReplayRule::Nondet,
        RuleKind::Skip => ReplayRule::Skip,
        RuleKind::Error => ReplayRule::Error,
        RuleKind::ErId => ReplayRule::ErId,
        RuleKind::Disj => ReplayRule::Disj,
        RuleKind::Cons => dir.guide_cons(),
        RuleKind::Seq => ReplayRule::Seq,
        RuleKind::ChoiceL => ReplayRule::ChoiceL,
        RuleKind::ChoiceR => ReplayRule::ChoiceR,
        RuleKind::Iter0 => ReplayRule::Iter0,
        RuleKind::Unroll => ReplayRule::Unroll,
        RuleKind::Empty => ReplayRule::Empty,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayNode {
    pub rule: ReplayRule,
    /// Path of the replayed node in the guide derivation.
    pub guide: Vec<usize>,
    pub triple: Triple,
    pub children: Vec<ReplayNode>,
}

impl ReplayNode {
    pub fn pre(&self) -> &Assertion {
        &self.triple.pre
    }

    pub fn post(&self) -> &Assertion {
        &self.triple.post
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Self::size).sum::<usize>()
    }

    pub fn rules(&self) -> Vec<ReplayRule> {
        let mut out = vec![self.rule];
        for c in &self.children {
            out.extend(c.rules());
        }
        out
    }

    pub fn at(&self, path: &[usize]) -> Option<&Self> {
        path.iter().try_fold(self, |d, &i| d.children.get(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Self> {
        path.iter().try_fold(self, |d, &i| d.children.get_mut(i))
    }
}

/// A U-Turn proof: the IL derivation and its SIL replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UTurnDerivation {
    pub il: IlDerivation,
    pub root: ReplayNode,
}

/// A TurnU proof: the SIL derivation and its IL replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurnUDerivation {
    pub sil: SilDerivation,
    pub root: ReplayNode,
}

/// `guide` is the root triple of the guiding derivation, `replay` the triple
/// derived alongside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub guide: Triple,
    pub replay: Triple,
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] [{}] {} <{}> <{}>",
            self.guide.pre, self.replay.pre, self.replay.cmd, self.replay.post, self.guide.post
        )
    }
}

/// Outcome of the four validity conditions, numbered 1 to 4.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validity {
    pub failures: Vec<(u8, String)>,
}

impl Validity {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, condition: u8) -> bool {
        self.failures.iter().any(|(c, _)| *c == condition)
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds() {
            return write!(f, "valid");
        }
        for (i, (c, msg)) in self.failures.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "condition {c} fails: {msg}")?;
        }
        Ok(())
    }
}

/// U-Turn judgment validity: the replay is SIL-valid, its pre and post sit
/// inside the IL pre and post, and they are empty together.
pub fn check_judgment_validity(j: &Judgment, u: &Universe) -> Result<Validity> {
    validity(j, u, Direction::UTurn)
}

/// The dual conditions for TurnU, with IL validity of the replay.
pub fn check_turnu_validity(j: &Judgment, u: &Universe) -> Result<Validity> {
    validity(j, u, Direction::TurnU)
}

fn validity(j: &Judgment, u: &Universe, dir: Direction) -> Result<Validity> {
    let ev = Evaluator::new(u);
    let mut failures = Vec::new();
    let show = |s: crate::state::FlaggedState| u.show(&s);
    let first = match dir {
        Direction::UTurn => sil_counterexample(&j.replay, u)?.map(|s| format!("{} has no run into the post", show(s))),
        Direction::TurnU => il_counterexample(&j.replay, u)?.map(|s| format!("{} is not reachable", show(s))),
    };
    if let Some(m) = first {
        failures.push((1, m));
    }
    if let Some(s) = ev.implies_witness(&j.replay.pre, &j.guide.pre)? {
        failures.push((2, format!("{} is outside the guide pre", show(s))));
    }
    if let Some(s) = ev.implies_witness(&j.replay.post, &j.guide.post)? {
        failures.push((3, format!("{} is outside the guide post", show(s))));
    }
    let (pe, qe) = (ev.is_empty(&j.replay.pre)?, ev.is_empty(&j.replay.post)?);
    if pe != qe {
        let which = if pe { "pre is empty but post is not" } else { "post is empty but pre is not" };
        failures.push((4, which.to_string()));
    }
    Ok(Validity { failures })
}

/// Runs the UTurn algorithm: given the IL derivation `d` and a nonempty
/// `qp ⟹ post(d)`, returns the SIL pre found and the replay proof.
pub fn run_uturn(d: &IlDerivation, qp: &Assertion, u: &Universe) -> Result<(Assertion, UTurnDerivation)> {
    let root = run(d, qp, u, Direction::UTurn)?;
    Ok((root.pre().clone(), UTurnDerivation { il: d.clone(), root }))
}

/// Runs the TurnU algorithm: given the SIL derivation `d` and a nonempty
/// `pp ⟹ pre(d)`, returns the IL post found and the replay proof.
pub fn run_turnu(d: &SilDerivation, pp: &Assertion, u: &Universe) -> Result<(Assertion, TurnUDerivation)> {
    let root = run(d, pp, u, Direction::TurnU)?;
    Ok((root.post().clone(), TurnUDerivation { sil: d.clone(), root }))
}

fn run<L: Logic>(d: &Derivation<L>, start: &Assertion, u: &Universe, dir: Direction) -> Result<ReplayNode> {
    u.check_vars(&crate::lang::free_vars(d.cmd()))?;
    u.check_vars(&start.free_vars())?;
    let ev = Evaluator::new(u);
    let bound = match dir {
        Direction::UTurn => d.post(),
        Direction::TurnU => d.pre(),
    };
    if ev.is_empty(start)? {
        return Err(Error::Precondition(format!("`{start}` is empty")));
    }
    if let Some(s) = ev.implies_witness(start, bound)? {
        return Err(Error::Precondition(format!(
            "`{start}` does not imply `{bound}`: {} holds only on the left",
            u.show(&s)
        )));
    }
    let mut path = Vec::new();
    Replayer { ev, dir }.go(d, start.clone(), &mut path)
}

struct Replayer<'u> {
    ev: Evaluator<'u>,
    dir: Direction,
}

impl Replayer<'_> {
    /// Replays `d` from `given`, the SIL post for U-Turn or the IL pre for
    /// TurnU, and returns the node whose other end is computed.
    fn go<L: Logic>(&self, d: &Derivation<L>, given: Assertion, path: &mut Vec<usize>) -> Result<ReplayNode> {
        let cmd = d.cmd().clone();
        let rule = replay_of(d.rule, self.dir);
        let mk = |given: Assertion, other: Assertion, children: Vec<ReplayNode>, path: &[usize]| {
            let triple = match self.dir {
                Direction::UTurn => Triple::new(other, cmd.clone(), given),
                Direction::TurnU => Triple::new(given, cmd.clone(), other),
            };
            ReplayNode {
                rule,
                guide: path.to_vec(),
                triple,
                children,
            }
        };
        match d.rule {
            RuleKind::Assign | RuleKind::Assume | RuleKind::Nondet | RuleKind::Skip | RuleKind::Error => {
                let RCmd::Atom(c) = d.cmd() else {
                    unreachable!("checked guide")
                };
                let other = atom_replay(self.dir, c, &d.triple, &given);
                Ok(mk(given, other, Vec::new(), path))
            }
            RuleKind::ErId | RuleKind::Iter0 => Ok(mk(given.clone(), given, Vec::new(), path)),
            RuleKind::Empty => Ok(mk(Assertion::ff(), Assertion::ff(), Vec::new(), path)),
            RuleKind::ChoiceL | RuleKind::ChoiceR | RuleKind::Unroll | RuleKind::Cons => {
                path.push(0);
                let k = self.go(&d.children[0], given.clone(), path)?;
                path.pop();
                let other = self.far_end(&k).clone();
                Ok(mk(given, other, vec![k], path))
            }
            RuleKind::Seq => {
                let (first, second) = match self.dir {
                    Direction::UTurn => (1, 0),
                    Direction::TurnU => (0, 1),
                };
                path.push(first);
                let k1 = self.go(&d.children[first], given.clone(), path)?;
                path.pop();
                path.push(second);
                let k2 = self.go(&d.children[second], self.far_end(&k1).clone(), path)?;
                path.pop();
                let other = self.far_end(&k2).clone();
                let kids = if first == 0 { vec![k1, k2] } else { vec![k2, k1] };
                Ok(mk(given, other, kids, path))
            }
            RuleKind::Disj => {
                let mut kids = Vec::new();
                let mut others = Vec::new();
                for (i, k) in d.children.iter().enumerate() {
                    let near = match self.dir {
                        Direction::UTurn => k.post(),
                        Direction::TurnU => k.pre(),
                    };
                    let part = Assertion::and(given.clone(), near.clone());
                    path.push(i);
                    let node = if self.ev.is_empty(&part)? {
                        ReplayNode {
                            rule: ReplayRule::Empty,
                            guide: path.clone(),
                            triple: Triple::new(Assertion::ff(), k.cmd().clone(), Assertion::ff()),
                            children: Vec::new(),
                        }
                    } else {
                        self.go(k, part, path)?
                    };
                    path.pop();
                    others.push(self.far_end(&node).clone());
                    kids.push(node);
                }
                let other = Assertion::or_all(others);
                Ok(mk(given, other, kids, path))
            }
        }
    }

    /// The end of `n` that the replay computes.
    fn far_end<'n>(&self, n: &'n ReplayNode) -> &'n Assertion {
        match self.dir {
            Direction::UTurn => n.pre(),
            Direction::TurnU => n.post(),
        }
    }
}

/// The computed end of an atomic replay step. `guide` is the guide node's
/// triple and `given` the known end of the replay.
fn atom_replay(dir: Direction, c: &ACmd, guide: &Triple, given: &Assertion) -> Assertion {
    match (dir, c) {
        (_, ACmd::Skip | ACmd::Assume(_)) => given.clone(),
        (Direction::UTurn, ACmd::Assign(x, a)) => Assertion::and(guide.pre.clone(), substitute(given, a, x)),
        (Direction::UTurn, ACmd::Nondet(x)) => Assertion::and(guide.pre.clone(), Assertion::exists(x, given.clone())),
        (Direction::UTurn, ACmd::Error) => retag(given, Flag::Er, Flag::Ok),
        (Direction::TurnU, ACmd::Assign(..)) => Assertion::and(guide.post.clone(), sp_atom(c, given)),
        (Direction::TurnU, ACmd::Nondet(x)) => Assertion::and(guide.post.clone(), Assertion::exists(x, given.clone())),
        (Direction::TurnU, ACmd::Error) => retag(given, Flag::Ok, Flag::Er),
    }
}

/// Checks the IL derivation and every U-Turn rule instance, returning the
/// root judgment.
pub fn check_uturn_derivation(ud: &UTurnDerivation, u: &Universe) -> Result<Judgment> {
    let guide = check_il_derivation(&ud.il, u)?;
    check_replay(&ud.il, &ud.root, u, Direction::UTurn)?;
    Ok(Judgment {
        guide,
        replay: ud.root.triple.clone(),
    })
}

/// Checks the SIL derivation and every TurnU rule instance.
pub fn check_turnu_derivation(td: &TurnUDerivation, u: &Universe) -> Result<Judgment> {
    let guide = check_sil_derivation(&td.sil, u)?;
    check_replay(&td.sil, &td.root, u, Direction::TurnU)?;
    Ok(Judgment {
        guide,
        replay: td.root.triple.clone(),
    })
}

fn check_replay<L: Logic>(guide: &Derivation<L>, root: &ReplayNode, u: &Universe, dir: Direction) -> Result<()> {
    let ev = Evaluator::new(u);
    let mut path = Vec::new();
    check_replay_node(&ev, guide, root, &mut path, dir)
}

fn check_replay_node<L: Logic>(
    ev: &Evaluator,
    guide: &Derivation<L>,
    n: &ReplayNode,
    path: &mut Vec<usize>,
    dir: Direction,
) -> Result<()> {
    let ck = Checker {
        ev,
        path,
        rule: dir.rule_name(n.rule),
    };
    let Some(m) = guide.at(&n.guide) else {
        return ck.fail(format!("guide reference {:?} does not exist", n.guide));
    };
    ev.universe().check_vars(&crate::lang::free_vars(&n.triple.cmd))?;
    let arity = n.rule.arity();
    ck.ensure(n.children.len() == arity, || {
        format!("expected {arity} premises, found {}", n.children.len())
    })?;
    ck.same_cmd(&n.triple.cmd, m.cmd(), "command")?;
    let matches = match n.rule {
        ReplayRule::Empty => true,
        r if r == dir.own_cons() => true,
        r => replay_of(m.rule, dir) == r,
    };
    ck.ensure(matches, || {
        format!("replays {} at {:?}", m.rule_name(), n.guide)
    })?;
    let child_refs_ok = n.children.iter().enumerate().all(|(i, k)| {
        if n.rule == dir.own_cons() {
            k.guide == n.guide
        } else {
            k.guide.len() == n.guide.len() + 1 && k.guide.starts_with(&n.guide) && k.guide[n.guide.len()] == i
        }
    });
    ck.ensure(child_refs_ok, || "premise guide references do not follow the guide tree".into())?;

    let Triple { pre, cmd, post } = &n.triple;
    // `given` is the end the replay starts from, `other` the end it computes.
    let (given, other, bound) = match dir {
        Direction::UTurn => (post, pre, m.post()),
        Direction::TurnU => (pre, post, m.pre()),
    };
    let kids = &n.children;
    match n.rule {
        ReplayRule::Assign | ReplayRule::Nondet | ReplayRule::Assume | ReplayRule::Skip | ReplayRule::Error => {
            let RCmd::Atom(c) = cmd else {
                return ck.fail(format!("command `{cmd}` is not atomic"));
            };
            ck.implies(given, bound, "replay end implies guide end")?;
            ck.equiv(other, &atom_replay(dir, c, &m.triple, given), "computed end")?;
        }
        ReplayRule::ErId | ReplayRule::Iter0 => {
            ck.implies(given, bound, "replay end implies guide end")?;
            ck.equiv(other, given, "pre = post")?;
        }
        ReplayRule::Empty => {
            ck.empty(pre, "pre")?;
            ck.empty(post, "post")?;
        }
        ReplayRule::Disj => {
            ck.equiv(pre, &Assertion::or(kids[0].pre().clone(), kids[1].pre().clone()), "pre = P1' or P2'")?;
            ck.equiv(post, &Assertion::or(kids[0].post().clone(), kids[1].post().clone()), "post = Q1' or Q2'")?;
        }
        ReplayRule::Seq => {
            ck.equiv(kids[0].pre(), pre, "first premise pre = pre")?;
            ck.equiv(kids[0].post(), kids[1].pre(), "middle assertions agree")?;
            ck.equiv(kids[1].post(), post, "second premise post = post")?;
        }
        ReplayRule::ChoiceL | ReplayRule::ChoiceR | ReplayRule::Unroll => {
            ck.equiv(kids[0].pre(), pre, "premise pre = pre")?;
            ck.equiv(kids[0].post(), post, "premise post = post")?;
        }
        r if r == dir.guide_cons() => {
            ck.equiv(kids[0].pre(), pre, "premise pre = pre")?;
            ck.equiv(kids[0].post(), post, "premise post = post")?;
            ck.implies(given, bound, "replay end implies guide end")?;
        }
        _ => {
            // The replay logic's own consequence step.
            let k = &kids[0];
            let (k_given, k_other) = match dir {
                Direction::UTurn => (k.post(), k.pre()),
                Direction::TurnU => (k.pre(), k.post()),
            };
            let end = if dir == Direction::UTurn { "pre" } else { "post" };
            ck.ensure(!ev.is_empty(other)?, || format!("{end} must not be false"))?;
            ck.implies(other, k_other, "conclusion end implies premise end")?;
            ck.implies(k_given, given, "premise end implies conclusion end")?;
            ck.implies(given, bound, "replay end implies guide end")?;
        }
    }
    for (i, k) in kids.iter().enumerate() {
        path.push(i);
        check_replay_node(ev, guide, k, path, dir)?;
        path.pop();
    }
    Ok(())
}

/// Two-column listing: guide assertions in square brackets, replay
/// assertions in angle brackets, one line per program point.
pub fn render(guide_pre: &dyn Fn(&[usize]) -> (Assertion, Assertion), root: &ReplayNode) -> String {
    let mut lines = Vec::new();
    linearize(guide_pre, root, &mut lines);
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

fn point(guide: &Assertion, replay: &Assertion) -> String {
    format!("[{guide}]  <{replay}>")
}

fn linearize(guide: &dyn Fn(&[usize]) -> (Assertion, Assertion), n: &ReplayNode, out: &mut Vec<String>) {
    if n.rule == ReplayRule::Seq {
        linearize(guide, &n.children[0], out);
        out.pop();
        linearize(guide, &n.children[1], out);
        return;
    }
    let (gp, gq) = guide(&n.guide);
    out.push(point(&gp, n.pre()));
    out.push(format!("    {}", n.triple.cmd));
    out.push(point(&gq, n.post()));
}

impl UTurnDerivation {
    pub fn render(&self) -> String {
        render(&|p| guide_ends(&self.il, p), &self.root)
    }
}

impl TurnUDerivation {
    pub fn render(&self) -> String {
        render(&|p| guide_ends(&self.sil, p), &self.root)
    }
}

fn guide_ends<L: Logic>(d: &Derivation<L>, path: &[usize]) -> (Assertion, Assertion) {
    match d.at(path) {
        Some(m) => (m.pre().clone(), m.post().clone()),
        None => (Assertion::ff(), Assertion::ff()),
    }
}
