mod common;

use common::sets::{empty as oracle_empty, ext, il_valid as oracle_il_valid, sil_valid as oracle_sil_valid, subset as oracle_subset};
use common::universe;
use proptest::prelude::*;
use rand::Rng;
use uturn::assertions::{equivalent, extension, Assertion};
use uturn::gen::{random_assertion, random_rcmd, random_subset, ProgramShape};
use uturn::il::{check_il_derivation, synthesize_forward};
use uturn::lang::{parse_assertion, parse_command, parse_program, RCmd};
use uturn::proof::{BranchPolicy, Heuristics, IlDerivation, RuleKind, Triple};
use uturn::sil::{check_sil_derivation, synthesize_backward};
use uturn::state::{Flag, StateSet, Universe};
use uturn::uturn::*;
use uturn::Error;

fn a(text: &str, u: &Universe) -> Assertion {
    parse_assertion(text, u.vars()).unwrap()
}

fn c(text: &str, u: &Universe) -> RCmd {
    parse_command(text, u.vars()).unwrap()
}

fn small() -> Heuristics {
    Heuristics {
        max_unroll: 3,
        max_disjuncts: 8,
        ..Heuristics::default()
    }
}

const LOOP_TO_ERROR: &str = "vars x; x := 10; while (x > 0) { x := x - 1 }; error()";

/// Integer stand-in for the opaque-call example: the error fires only on
/// the branch taken when both `b` and `x` are nonzero.
const FOO: &str = "vars b x p;
x := nondet();
if (b != 0 and x != 0) { p := 0 } else { p := 1 };
if (p = 0) { error() } else { skip }";

/// The four judgment conditions, checked with the test oracle.
fn oracle_judgment(j: &Judgment, u: &Universe, replay_is_sil: bool) -> [bool; 4] {
    let r = &j.replay;
    let first = if replay_is_sil {
        oracle_sil_valid(&r.pre, &r.cmd, &r.post, u)
    } else {
        oracle_il_valid(&r.pre, &r.cmd, &r.post, u)
    };
    [
        first,
        oracle_subset(&r.pre, &j.guide.pre, u),
        oracle_subset(&r.post, &j.guide.post, u),
        oracle_empty(&r.pre, u) == oracle_empty(&r.post, u),
    ]
}

fn loop_to_error() -> (Universe, IlDerivation) {
    let p = parse_program(LOOP_TO_ERROR).unwrap();
    let u = Universe::new(32, p.vars.clone()).unwrap();
    let d = synthesize_forward(&a("ok: true", &u), &p.body, &Heuristics::default(), &u).unwrap();
    (u, d)
}

#[test]
fn loop_to_error_replay() {
    let (u, d) = loop_to_error();
    let qp = a("er: x = 0", &u);
    let (pp, ud) = run_uturn(&d, &qp, &u).unwrap();
    assert_eq!(extension(&pp, &u).unwrap(), StateSet::flag_part(&u, Flag::Ok), "{pp}");
    let j = check_uturn_derivation(&ud, &u).unwrap();
    assert_eq!(j.replay, Triple::new(pp, d.cmd().clone(), qp));
    assert!(check_judgment_validity(&j, &u).unwrap().holds());
    assert_eq!(oracle_judgment(&j, &u, true), [true; 4]);
    // the replay unrolls the loop exactly as often as the forward pass did
    let count = |rules: Vec<String>, name: &str| rules.iter().filter(|r| r.as_str() == name).count();
    let il_unrolls = count(d.rules().iter().map(|k| format!("IL{}", k.suffix())).collect(), "ILUnroll");
    let u_unrolls = count(ud.root.rules().iter().map(|k| Direction::UTurn.rule_name(*k)).collect(), "UUnroll");
    assert_eq!(il_unrolls, 10);
    assert_eq!(u_unrolls, 10);
}

#[test]
fn empty_judgment_is_valid() {
    let (u, d) = loop_to_error();
    let j = Judgment {
        guide: d.triple.clone(),
        replay: Triple::new(Assertion::ff(), d.cmd().clone(), Assertion::ff()),
    };
    assert!(check_judgment_validity(&j, &u).unwrap().holds());
}

#[test]
fn enlarged_pre_fails_condition_two() {
    let u = universe(8, &["x"]);
    let d = synthesize_forward(&a("ok: x = 1", &u), &c("x := x + 1", &u), &Heuristics::default(), &u).unwrap();
    let (_, ud) = run_uturn(&d, d.post(), &u).unwrap();
    let mut j = check_uturn_derivation(&ud, &u).unwrap();
    assert!(check_judgment_validity(&j, &u).unwrap().holds());
    j.replay.pre = a("ok: x = 1 or x = 5", &u);
    let v = check_judgment_validity(&j, &u).unwrap();
    assert!(v.failed(2), "{v}");
    assert!(v.failed(1));
    assert!(!v.failed(3) && !v.failed(4));
    assert!(v.to_string().contains("condition 2"));
}

#[test]
fn assign_replay_of_the_full_post_returns_the_pre() {
    let u = universe(8, &["x", "y"]);
    let p = a("ok: x = y and y < 2", &u);
    let d = synthesize_forward(&p, &c("x := x * 2", &u), &Heuristics::default(), &u).unwrap();
    assert_eq!(d.rule, RuleKind::Assign);
    let (pp, ud) = run_uturn(&d, d.post(), &u).unwrap();
    assert!(equivalent(&pp, &p, &u).unwrap());
    assert_eq!(ud.root.rule, ReplayRule::Assign);
}

#[test]
fn rule_must_match_the_guide() {
    let u = universe(8, &["x"]);
    let h = Heuristics { branch_policy: BranchPolicy::Right, ..Heuristics::default() };
    let d = synthesize_forward(&a("ok: true", &u), &c("choice { x := 1 } or { x := 2 }", &u), &h, &u).unwrap();
    assert_eq!(d.rule, RuleKind::ChoiceR);
    let (_, mut ud) = run_uturn(&d, d.post(), &u).unwrap();
    check_uturn_derivation(&ud, &u).unwrap();
    ud.root.rule = ReplayRule::ChoiceL;
    match check_uturn_derivation(&ud, &u) {
        Err(Error::ProofCheck { path, rule, msg }) => {
            assert!(path.is_empty());
            assert_eq!(rule, "UChoiceL");
            assert!(msg.contains("ILChoiceR"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn branch_guided_replay_skips_the_other_branch() {
    let u = universe(8, &["x"]);
    let r = c("if (x = 0) { error() } else { x := 1 }", &u);
    let d = synthesize_forward(&a("ok: true", &u), &r, &Heuristics::default(), &u).unwrap();
    let (pp, ud) = run_uturn(&d, &a("er: x = 0", &u), &u).unwrap();
    assert!(equivalent(&pp, &a("ok: x = 0", &u), &u).unwrap(), "{pp}");
    let rules = ud.root.rules();
    assert!(rules.contains(&ReplayRule::Empty));
    assert!(!rules.contains(&ReplayRule::ConsSIL));
}

#[test]
fn preconditions_are_enforced() {
    let u = universe(8, &["x"]);
    let d = synthesize_forward(&a("ok: x = 1", &u), &c("x := x + 1", &u), &Heuristics::default(), &u).unwrap();
    assert!(matches!(run_uturn(&d, &a("ok: false", &u), &u), Err(Error::Precondition(_))));
    assert!(matches!(run_uturn(&d, &a("ok: x = 3", &u), &u), Err(Error::Precondition(_))));
}

#[test]
fn cons_sil_side_conditions() {
    let u = universe(8, &["x"]);
    let d = synthesize_forward(&a("ok: x = 1 or x = 2", &u), &c("x := x + 1", &u), &Heuristics::default(), &u).unwrap();
    let (_, ud) = run_uturn(&d, d.post(), &u).unwrap();
    let wrap = |pre: &str, post: &str| {
        let mut root = ud.root.clone();
        root.triple.pre = a(pre, &u);
        root.triple.post = a(post, &u);
        root.rule = ReplayRule::ConsSIL;
        root.children = vec![ud.root.clone()];
        UTurnDerivation { il: ud.il.clone(), root }
    };
    // strengthen the pre and keep the post inside the IL post
    let good = wrap("ok: x = 1", "ok: x = 2 or x = 3");
    let j = check_uturn_derivation(&good, &u).unwrap();
    assert!(check_judgment_validity(&j, &u).unwrap().holds());
    // a false pre is not allowed
    assert!(check_uturn_derivation(&wrap("ok: false", "ok: x = 2"), &u).is_err());
    // the post may not leave the IL post
    assert!(check_uturn_derivation(&wrap("ok: x = 1", "ok: x >= 1"), &u).is_err());
}

#[test]
fn cons_il_is_replayed() {
    let u = universe(8, &["x"]);
    let r = c("choice { choice { x := 1 } or { x := 2 } } or { choice { x := 3 } or { error() } }", &u);
    let h = Heuristics { max_disjuncts: 2, ..Heuristics::default() };
    let d = synthesize_forward(&a("ok: x = 0", &u), &r, &h, &u).unwrap();
    assert!(d.rules().contains(&RuleKind::Cons));
    let (pp, ud) = run_uturn(&d, d.post(), &u).unwrap();
    assert!(ud.root.rules().contains(&ReplayRule::ConsIL));
    let j = check_uturn_derivation(&ud, &u).unwrap();
    assert_eq!(j.replay.pre, pp);
    assert!(check_judgment_validity(&j, &u).unwrap().holds());
}

#[test]
fn foo_backward_then_forward() {
    let p = parse_program(FOO).unwrap();
    let u = Universe::new(8, p.vars.clone()).unwrap();
    let d = synthesize_backward(&p.body, &a("er: true", &u), &Heuristics::default(), &u).unwrap();
    let t = check_sil_derivation(&d, &u).unwrap();
    let ok_pre = Assertion::and(t.pre.clone(), a("ok: true", &u));
    assert!(equivalent(&ok_pre, &a("ok: b != 0", &u), &u).unwrap(), "{}", t.pre);
    let pp = a("ok: b != 0", &u);
    let (qp, td) = run_turnu(&d, &pp, &u).unwrap();
    let j = check_turnu_derivation(&td, &u).unwrap();
    assert_eq!(j.replay, Triple::new(pp, p.body.clone(), qp.clone()));
    assert!(check_turnu_validity(&j, &u).unwrap().holds());
    assert_eq!(oracle_judgment(&j, &u, false), [true; 4]);
    assert!(oracle_sil_valid(&j.replay.pre, &j.replay.cmd, &j.replay.post, &u));
    let facts = a("er: b != 0 and x != 0 and p = 0", &u);
    assert!(uturn::assertions::implies(&qp, &facts, &u).unwrap(), "{qp}");
    assert!(!oracle_empty(&qp, &u));
}

#[test]
fn turnu_through_skip_is_identity() {
    let u = universe(8, &["x"]);
    let q = a("ok: x = 3", &u);
    let d = synthesize_backward(&c("skip", &u), &q, &Heuristics::default(), &u).unwrap();
    let (qp, td) = run_turnu(&d, d.pre(), &u).unwrap();
    assert_eq!(&qp, d.pre());
    assert_eq!(td.root.rule, ReplayRule::Skip);
    assert_eq!(Direction::TurnU.rule_name(td.root.rule), "TSkip");
}

#[test]
fn rendering_shows_both_columns() {
    let (u, d) = loop_to_error();
    let (_, ud) = run_uturn(&d, &a("er: x = 0", &u), &u).unwrap();
    let text = ud.render();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.first().unwrap().starts_with("[ok: true]  <"));
    assert!(lines.last().unwrap().contains("<er: x = 0>"), "{}", lines.last().unwrap());
    assert!(lines.iter().any(|l| l.trim() == "x := 10"));
    assert!(lines.iter().any(|l| l.trim() == "error()"));
}

#[test]
fn rule_names_round_trip() {
    for dir in [Direction::UTurn, Direction::TurnU] {
        for r in ReplayRule::ALL {
            assert_eq!(dir.parse_rule(&dir.rule_name(r)), Some(r));
        }
    }
    assert_eq!(Direction::UTurn.rule_name(ReplayRule::ConsSIL), "UConsSIL");
}

fn shape() -> ProgramShape {
    ProgramShape { max_depth: 4, error_percent: 20 }
}

/// A nonempty random subset of `a`, as an assertion.
fn pick(rng: &mut impl Rng, a: &Assertion, u: &Universe) -> Option<Assertion> {
    let ext = ext(a, u);
    if ext.is_empty() {
        return None;
    }
    let mut s = random_subset(rng, &ext, u);
    if s.is_empty() {
        s = StateSet::singleton(u, ext.iter().next().unwrap());
    }
    Some(Assertion::from_states(&s, u))
}

fn random_guide(seed: u64, u: &Universe) -> (IlDerivation, Option<Assertion>, rand_chacha::ChaCha8Rng) {
    let mut rng = common::rng(seed);
    let r = random_rcmd(&mut rng, u, &shape());
    let p = random_assertion(&mut rng, u);
    let d = synthesize_forward(&p, &r, &small(), u).unwrap();
    let qp = pick(&mut rng, d.post(), u);
    (d, qp, rng)
}

/// Shrinking: every replay node sits inside the IL node it follows.
fn inside_guide(n: &ReplayNode, d: &IlDerivation, u: &Universe) -> bool {
    let m = d.at(&n.guide).unwrap();
    oracle_subset(n.pre(), m.pre(), u)
        && oracle_subset(n.post(), m.post(), u)
        && n.children.iter().all(|k| inside_guide(k, d, u))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn progress_validity_and_fidelity(seed in any::<u64>()) {
        let u = universe(4, &["x", "y"]);
        let (d, qp, _) = random_guide(seed, &u);
        let Some(qp) = qp else { return Ok(()) };
        let (pp, ud) = run_uturn(&d, &qp, &u).unwrap();
        let j = check_uturn_derivation(&ud, &u).unwrap();
        prop_assert_eq!(&j.replay, &Triple::new(pp.clone(), d.cmd().clone(), qp.clone()));
        prop_assert_eq!(&j.guide, &d.triple);
        prop_assert!(check_judgment_validity(&j, &u).unwrap().holds());
        prop_assert_eq!(oracle_judgment(&j, &u, true), [true; 4]);
        prop_assert!(!oracle_empty(&pp, &u));
        prop_assert!(!ud.root.rules().contains(&ReplayRule::ConsSIL));
        prop_assert!(oracle_il_valid(&pp, d.cmd(), &qp, &u));
        prop_assert!(inside_guide(&ud.root, &d, &u));
    }

    #[test]
    fn turnu_results_are_valid_both_ways(seed in any::<u64>()) {
        let u = universe(4, &["x", "y"]);
        let mut rng = common::rng(seed);
        let r = random_rcmd(&mut rng, &u, &shape());
        let q = random_assertion(&mut rng, &u);
        let d = synthesize_backward(&r, &q, &small(), &u).unwrap();
        let Some(pp) = pick(&mut rng, d.pre(), &u) else { return Ok(()) };
        let (qp, td) = run_turnu(&d, &pp, &u).unwrap();
        let j = check_turnu_derivation(&td, &u).unwrap();
        prop_assert_eq!(&j.replay, &Triple::new(pp.clone(), r.clone(), qp.clone()));
        prop_assert!(check_turnu_validity(&j, &u).unwrap().holds());
        prop_assert_eq!(oracle_judgment(&j, &u, false), [true; 4]);
        prop_assert!(oracle_sil_valid(&pp, &r, &qp, &u));
        prop_assert!(!td.root.rules().contains(&ReplayRule::ConsIL));
    }

    #[test]
    fn accepted_derivations_are_valid(seed in any::<u64>(), victim in any::<prop::sample::Index>()) {
        // Perturb a correct replay: swap in a random assertion, or wrap a
        // node in a SIL consequence step with random ends. Whatever the
        // checker still accepts must satisfy all four conditions.
        let u = universe(4, &["x", "y"]);
        let (d, qp, mut rng) = random_guide(seed, &u);
        let Some(qp) = qp else { return Ok(()) };
        let (_, mut ud) = run_uturn(&d, &qp, &u).unwrap();
        let mut paths = vec![vec![]];
        collect_paths(&ud.root, &mut vec![], &mut paths);
        let path = victim.get(&paths).clone();
        let (p1, p2) = (random_assertion(&mut rng, &u), random_assertion(&mut rng, &u));
        let node = ud.root.at_mut(&path).unwrap();
        match rng.gen_range(0..3) {
            0 => node.triple.pre = p1,
            1 => node.triple.post = p1,
            _ => {
                let inner = node.clone();
                node.rule = ReplayRule::ConsSIL;
                node.triple.pre = Assertion::and(inner.pre().clone(), p1);
                node.triple.post = Assertion::or(inner.post().clone(), p2);
                node.children = vec![inner];
            }
        }
        if let Ok(j) = check_uturn_derivation(&ud, &u) {
            prop_assert_eq!(oracle_judgment(&j, &u, true), [true; 4], "{}", j);
        }
    }
}

fn collect_paths(n: &ReplayNode, here: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (i, k) in n.children.iter().enumerate() {
        here.push(i);
        out.push(here.clone());
        collect_paths(k, here, out);
        here.pop();
    }
}

#[test]
fn il_guide_must_itself_check() {
    let u = universe(8, &["x"]);
    let d = synthesize_forward(&a("ok: x = 1", &u), &c("x := x + 1", &u), &Heuristics::default(), &u).unwrap();
    let (_, mut ud) = run_uturn(&d, d.post(), &u).unwrap();
    ud.il.triple.post = a("ok: x = 7", &u);
    assert!(check_il_derivation(&ud.il, &u).is_err());
    assert!(check_uturn_derivation(&ud, &u).is_err());
}
