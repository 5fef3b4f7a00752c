//! Acceptance run: one PASS/FAIL line per criterion. Validity is always
//! judged by the test oracle in `common`, never by the library's own checks.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{naive_extension, naive_fwsem, sets, universe};
use rand::Rng;
use uturn::assertions::{extension, sp_atom, wp_atom, Assertion};
use uturn::axioms::{combined_axiom, combined_axiom_custom, sample_both_valid, verify_schema_completeness, verify_schema_validity, CustomAtom};
use uturn::gen::{random_aexp, random_assertion, random_ok_assertion, random_rcmd, random_subset, ProgramShape};
use uturn::il::synthesize_forward;
use uturn::lang::{parse_assertion, parse_program, ACmd, RCmd};
use uturn::proof::{Heuristics, Triple};
use uturn::semantics::{bwsem, fwsem};
use uturn::sil::{check_sil_derivation, synthesize_backward};
use uturn::state::{Flag, StateSet, Universe};
use uturn::uturn::{check_turnu_derivation, check_uturn_derivation, run_turnu, run_uturn, Judgment, ReplayRule};

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: uturn::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn a(text: &str, u: &Universe) -> Assertion {
    parse_assertion(text, u.vars()).unwrap()
}

fn ok_part(s: &StateSet) -> StateSet {
    s.restrict(Flag::Ok)
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let p = parse_program("vars x; x := 10; while (x > 0) { x := x - 1 }; error()").unwrap();
    let u = Universe::new(32, p.vars.clone()).unwrap();
    let d = lib(synthesize_forward(&a("ok: true", &u), &p.body, &Heuristics::default(), &u))?;
    let post = sets::ext(d.post(), &u);
    let target = naive_extension(&a("er: x = 0", &u), &u);
    ensure(post == target, || format!("forward post is {}", post.show(&u, 8)))?;
    let (pp, _) = lib(run_uturn(&d, &a("er: x = 0", &u), &u))?;
    let pre = sets::ext(&pp, &u);
    ensure(ok_part(&pre) == StateSet::flag_part(&u, Flag::Ok), || format!("P' ok part is {}", pre.show(&u, 8)))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("post = er: x = 0, P' covers all 32 ok stores, {took:.0?}"))
}

/// One sample for criteria 2 and 7: program, pre and a nonempty post subset.
fn uturn_sample(rng: &mut impl Rng, u: &Universe, h: &Heuristics) -> (RCmd, uturn::proof::IlDerivation, Assertion) {
    let shape = ProgramShape { max_depth: 5, error_percent: 15 };
    loop {
        let r = random_rcmd(rng, u, &shape);
        let p = random_assertion(rng, u);
        let d = synthesize_forward(&p, &r, h, u).unwrap();
        let post = extension(d.post(), u).unwrap();
        if post.is_empty() {
            continue;
        }
        let qp = Assertion::from_states(&random_subset(rng, &post, u), u);
        return (r, d, qp);
    }
}

fn ac2_ac7() -> (Verdict, Verdict) {
    let start = Instant::now();
    let u = universe(8, &["x", "y", "z"]);
    let h = Heuristics { max_unroll: 4, max_disjuncts: 8, ..Heuristics::default() };
    let mut rng = common::rng(2);
    let (mut bad2, mut bad7) = (Vec::new(), Vec::new());
    const RUNS: usize = 1000;
    for i in 0..RUNS {
        let (r, d, qp) = uturn_sample(&mut rng, &u, &h);
        let (pp, ud) = match run_uturn(&d, &qp, &u) {
            Ok(x) => x,
            Err(e) => {
                bad2.push(format!("run {i}: {e}"));
                continue;
            }
        };
        let guide = &d.triple;
        let conds = [
            sets::sil_valid(&pp, &r, &qp, &u),
            sets::subset(&pp, &guide.pre, &u),
            sets::subset(&qp, &guide.post, &u),
            sets::empty(&pp, &u) == sets::empty(&qp, &u),
        ];
        if conds != [true; 4] {
            bad2.push(format!("run {i}: conditions {conds:?}"));
        }
        if !sets::il_valid(&pp, &r, &qp, &u) {
            bad2.push(format!("run {i}: replay triple not IL-valid"));
        }
        if sets::empty(&pp, &u) {
            bad2.push(format!("run {i}: empty P'"));
        }
        let expected = Judgment { guide: guide.clone(), replay: Triple::new(pp.clone(), r.clone(), qp.clone()) };
        match check_uturn_derivation(&ud, &u) {
            Ok(j) if j == expected => {}
            Ok(_) => bad7.push(format!("run {i}: checker concluded a different judgment")),
            Err(e) => bad7.push(format!("run {i}: {e}")),
        }
        if ud.root.rules().contains(&ReplayRule::ConsSIL) {
            bad7.push(format!("run {i}: UConsSIL applied"));
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(300) {
        bad2.push(format!("took {took:?}"));
    }
    let verdict = |bad: Vec<String>, ok: String| if bad.is_empty() { Ok(ok) } else { Err(format!("{} violations, first: {}", bad.len(), bad[0])) };
    (
        verdict(bad2, format!("{RUNS} runs, zero violations, {took:.1?}")),
        verdict(bad7, format!("{RUNS} replays re-checked, no UConsSIL")),
    )
}

fn atoms(u: &Universe) -> Vec<ACmd> {
    let vs = u.vars();
    ["skip", "x := x + y", "y := 3", "x := nondet()", "assume(x < y)", "error()"]
        .iter()
        .map(|t| uturn::lang::parse_atom(t, vs).unwrap())
        .collect()
}

fn ac3() -> Verdict {
    let u = universe(8, &["x", "y"]);
    let mut rng = common::rng(3);
    let mut checked = 0;
    for c in atoms(&u) {
        for _ in 0..200 {
            let p = random_ok_assertion(&mut rng, &u);
            let q = random_ok_assertion(&mut rng, &u);
            let q = if c == ACmd::Error { uturn::assertions::retag(&q, Flag::Ok, Flag::Er) } else { q };
            let t = combined_axiom(&c, &p, &q);
            let oracle = sets::il_valid(&t.pre, &t.cmd, &t.post, &u) && sets::sil_valid(&t.pre, &t.cmd, &t.post, &u);
            ensure(oracle, || format!("schema fails for {t}"))?;
            ensure(lib(verify_schema_validity(&c, &p, &q, &u))?, || format!("validity check rejects {t}"))?;
            let sampled = lib(sample_both_valid(&mut rng, &c, &u))?;
            let both = sets::il_valid(&sampled.pre, &sampled.cmd, &sampled.post, &u)
                && sets::sil_valid(&sampled.pre, &sampled.cmd, &sampled.post, &u);
            ensure(both, || format!("sample is not doubly valid: {sampled}"))?;
            ensure(lib(verify_schema_completeness(&sampled, &u))?, || format!("incomplete at {sampled}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} validity and {checked} completeness samples over {} atoms", atoms(&u).len()))
}

fn ac4() -> Verdict {
    let u = universe(8, &["x", "y"]);
    let mut rng = common::rng(4);
    let inc = CustomAtom::maybe_increment("x");
    for i in 0..100 {
        let (p, q) = (random_ok_assertion(&mut rng, &u), random_ok_assertion(&mut rng, &u));
        let t = combined_axiom_custom(&inc, &p, &q);
        let (pe, qe) = (naive_extension(&p, &u), naive_extension(&q, &u));
        let pre = pe.intersection(&common::preimage(&inc.desugared, &qe, &u));
        let post = qe.intersection(&naive_fwsem(&inc.desugared, &pe, &u));
        ensure(naive_extension(&t.pre, &u) == pre, || format!("sample {i}: pre differs for {t}"))?;
        ensure(naive_extension(&t.post, &u) == post, || format!("sample {i}: post differs for {t}"))?;
    }
    Ok("100 samples, pre and post extensions exact".into())
}

fn ac5() -> Verdict {
    let u = universe(4, &["x", "y"]);
    let mut rng = common::rng(5);
    let n = u.num_states();
    for i in 0..100 {
        let r = random_rcmd(&mut rng, &u, &ProgramShape::default());
        let fw: Vec<StateSet> = (0..n).map(|s| fwsem(&r, &StateSet::singleton(&u, s), &u).unwrap()).collect();
        let bw: Vec<StateSet> = (0..n).map(|s| bwsem(&r, &StateSet::singleton(&u, s), &u).unwrap()).collect();
        for s in 0..n {
            for t in 0..n {
                ensure(bw[t].contains(s) == fw[s].contains(t), || format!("command {i} `{r}` at ({s}, {t})"))?;
            }
            let naive = naive_fwsem(&r, &StateSet::singleton(&u, s), &u);
            ensure(naive == fw[s], || format!("command {i} `{r}` disagrees with the interpreter"))?;
        }
    }
    Ok(format!("100 commands, {} state pairs each", n * n))
}

fn ac6() -> Verdict {
    let u = universe(8, &["x", "y"]);
    let mut rng = common::rng(6);
    for i in 0..200 {
        let p = random_ok_assertion(&mut rng, &u);
        let x = if rng.gen_bool(0.5) { "x" } else { "y" };
        let c = ACmd::Assign(x.into(), random_aexp(&mut rng, &u, 2));
        let round = wp_atom(&c, &sp_atom(&c, &p));
        ensure(sets::subset(&p, &round, &u), || format!("sample {i}: {p} not below wp(sp) for {c:?}"))?;
    }
    let shape = ProgramShape { max_depth: 4, error_percent: 15 };
    let (mut il_n, mut sil_n) = (0, 0);
    let small = universe(4, &["x", "y"]);
    let u = &small;
    while il_n < 500 || sil_n < 500 {
        let r = random_rcmd(&mut rng, u, &shape);
        let p = if rng.gen_bool(0.25) { Assertion::ff() } else { random_assertion(&mut rng, u) };
        let q = if rng.gen_bool(0.25) { Assertion::ff() } else { random_assertion(&mut rng, u) };
        if il_n < 500 {
            let reach = naive_fwsem(&r, &naive_extension(&p, u), u);
            let qs = Assertion::from_states(&random_subset(&mut rng, &reach, u), u);
            ensure(common::oracle_il_valid(&p, &r, &qs, u), || "IL sample not valid".into())?;
            if common::oracle_empty(&p, u) {
                ensure(common::oracle_empty(&qs, u), || format!("IL: empty pre, nonempty post for `{r}`"))?;
            }
            if !common::oracle_empty(&qs, u) {
                ensure(!common::oracle_empty(&p, u), || format!("IL: nonempty post from empty pre for `{r}`"))?;
            }
            il_n += 1;
        }
        if sil_n < 500 {
            let back = common::preimage(&r, &naive_extension(&q, u), u);
            let ps = Assertion::from_states(&random_subset(&mut rng, &back, u), u);
            ensure(common::oracle_sil_valid(&ps, &r, &q, u), || "SIL sample not valid".into())?;
            if common::oracle_empty(&q, u) {
                ensure(common::oracle_empty(&ps, u), || format!("SIL: empty post, nonempty pre for `{r}`"))?;
            }
            sil_n += 1;
        }
    }
    Ok("200 assignment round trips, 500 IL and 500 SIL emptiness samples".into())
}

fn ac8() -> Verdict {
    let u = universe(4, &["x", "y"]);
    let mut rng = common::rng(8);
    let h = Heuristics { max_unroll: 4, max_disjuncts: 8, ..Heuristics::default() };
    let shape = ProgramShape { max_depth: 5, error_percent: 15 };
    let mut runs = 0;
    while runs < 300 {
        let r = random_rcmd(&mut rng, &u, &shape);
        let q = random_assertion(&mut rng, &u);
        let d = lib(synthesize_backward(&r, &q, &h, &u))?;
        let pre = extension(d.pre(), &u).unwrap();
        if pre.is_empty() {
            continue;
        }
        let pp = Assertion::from_states(&random_subset(&mut rng, &pre, &u), &u);
        let (qp, td) = lib(run_turnu(&d, &pp, &u))?;
        ensure(sets::il_valid(&pp, &r, &qp, &u), || format!("run {runs}: not IL-valid"))?;
        ensure(sets::sil_valid(&pp, &r, &qp, &u), || format!("run {runs}: not SIL-valid"))?;
        ensure(sets::subset(&qp, &q, &u) && !sets::empty(&qp, &u), || format!("run {runs}: Q' outside Q or empty"))?;
        let j = lib(check_turnu_derivation(&td, &u))?;
        ensure(j.replay == Triple::new(pp, r, qp), || format!("run {runs}: checker disagrees"))?;
        runs += 1;
    }
    let foo = parse_program(
        "vars b x p; x := nondet(); if (b != 0 and x != 0) { p := 0 } else { p := 1 }; if (p = 0) { error() } else { skip }",
    )
    .unwrap();
    let u = Universe::new(8, foo.vars.clone()).unwrap();
    let d = lib(synthesize_backward(&foo.body, &a("er: true", &u), &Heuristics::default(), &u))?;
    let t = lib(check_sil_derivation(&d, &u))?;
    let ok_pre = ok_part(&sets::ext(&t.pre, &u));
    ensure(ok_pre == sets::ext(&a("ok: b != 0", &u), &u), || format!("foo SIL pre ok part is {}", ok_pre.show(&u, 8)))?;
    let pp = a("ok: b != 0", &u);
    let (qp, _) = lib(run_turnu(&d, &pp, &u))?;
    let facts = a("er: b != 0 and x != 0 and p = 0", &u);
    ensure(sets::subset(&qp, &facts, &u) && !sets::empty(&qp, &u), || format!("foo post is {}", sets::ext(&qp, &u).show(&u, 8)))?;
    ensure(sets::il_valid(&pp, &foo.body, &qp, &u) && sets::sil_valid(&pp, &foo.body, &qp, &u), || "foo replay invalid".into())?;
    Ok("300 random runs valid in both logics; foo pre ok: b != 0, post within er: b != 0 and x != 0 and p = 0".into())
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, v: Verdict| match v {
        Ok(msg) => println!("AC{n} PASS  {msg}"),
        Err(msg) => {
            failed += 1;
            println!("AC{n} FAIL  {msg}");
        }
    };
    report(1, ac1());
    let (v2, v7) = ac2_ac7();
    report(2, v2);
    report(3, ac3());
    report(4, ac4());
    report(5, ac5());
    report(6, ac6());
    report(7, v7);
    report(8, ac8());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
