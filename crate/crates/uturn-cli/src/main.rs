use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use uturn::assertions::{extension, Assertion};
use uturn::axioms::{combined_axiom, combined_axiom_custom, named_atom};
use uturn::il::{check_il_derivation, il_counterexample, synthesize_forward};
use uturn::json::{from_json, to_json, Document};
use uturn::lang::{out_of_range_literals, parse_assertion, parse_atom, parse_program, ACmd, Program};
use uturn::proof::{BranchPolicy, Heuristics, Triple};
use uturn::sil::{check_sil_derivation, sil_counterexample, synthesize_backward};
use uturn::state::{Flag, Universe};
use uturn::uturn::{
    check_judgment_validity, check_turnu_derivation, check_turnu_validity, check_uturn_derivation, run_turnu, run_uturn,
    Judgment, Validity,
};

/// How many states to list when showing an extension.
const SHOW_LIMIT: usize = 8;

#[derive(Parser)]
#[command(name = "uturn", version, about = "Forward incorrectness analysis with backward U-Turn replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward IL engine and print the derived triple.
    Analyze {
        /// Program file, or program text if no such file exists.
        program: String,
        #[arg(long, default_value = "ok: true")]
        pre: String,
        #[command(flatten)]
        engine: Engine,
        #[command(flatten)]
        out: Output,
    },
    /// Forward IL pass, then replay backward in SIL from a subset of its post.
    Uturn {
        /// Program file, or program text if no such file exists.
        #[arg(required_unless_present = "derivation")]
        program: Option<String>,
        /// Start from a saved IL derivation instead of running the engine.
        #[arg(long, conflicts_with = "program")]
        derivation: Option<PathBuf>,
        #[arg(long, default_value = "ok: true")]
        pre: String,
        /// Target Q'; defaults to the whole IL post.
        #[arg(long)]
        post: Option<String>,
        #[command(flatten)]
        engine: Engine,
        #[command(flatten)]
        out: Output,
    },
    /// Backward SIL pass, then replay forward in IL from a subset of its pre.
    Turnu {
        #[arg(required_unless_present = "derivation")]
        program: Option<String>,
        /// Start from a saved SIL derivation instead of running the engine.
        #[arg(long, conflicts_with = "program")]
        derivation: Option<PathBuf>,
        #[arg(long, default_value = "er: true")]
        post: String,
        /// Start P'; defaults to the whole SIL pre.
        #[arg(long)]
        pre: Option<String>,
        #[command(flatten)]
        engine: Engine,
        #[command(flatten)]
        out: Output,
    },
    /// Check a triple's validity, or re-check a saved derivation.
    Check {
        #[arg(long, conflicts_with = "sil")]
        il: bool,
        #[arg(long)]
        sil: bool,
        #[arg(long, conflicts_with_all = ["il", "sil", "triple"])]
        derivation: Option<PathBuf>,
        /// PRE PROGRAM POST
        #[arg(num_args = 3, value_names = ["PRE", "PROGRAM", "POST"])]
        triple: Vec<String>,
        #[arg(long, default_value_t = 32)]
        modulus: i64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the combined IL/SIL axiom for an atomic command.
    Axiom {
        /// An atom such as `x := x + 1`, `x := nondet()`, `error()`, or `x++?`.
        atom: String,
        #[arg(long, value_delimiter = ',', default_value = "x")]
        vars: Vec<String>,
        #[arg(long, default_value = "ok: true")]
        pre: String,
        /// Defaults to `ok: true`, or `er: true` for `error()`.
        #[arg(long)]
        post: Option<String>,
        #[arg(long, default_value_t = 32)]
        modulus: i64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct Engine {
    #[arg(long, default_value_t = 10)]
    unroll: usize,
    /// both, left, right, or random (seeded by --seed).
    #[arg(long, default_value = "both")]
    branch_policy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    max_disjuncts: usize,
    #[arg(long, default_value_t = 32)]
    modulus: i64,
}

#[derive(Args)]
struct Output {
    /// Write the derivation as JSON to this path.
    #[arg(long)]
    emit_derivation: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum Failure {
    Lib(uturn::Error),
    Io(String),
    /// A triple or judgment that does not hold.
    Invalid(String),
}

impl From<uturn::Error> for Failure {
    fn from(e: uturn::Error) -> Self {
        Failure::Lib(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(m) | Failure::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        use uturn::Error::*;
        match self {
            Failure::Io(_) => 1,
            Failure::Lib(Parse { .. } | UndeclaredVariable(_) | Config(_) | Format(_)) => 1,
            Failure::Lib(Budget { .. }) => 2,
            Failure::Lib(Precondition(_)) => 3,
            Failure::Lib(ProofCheck { .. }) | Failure::Invalid(_) => 4,
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { program, pre, engine, out } => analyze(&program, &pre, &engine, &out),
        Command::Uturn {
            program,
            derivation,
            pre,
            post,
            engine,
            out,
        } => uturn_cmd(program.as_deref(), derivation.as_deref(), &pre, post.as_deref(), &engine, &out),
        Command::Turnu {
            program,
            derivation,
            post,
            pre,
            engine,
            out,
        } => turnu_cmd(program.as_deref(), derivation.as_deref(), &post, pre.as_deref(), &engine, &out),
        Command::Check {
            il,
            sil,
            derivation,
            triple,
            modulus,
            format,
        } => match derivation {
            Some(path) => check_file(&path, format),
            None => check_triple(il || !sil, &triple, modulus, format),
        },
        Command::Axiom {
            atom,
            vars,
            pre,
            post,
            modulus,
            format,
        } => axiom(&atom, vars, &pre, post.as_deref(), modulus, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_program(arg: &str, modulus: i64) -> Result<(Program, Universe), Failure> {
    let text = if Path::new(arg).is_file() { read(Path::new(arg))? } else { arg.to_string() };
    let p = parse_program(&text)?;
    let u = Universe::new(modulus, p.vars.clone())?;
    for n in out_of_range_literals(&p.body, u.lo(), u.hi()) {
        eprintln!(
            "warning: literal {n} is outside [{}, {}] and wraps to {} modulo {modulus}",
            u.lo(),
            u.hi(),
            u.wrap(n)
        );
    }
    Ok((p, u))
}

fn heuristics(e: &Engine) -> Result<Heuristics, Failure> {
    let policy = match e.branch_policy.parse::<BranchPolicy>()? {
        BranchPolicy::Random(0) => BranchPolicy::Random(e.seed),
        p => p,
    };
    let h = Heuristics {
        max_unroll: e.unroll,
        branch_policy: policy,
        max_disjuncts: e.max_disjuncts,
        ..Heuristics::default()
    };
    h.validate()?;
    Ok(h)
}

fn emit(out: &Output, doc: &Document, u: &Universe) -> Outcome {
    if let Some(path) = &out.emit_derivation {
        std::fs::write(path, to_json(doc, u)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// The formula itself when it is short enough to read on one line.
fn formula(a: &Assertion) -> String {
    let s = a.to_string();
    if s.len() <= 200 {
        s
    } else {
        format!("({} characters; see --format json or --emit-derivation)", s.len())
    }
}

fn states(a: &Assertion, u: &Universe) -> Result<String, Failure> {
    Ok(extension(a, u)?.show(u, SHOW_LIMIT))
}

fn describe(a: &Assertion, u: &Universe) -> Result<Value, Failure> {
    let ext = extension(a, u)?;
    Ok(json!({
        "assertion": a.to_string(),
        "states": ext.len(),
        "ok_states": ext.restrict(Flag::Ok).len(),
        "er_states": ext.restrict(Flag::Er).len(),
        "sample": ext.states(u).take(SHOW_LIMIT).map(|s| u.show(&s)).collect::<Vec<_>>(),
    }))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("reports always serialize"));
}

fn analyze(program: &str, pre: &str, engine: &Engine, out: &Output) -> Outcome {
    let (p, u) = load_program(program, engine.modulus)?;
    let pre = parse_assertion(pre, u.vars())?;
    let d = synthesize_forward(&pre, &p.body, &heuristics(engine)?, &u)?;
    let t = check_il_derivation(&d, &u)?;
    emit(out, &Document::Il(d.clone()), &u)?;
    match out.format {
        Format::Text => {
            println!("pre:  {}", formula(&t.pre));
            println!("post: {}", formula(&t.post));
            println!("post states: {}", states(&t.post, &u)?);
            println!("derivation: {} nodes, depth {}", d.size(), d.depth());
        }
        Format::Json => print_json(&json!({
            "command": "analyze",
            "pre": describe(&t.pre, &u)?,
            "post": describe(&t.post, &u)?,
            "nodes": d.size(),
            "depth": d.depth(),
        })),
    }
    Ok(())
}

fn report_replay(
    kind: &str,
    listing: String,
    judgment: &Judgment,
    validity: &Validity,
    found: (&str, &Assertion),
    u: &Universe,
    format: Format,
) -> Outcome {
    match format {
        Format::Text => {
            print!("{listing}");
            println!();
            println!("{}: {}", found.0, formula(found.1));
            println!("{} states: {}", found.0, states(found.1, u)?);
            println!("judgment: {validity}");
        }
        Format::Json => print_json(&json!({
            "command": kind,
            found.0: describe(found.1, u)?,
            "judgment": judgment.to_string(),
            "valid": validity.holds(),
            "failures": validity.failures.iter().map(|(c, m)| json!({"condition": c, "message": m})).collect::<Vec<_>>(),
        })),
    }
    if validity.holds() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("judgment is not valid:\n{validity}")))
    }
}

fn uturn_cmd(
    program: Option<&str>,
    derivation: Option<&Path>,
    pre: &str,
    post: Option<&str>,
    engine: &Engine,
    out: &Output,
) -> Outcome {
    let (il, u) = match (derivation, program) {
        (Some(path), _) => match from_json(&read(path)?)? {
            (Document::Il(d), u) => (d, u),
            (doc, _) => return Err(Failure::Lib(uturn::Error::Format(format!("expected an IL derivation, found {}", doc.kind())))),
        },
        (None, Some(program)) => {
            let (p, u) = load_program(program, engine.modulus)?;
            let pre = parse_assertion(pre, u.vars())?;
            (synthesize_forward(&pre, &p.body, &heuristics(engine)?, &u)?, u)
        }
        (None, None) => unreachable!("clap requires a program or a derivation"),
    };
    check_il_derivation(&il, &u)?;
    let qp = match post {
        Some(text) => parse_assertion(text, u.vars())?,
        None => il.post().clone(),
    };
    let (_, ud) = run_uturn(&il, &qp, &u)?;
    let judgment = check_uturn_derivation(&ud, &u)?;
    let validity = check_judgment_validity(&judgment, &u)?;
    emit(out, &Document::UTurn(ud.clone()), &u)?;
    report_replay("uturn", ud.render(), &judgment, &validity, ("pre", &judgment.replay.pre), &u, out.format)
}

fn turnu_cmd(
    program: Option<&str>,
    derivation: Option<&Path>,
    post: &str,
    pre: Option<&str>,
    engine: &Engine,
    out: &Output,
) -> Outcome {
    let (sil, u) = match (derivation, program) {
        (Some(path), _) => match from_json(&read(path)?)? {
            (Document::Sil(d), u) => (d, u),
            (doc, _) => return Err(Failure::Lib(uturn::Error::Format(format!("expected a SIL derivation, found {}", doc.kind())))),
        },
        (None, Some(program)) => {
            let (p, u) = load_program(program, engine.modulus)?;
            let post = parse_assertion(post, u.vars())?;
            (synthesize_backward(&p.body, &post, &heuristics(engine)?, &u)?, u)
        }
        (None, None) => unreachable!("clap requires a program or a derivation"),
    };
    check_sil_derivation(&sil, &u)?;
    let pp = match pre {
        Some(text) => parse_assertion(text, u.vars())?,
        None => sil.pre().clone(),
    };
    let (_, td) = run_turnu(&sil, &pp, &u)?;
    let judgment = check_turnu_derivation(&td, &u)?;
    let validity = check_turnu_validity(&judgment, &u)?;
    emit(out, &Document::TurnU(td.clone()), &u)?;
    report_replay("turnu", td.render(), &judgment, &validity, ("post", &judgment.replay.post), &u, out.format)
}

fn triple_verdict(il: bool, t: &Triple, u: &Universe, format: Format) -> Outcome {
    let logic = if il { "IL" } else { "SIL" };
    let cex = if il { il_counterexample(t, u)? } else { sil_counterexample(t, u)? };
    let shown = cex.as_ref().map(|s| u.show(s));
    match format {
        Format::Text => match &shown {
            None => println!("{logic} triple is valid"),
            Some(s) if il => println!("{logic} triple is invalid: {s} is in the post but not reachable from the pre"),
            Some(s) => println!("{logic} triple is invalid: {s} is in the pre but has no run into the post"),
        },
        Format::Json => print_json(&json!({
            "command": "check",
            "logic": logic,
            "valid": shown.is_none(),
            "counterexample": shown,
        })),
    }
    match shown {
        None => Ok(()),
        Some(s) => Err(Failure::Invalid(format!("{logic} triple is invalid at {s}"))),
    }
}

fn check_triple(il: bool, args: &[String], modulus: i64, format: Format) -> Outcome {
    let [pre, program, post] = args else {
        return Err(Failure::Io("check needs PRE PROGRAM POST or --derivation FILE".into()));
    };
    let (p, u) = load_program(program, modulus)?;
    let t = Triple::new(parse_assertion(pre, u.vars())?, p.body, parse_assertion(post, u.vars())?);
    triple_verdict(il, &t, &u, format)
}

fn check_file(path: &Path, format: Format) -> Outcome {
    let (doc, u) = from_json(&read(path)?)?;
    match &doc {
        Document::Il(d) => {
            let t = check_il_derivation(d, &u)?;
            if format == Format::Text {
                println!("IL derivation checks: {t}");
            }
            triple_verdict(true, &t, &u, format)
        }
        Document::Sil(d) => {
            let t = check_sil_derivation(d, &u)?;
            if format == Format::Text {
                println!("SIL derivation checks: {t}");
            }
            triple_verdict(false, &t, &u, format)
        }
        Document::UTurn(ud) => {
            let j = check_uturn_derivation(ud, &u)?;
            let v = check_judgment_validity(&j, &u)?;
            judgment_verdict("UTurn", &j, &v, format)
        }
        Document::TurnU(td) => {
            let j = check_turnu_derivation(td, &u)?;
            let v = check_turnu_validity(&j, &u)?;
            judgment_verdict("TurnU", &j, &v, format)
        }
    }
}

fn judgment_verdict(kind: &str, j: &Judgment, v: &Validity, format: Format) -> Outcome {
    let verdicts: Vec<(u8, bool)> = (1..=4).map(|c| (c, !v.failed(c))).collect();
    match format {
        Format::Text => {
            println!("{kind} derivation checks: {j}");
            for (c, ok) in &verdicts {
                println!("condition {c}: {}", if *ok { "holds" } else { "fails" });
            }
            if !v.holds() {
                println!("{v}");
            }
        }
        Format::Json => print_json(&json!({
            "command": "check",
            "logic": kind,
            "judgment": j.to_string(),
            "valid": v.holds(),
            "conditions": verdicts.iter().map(|(c, ok)| json!({"condition": c, "holds": ok})).collect::<Vec<_>>(),
        })),
    }
    if v.holds() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{kind} judgment is not valid")))
    }
}

fn axiom(atom: &str, vars: Vec<String>, pre: &str, post: Option<&str>, modulus: i64, format: Format) -> Outcome {
    let u = Universe::new(modulus, vars)?;
    let p = parse_assertion(pre, u.vars())?;
    let t = match named_atom(atom, u.vars())? {
        Some(custom) => {
            let q = parse_assertion(post.unwrap_or("ok: true"), u.vars())?;
            combined_axiom_custom(&custom, &p, &q)
        }
        None => {
            let c = parse_atom(atom, u.vars())?;
            let default_post = if c == ACmd::Error { "er: true" } else { "ok: true" };
            let q = parse_assertion(post.unwrap_or(default_post), u.vars())?;
            combined_axiom(&c, &p, &q)
        }
    };
    match format {
        Format::Text => {
            println!("pre:  {}", t.pre);
            println!("cmd:  {}", t.cmd);
            println!("post: {}", t.post);
            println!("pre states:  {}", states(&t.pre, &u)?);
            println!("post states: {}", states(&t.post, &u)?);
        }
        Format::Json => print_json(&json!({
            "command": "axiom",
            "pre": describe(&t.pre, &u)?,
            "cmd": t.cmd.to_string(),
            "post": describe(&t.post, &u)?,
        })),
    }
    Ok(())
}
