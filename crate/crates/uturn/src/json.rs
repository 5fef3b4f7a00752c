//! JSON persistence for derivations.
//!
//! A document records the universe it was built over and one proof tree.
//! Nodes carry their rule name, pre/post as assertion ASTs and the command in
//! concrete syntax, re-parsed against the recorded variables on load. Replay
//! nodes add `il_ref` or `sil_ref`, the path of the guide node they follow.

use serde::{Deserialize, Serialize};

use crate::assertions::Assertion;
use crate::lang::parse_command;
use crate::proof::{Derivation, IlDerivation, Logic, SilDerivation, Triple};
use crate::state::Universe;
use crate::uturn::{Direction, ReplayNode, TurnUDerivation, UTurnDerivation};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Il(IlDerivation),
    Sil(SilDerivation),
    UTurn(UTurnDerivation),
    TurnU(TurnUDerivation),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Il(_) => "IL",
            Document::Sil(_) => "SIL",
            Document::UTurn(_) => "UTurn",
            Document::TurnU(_) => "TurnU",
        }
    }

    /// Root triple of the outermost tree.
    pub fn root_triple(&self) -> &Triple {
        match self {
            Document::Il(d) => &d.triple,
            Document::Sil(d) => &d.triple,
            Document::UTurn(d) => &d.root.triple,
            Document::TurnU(d) => &d.root.triple,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Node {
    rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    il_ref: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sil_ref: Option<Vec<usize>>,
    pre: Assertion,
    cmd: String,
    post: Assertion,
    #[serde(default)]
    children: Vec<Node>,
}

#[derive(Serialize, Deserialize)]
struct File {
    logic: String,
    modulus: i64,
    vars: Vec<String>,
    root: Node,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    il: Option<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sil: Option<Node>,
}

fn node_of<L: Logic>(d: &Derivation<L>) -> Node {
    Node {
        rule: d.rule_name(),
        il_ref: None,
        sil_ref: None,
        pre: d.triple.pre.clone(),
        cmd: d.triple.cmd.to_string(),
        post: d.triple.post.clone(),
        children: d.children.iter().map(node_of).collect(),
    }
}

fn replay_node(r: &ReplayNode, dir: Direction) -> Node {
    let guide = Some(r.guide.clone());
    let (il_ref, sil_ref) = match dir {
        Direction::UTurn => (guide, None),
        Direction::TurnU => (None, guide),
    };
    Node {
        rule: dir.rule_name(r.rule),
        il_ref,
        sil_ref,
        pre: r.triple.pre.clone(),
        cmd: r.triple.cmd.to_string(),
        post: r.triple.post.clone(),
        children: r.children.iter().map(|c| replay_node(c, dir)).collect(),
    }
}

pub fn to_json(doc: &Document, u: &Universe) -> String {
    let (root, il, sil) = match doc {
        Document::Il(d) => (node_of(d), None, None),
        Document::Sil(d) => (node_of(d), None, None),
        Document::UTurn(d) => (replay_node(&d.root, Direction::UTurn), Some(node_of(&d.il)), None),
        Document::TurnU(d) => (replay_node(&d.root, Direction::TurnU), None, Some(node_of(&d.sil))),
    };
    let file = File {
        logic: doc.kind().to_string(),
        modulus: u.modulus(),
        vars: u.vars().to_vec(),
        root,
        il,
        sil,
    };
    serde_json::to_string_pretty(&file).expect("derivations always serialize")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn triple_of(n: &Node, vars: &[String]) -> Result<Triple> {
    let cmd = parse_command(&n.cmd, vars).map_err(|e| bad(format!("command `{}`: {e}", n.cmd)))?;
    Ok(Triple::new(n.pre.clone(), cmd, n.post.clone()))
}

fn derivation_of<L: Logic>(n: &Node, vars: &[String]) -> Result<Derivation<L>> {
    let rule = crate::proof::parse_rule::<L>(&n.rule).ok_or_else(|| bad(format!("unknown rule `{}`", n.rule)))?;
    let children = n.children.iter().map(|c| derivation_of(c, vars)).collect::<Result<_>>()?;
    Ok(Derivation::new(rule, triple_of(n, vars)?, children))
}

fn replay_of(n: &Node, dir: Direction, vars: &[String]) -> Result<ReplayNode> {
    let rule = dir.parse_rule(&n.rule).ok_or_else(|| bad(format!("unknown rule `{}`", n.rule)))?;
    let guide = match dir {
        Direction::UTurn => n.il_ref.clone(),
        Direction::TurnU => n.sil_ref.clone(),
    };
    let guide = guide.ok_or_else(|| bad(format!("node `{}` has no guide reference", n.rule)))?;
    Ok(ReplayNode {
        rule,
        guide,
        triple: triple_of(n, vars)?,
        children: n.children.iter().map(|c| replay_of(c, dir, vars)).collect::<Result<_>>()?,
    })
}

/// Loads a document and the universe it was written for.
pub fn from_json(text: &str) -> Result<(Document, Universe)> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let file = File::deserialize(&mut de).and_then(|f| de.end().map(|_| f)).map_err(|e| bad(e.to_string()))?;
    let u = Universe::new(file.modulus, file.vars.clone())?;
    let vars = u.vars();
    let doc = match file.logic.as_str() {
        "IL" => Document::Il(derivation_of(&file.root, vars)?),
        "SIL" => Document::Sil(derivation_of(&file.root, vars)?),
        "UTurn" => {
            let il = file.il.as_ref().ok_or_else(|| bad("UTurn document without `il` tree"))?;
            Document::UTurn(UTurnDerivation {
                il: derivation_of(il, vars)?,
                root: replay_of(&file.root, Direction::UTurn, vars)?,
            })
        }
        "TurnU" => {
            let sil = file.sil.as_ref().ok_or_else(|| bad("TurnU document without `sil` tree"))?;
            Document::TurnU(TurnUDerivation {
                sil: derivation_of(sil, vars)?,
                root: replay_of(&file.root, Direction::TurnU, vars)?,
            })
        }
        other => return Err(bad(format!("unknown logic `{other}`"))),
    };
    Ok((doc, u))
}
