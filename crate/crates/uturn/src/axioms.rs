//! Combined forward/backward axioms for atomic commands.
//!
//! For an atom `c` the triple `⟨P ∧ wp(c,Q)⟩ c ⟨Q ∧ sp(c,P)⟩` is valid both
//! as an IL and as a SIL triple, and every triple valid in both logics has
//! this shape up to equivalence.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::assertions::{expand_atom, extension, sp_atom, split_flags, substitute, wp_atom, Assertion};
use crate::gen::{random_ok_assertion, random_subset};
use crate::il::il_valid;
use crate::lang::{ACmd, AExp, RCmd};
use crate::proof::Triple;
use crate::sil::sil_valid;
use crate::state::Universe;
use crate::{Error, Result};

/// `⟨P ∧ wp(c,Q)⟩ c ⟨Q ∧ sp(c,P)⟩`.
///
/// Ok-tagged `P` and `Q` (er-tagged `Q` for `error()`) give the closed form
/// verbatim. Error parts of mixed assertions pass through unchanged, as the
/// error-identity rules would.
pub fn combined_axiom(c: &ACmd, p: &Assertion, q: &Assertion) -> Triple {
    let (p_ok, p_er) = split_flags(p);
    let (q_ok, q_er) = split_flags(q);
    let target = if *c == ACmd::Error { q_er.clone() } else { q_ok };
    let pre = Assertion::or(
        Assertion::and(p_ok.clone(), wp_atom(c, &target)),
        Assertion::and(p_er.clone(), q_er.clone()),
    );
    let post = Assertion::or(Assertion::and(target, sp_atom(c, &p_ok)), Assertion::and(q_er, p_er));
    Triple::new(pre, RCmd::Atom(c.clone()), post)
}

/// Whether the combined axiom for `(c, P, Q)` is both IL- and SIL-valid.
pub fn verify_schema_validity(c: &ACmd, p: &Assertion, q: &Assertion, u: &Universe) -> Result<bool> {
    let t = combined_axiom(c, p, q);
    Ok(il_valid(&t, u)? && sil_valid(&t, u)?)
}

/// For a triple valid in both logics, whether conjoining the exact pre- and
/// post-image leaves its assertions unchanged.
pub fn verify_schema_completeness(t: &Triple, u: &Universe) -> Result<bool> {
    let RCmd::Atom(c) = &t.cmd else {
        return Err(Error::Precondition(format!("`{}` is not atomic", t.cmd)));
    };
    if !il_valid(t, u)? || !sil_valid(t, u)? {
        return Err(Error::Precondition(format!("{t} is not valid in both logics")));
    }
    let wp = expand_atom(&Assertion::bw_atom(c.clone(), t.post.clone()));
    let sp = expand_atom(&Assertion::fw_atom(c.clone(), t.pre.clone()));
    let pre = extension(&t.pre, u)?;
    let post = extension(&t.post, u)?;
    Ok(extension(&Assertion::and(t.pre.clone(), wp), u)? == pre
        && extension(&Assertion::and(t.post.clone(), sp), u)? == post)
}

/// Draws an atomic triple valid in both logics: a random ok pre `P`, a
/// random subset `Q` of its image written out state by state, and the pre
/// narrowed to `P ∧ wp(c,Q)`.
pub fn sample_both_valid<R: Rng>(rng: &mut R, c: &ACmd, u: &Universe) -> Result<Triple> {
    let p = random_ok_assertion(rng, u);
    let image = extension(&sp_atom(c, &p), u)?;
    let q = Assertion::from_states(&random_subset(rng, &image, u), u);
    Ok(combined_axiom(c, &p, &q))
}

type Transform = Arc<dyn Fn(&Assertion) -> Assertion + Send + Sync>;

/// An atom outside the language given by its closed-form transformers and a
/// desugaring into regular commands that fixes its meaning.
#[derive(Clone)]
pub struct CustomAtom {
    pub name: String,
    pub desugared: RCmd,
    fw: Transform,
    bw: Transform,
}

impl fmt::Debug for CustomAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomAtom")
            .field("name", &self.name)
            .field("desugared", &self.desugared)
            .finish_non_exhaustive()
    }
}

impl CustomAtom {
    pub fn new(
        name: impl Into<String>,
        desugared: RCmd,
        fw: impl Fn(&Assertion) -> Assertion + Send + Sync + 'static,
        bw: impl Fn(&Assertion) -> Assertion + Send + Sync + 'static,
    ) -> Self {
        CustomAtom {
            name: name.into(),
            desugared,
            fw: Arc::new(fw),
            bw: Arc::new(bw),
        }
    }

    /// `x++?`: either leaves `x` alone or increments it.
    /// Forward `P ∨ P[x-1/x]`, backward `Q ∨ Q[x+1/x]`.
    pub fn maybe_increment(x: &str) -> Self {
        let inc = AExp::add(AExp::var(x), AExp::Int(1));
        let dec = AExp::sub(AExp::var(x), AExp::Int(1));
        let desugared = RCmd::choice(RCmd::Atom(ACmd::Skip), RCmd::Atom(ACmd::Assign(x.to_string(), inc.clone())));
        let (xf, xb) = (x.to_string(), x.to_string());
        CustomAtom::new(
            format!("{x}++?"),
            desugared,
            move |p| Assertion::or(p.clone(), substitute(p, &dec, &xf)),
            move |q| Assertion::or(q.clone(), substitute(q, &inc, &xb)),
        )
    }

    pub fn identity() -> Self {
        CustomAtom::new("skip", RCmd::Atom(ACmd::Skip), Assertion::clone, Assertion::clone)
    }

    pub fn forward(&self, p: &Assertion) -> Assertion {
        (self.fw)(p)
    }

    pub fn backward(&self, q: &Assertion) -> Assertion {
        (self.bw)(q)
    }
}

/// The combined axiom with caller-supplied transformers. `P` and `Q` are
/// expected ok-tagged; the triple's command is the atom's desugaring.
pub fn combined_axiom_custom(atom: &CustomAtom, p: &Assertion, q: &Assertion) -> Triple {
    Triple::new(
        Assertion::and(p.clone(), atom.backward(q)),
        atom.desugared.clone(),
        Assertion::and(q.clone(), atom.forward(p)),
    )
}

/// Recognizes the custom atoms by name (`x++?`). `None` means the name should
/// be parsed as an ordinary atom.
pub fn named_atom(name: &str, vars: &[String]) -> Result<Option<CustomAtom>> {
    let trimmed = name.trim();
    if let Some(x) = trimmed.strip_suffix("++?") {
        let x = x.trim();
        if !vars.iter().any(|v| v == x) {
            return Err(Error::UndeclaredVariable(x.to_string()));
        }
        return Ok(Some(CustomAtom::maybe_increment(x)));
    }
    Ok(None)
}
