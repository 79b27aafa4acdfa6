//! The built-in prelude and the loader for user environment files.
//!
//! Environment files hold one declaration per line:
//!
//! ```text
//! constant Icc : Π {A : Type}, A → A → A → Prop
//! def notTrue : Prop := ¬ True
//! ```
//!
//! Every `def` is reducible. `--` starts a comment.

use std::sync::OnceLock;

use thiserror::Error;

use crate::kernel::{check_closed, is_def_eq, Declaration, Environment, LocalContext, Term};
use crate::syntax::{default_numerals, parse_term, show_in, Elaborator, SyntaxError};
use crate::unify::MetaState;

/// Type of the raw literals carried by `nat_lit`.
pub const NAT_REP: &str = "NatRep";

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("line {line}: {message}")]
    EnvSyntaxError { line: usize, message: String },
    #[error("declaration `{name}` is ill-typed: {detail}")]
    EnvIllTyped { name: String, detail: String },
    #[error("`{0}` is already declared")]
    DuplicateDecl(String),
}

const PRELUDE: &str = "\
constant NatRep : Type
constant Nat : Type
constant Int : Type
constant Float : Type
constant True : Prop
constant False : Prop
constant Not : Prop → Prop
constant And : Prop → Prop → Prop
constant Or : Prop → Prop → Prop
constant Eq : Π {A : Type}, A → A → Prop
constant numCast : Π {A : Type}, NatRep → A
constant add : Π {A : Type}, A → A → A
constant sub : Π {A : Type}, A → A → A
constant mul : Π {A : Type}, A → A → A
constant neg : Π {A : Type}, A → A
def intLit : NatRep → Int := fun n : NatRep => @numCast Int n
def floatLit : NatRep → Float := fun n : NatRep => @numCast Float n
";

/// The fixed built-in environment.
pub fn prelude() -> Environment {
    static CELL: OnceLock<Environment> = OnceLock::new();
    CELL.get_or_init(|| load_into(Environment::new(), PRELUDE).expect("prelude type-checks"))
        .clone()
}

/// Parses and checks `text` on top of the prelude.
pub fn load_env_file(text: &str) -> Result<Environment, EnvError> {
    load_into(prelude(), text)
}

/// Parses and checks `text` on top of `base`.
pub fn load_into(mut env: Environment, text: &str) -> Result<Environment, EnvError> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let decl = parse_decl(content, line)?;
        let decl = check_decl(&env, decl)?;
        let name = decl.name.clone();
        if !env.insert(decl) {
            return Err(EnvError::DuplicateDecl(name));
        }
    }
    Ok(env)
}

/// One declaration per line in the same format `load_env_file` reads.
pub fn serialize(env: &Environment) -> String {
    let ctx = LocalContext::new();
    let mut out = String::new();
    for d in env.iter() {
        match &d.value {
            None => out.push_str(&format!("constant {} : {}\n", d.name, show_in(&d.ty, &ctx, env))),
            Some(v) => out.push_str(&format!(
                "def {} : {} := {}\n",
                d.name,
                show_in(&d.ty, &ctx, env),
                show_in(v, &ctx, env)
            )),
        }
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find("--") {
        Some(i) => &line[..i],
        None => line,
    }
}

struct RawDecl {
    name: String,
    ty: crate::syntax::Surface,
    value: Option<crate::syntax::Surface>,
}

fn syntax_err(line: usize, e: impl std::fmt::Display) -> EnvError {
    EnvError::EnvSyntaxError {
        line,
        message: e.to_string(),
    }
}

fn parse_decl(content: &str, line: usize) -> Result<RawDecl, EnvError> {
    let (kw, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
    let is_def = match kw {
        "constant" => false,
        "def" => true,
        _ => return Err(syntax_err(line, format!("expected `constant` or `def`, found `{kw}`"))),
    };
    let rest = rest.trim_start();
    let name_len = rest
        .find(|c: char| c.is_whitespace() || c == ':')
        .unwrap_or(rest.len());
    let name = &rest[..name_len];
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '\'') {
        return Err(syntax_err(line, "expected a declaration name"));
    }
    let rest = rest[name_len..].trim_start();
    let Some(rest) = rest.strip_prefix(':').filter(|r| !r.starts_with('=')) else {
        return Err(syntax_err(line, format!("expected `:` after `{name}`")));
    };
    let parse = |s: &str| parse_term(s).map_err(|e: SyntaxError| syntax_err(line, e));
    if !is_def {
        return Ok(RawDecl {
            name: name.to_string(),
            ty: parse(rest)?,
            value: None,
        });
    }
    // The type may itself contain `:=` (in a `let`), so try every split.
    let mut last_err = syntax_err(line, "expected `:=` in definition");
    for (i, _) in rest.match_indices(":=") {
        match (parse(&rest[..i]), parse(&rest[i + 2..])) {
            (Ok(ty), Ok(value)) => {
                return Ok(RawDecl {
                    name: name.to_string(),
                    ty,
                    value: Some(value),
                })
            }
            (Err(e), _) | (_, Err(e)) => last_err = e,
        }
    }
    Err(last_err)
}

fn check_decl(env: &Environment, raw: RawDecl) -> Result<Declaration, EnvError> {
    let ill = |detail: String| EnvError::EnvIllTyped {
        name: raw.name.clone(),
        detail,
    };
    if env.contains(&raw.name) {
        return Err(EnvError::DuplicateDecl(raw.name.clone()));
    }
    let mut metas = MetaState::new();
    let mut el = Elaborator::new(env, &mut metas);
    let ty = el.elab_type(&raw.ty).map_err(|e| ill(e.to_string()))?;
    let value = match &raw.value {
        Some(v) => Some(el.elab(v, Some(&ty)).map_err(|e| ill(e.to_string()))?),
        None => None,
    };
    let nat = Term::cnst("Nat");
    default_numerals(&ty, &mut metas, &nat);
    if let Some(v) = &value {
        default_numerals(v, &mut metas, &nat);
    }
    let ty = metas.instantiate(&ty);
    let value = value.map(|v| metas.instantiate(&v));
    let ctx = LocalContext::new();
    if let Some(m) = ty.mvars().first().or(value.as_ref().and_then(|v| v.mvars().first().copied()).as_ref()) {
        return Err(ill(format!("cannot infer {m}")));
    }
    check_closed(&ty, &ctx, env).map_err(|e| ill(e.to_string()))?;
    if let Some(v) = &value {
        let vty = check_closed(v, &ctx, env).map_err(|e| ill(e.to_string()))?;
        if !is_def_eq(&ty, &vty, &ctx, env, &mut MetaState::new()) {
            return Err(ill(format!(
                "value has type `{}`, expected `{}`",
                show_in(&vty, &ctx, env),
                show_in(&ty, &ctx, env)
            )));
        }
    }
    Ok(Declaration {
        name: raw.name,
        reducible: value.is_some(),
        ty,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prelude_signatures() {
        let env = prelude();
        let ctx = LocalContext::new();
        assert_eq!(show_in(&env.get("Not").unwrap().ty, &ctx, &env), "Prop → Prop");
        assert_eq!(
            show_in(&env.get("add").unwrap().ty, &ctx, &env),
            "Π {A : Type}, A → A → A"
        );
        assert!(env.get("frobnicate").is_none());
    }

    #[test]
    fn prelude_is_stable() {
        assert_eq!(serialize(&prelude()), serialize(&prelude()));
        let env = load_into(Environment::new(), &serialize(&prelude())).unwrap();
        assert_eq!(env, prelude());
    }

    #[test]
    fn constants_and_defs() {
        let env = load_env_file("constant P : Prop\ndef notTrue : Prop := ¬ True -- note").unwrap();
        assert!(env.contains("P"));
        let d = env.get("notTrue").unwrap();
        assert!(d.reducible);
        assert_eq!(d.value, Some(Term::app(Term::cnst("Not"), Term::cnst("True"))));
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load_env_file("def bad : Prop := fun x : Prop => x"),
            Err(EnvError::EnvIllTyped { .. })
        ));
        assert!(matches!(
            load_env_file("constant P : Prop\nconstant P : Prop"),
            Err(EnvError::DuplicateDecl(n)) if n == "P"
        ));
        assert!(matches!(
            load_env_file("\naxiom P : Prop"),
            Err(EnvError::EnvSyntaxError { line: 2, .. })
        ));
        assert!(matches!(
            load_env_file("constant Q : Prop →"),
            Err(EnvError::EnvSyntaxError { line: 1, .. })
        ));
    }

    #[test]
    fn concatenation_equals_sequential_loading() {
        let a = "constant P : Prop\n";
        let b = "def Q : Prop := P ∧ P\n";
        let joined = load_env_file(&format!("{a}{b}")).unwrap();
        let seq = load_into(load_env_file(a).unwrap(), b).unwrap();
        assert_eq!(joined, seq);
    }
}
