//! Surface syntax for core terms: a parser, a printer and an elaborator with
//! implicit-argument insertion.
//!
//! The printer output parses back to an alpha-equivalent term whenever the
//! environment is supplied, since implicit arguments are then printed with `@`.

mod elab;
mod parse;
mod print;

use num_bigint::BigUint;
use thiserror::Error;

use crate::kernel::Level;

pub use elab::{default_numerals, ElabError, Elaborator, NtOccurrence, RuleScope};
pub use parse::parse_term;
pub use print::{show, show_in, Printer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Not,
    And,
    Or,
    Eq,
    Add,
    Sub,
    Mul,
    Arrow,
}

impl Op {
    /// The constant a notation stands for.
    pub fn constant(self) -> &'static str {
        match self {
            Op::Not => "Not",
            Op::And => "And",
            Op::Or => "Or",
            Op::Eq => "Eq",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Arrow => unreachable!("arrow is a binder form"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SBinder {
    pub name: String,
    pub ty: Option<Surface>,
    pub implicit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    Var(String, Span),
    /// `@f`: no implicit arguments are inserted.
    ExplicitVar(String, Span),
    Num(BigUint, Span),
    NatLit(BigUint),
    Sort(Level),
    Hole(Span),
    App(Box<Surface>, Box<Surface>),
    Lam(Vec<SBinder>, Box<Surface>),
    Pi(Vec<SBinder>, Box<Surface>),
    Arrow(Box<Surface>, Box<Surface>),
    Let(String, Option<Box<Surface>>, Box<Surface>, Box<Surface>),
    Ascribe(Box<Surface>, Box<Surface>),
    Notation(Op, Vec<Surface>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn at(src: &str, offset: usize, message: &str) -> Self {
        let (line, col) = line_col(src, offset);
        SyntaxError {
            line,
            col,
            message: message.to_string(),
        }
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[line_start..].chars().count() + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReadError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Elab(#[from] ElabError),
    #[error("cannot infer {0}")]
    Unsolved(String),
    #[error("ill-typed: {0}")]
    Kernel(#[from] crate::kernel::KernelError),
}

/// Parses and elaborates a closed core term, defaulting numerals to `numerals`.
/// Returns the term and its type.
pub fn read_term(
    src: &str,
    env: &crate::kernel::Environment,
    expected: Option<&crate::kernel::Term>,
    numerals: &crate::kernel::Term,
) -> Result<(crate::kernel::Term, crate::kernel::Term), ReadError> {
    let s = parse_term(src)?;
    let mut metas = crate::unify::MetaState::new();
    let t = Elaborator::new(env, &mut metas).elab(&s, expected)?;
    default_numerals(&t, &mut metas, numerals);
    let t = metas.instantiate(&t);
    if let Some(m) = t.mvars().first() {
        return Err(ReadError::Unsolved(m.to_string()));
    }
    let ty = crate::kernel::check_closed(&t, &crate::kernel::LocalContext::new(), env)?;
    Ok((t, ty))
}

#[cfg(test)]
mod read_tests {
    use super::*;
    use crate::kernel::Term;

    #[test]
    fn reads_closed_terms() {
        let env = crate::env::prelude();
        let nat = Term::cnst("Nat");
        let (t, ty) = read_term("¬ False", &env, None, &nat).unwrap();
        assert_eq!(t, Term::app(Term::cnst("Not"), Term::cnst("False")));
        assert_eq!(ty, Term::prop());
        assert_eq!(read_term("1 + 1", &env, None, &nat).unwrap().1, nat);
        assert!(matches!(read_term("¬ 1 +", &env, None, &nat), Err(ReadError::Syntax(_))));
        assert!(matches!(read_term("¬ zz", &env, None, &nat), Err(ReadError::Elab(_))));
    }
}
