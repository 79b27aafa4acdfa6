//! Terms of the core calculus.
//!
//! Bound variables use de Bruijn indices; free variables and metavariables
//! carry globally unique ids. Binder display names are carried for printing
//! only and never take part in equality or hashing.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;

static NEXT_FVAR: AtomicU64 = AtomicU64::new(1);
static NEXT_MVAR: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FVarId(pub u64);

impl FVarId {
    pub fn fresh() -> Self {
        FVarId(NEXT_FVAR.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MVarId(pub u64);

impl MVarId {
    pub fn fresh() -> Self {
        MVarId(NEXT_MVAR.fetch_add(1, Ordering::Relaxed))
    }
}

impl fmt::Display for MVarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?m{}", self.0)
    }
}

/// A binder's display name. Compares equal to every other binder name.
#[derive(Clone, Default)]
pub struct BinderName(pub String);

impl BinderName {
    pub fn new(s: impl Into<String>) -> Self {
        BinderName(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for BinderName {
    fn from(s: &str) -> Self {
        BinderName(s.to_string())
    }
}

impl PartialEq for BinderName {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for BinderName {}

impl Hash for BinderName {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Debug for BinderName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Prop,
    Type,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Sort(Level),
    Const(String),
    App(Box<Term>, Box<Term>),
    Lam {
        name: BinderName,
        ty: Box<Term>,
        body: Box<Term>,
    },
    Pi {
        name: BinderName,
        ty: Box<Term>,
        body: Box<Term>,
        implicit: bool,
    },
    Let {
        name: BinderName,
        ty: Box<Term>,
        value: Box<Term>,
        body: Box<Term>,
    },
    BVar(u32),
    FVar(FVarId),
    MVar(MVarId),
    NatLit(BigUint),
}

impl Term {
    pub fn prop() -> Term {
        Term::Sort(Level::Prop)
    }

    pub fn ty() -> Term {
        Term::Sort(Level::Type)
    }

    pub fn cnst(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn lam(name: impl Into<String>, ty: Term, body: Term) -> Term {
        Term::Lam {
            name: BinderName::new(name),
            ty: Box::new(ty),
            body: Box::new(body),
        }
    }

    pub fn pi(name: impl Into<String>, ty: Term, body: Term) -> Term {
        Term::Pi {
            name: BinderName::new(name),
            ty: Box::new(ty),
            body: Box::new(body),
            implicit: false,
        }
    }

    pub fn pi_implicit(name: impl Into<String>, ty: Term, body: Term) -> Term {
        Term::Pi {
            name: BinderName::new(name),
            ty: Box::new(ty),
            body: Box::new(body),
            implicit: true,
        }
    }

    pub fn arrow(dom: Term, cod: Term) -> Term {
        Term::pi("_", dom, cod.lift_loose(0, 1))
    }

    pub fn let_(name: impl Into<String>, ty: Term, value: Term, body: Term) -> Term {
        Term::Let {
            name: BinderName::new(name),
            ty: Box::new(ty),
            value: Box::new(value),
            body: Box::new(body),
        }
    }

    pub fn nat(n: u64) -> Term {
        Term::NatLit(BigUint::from(n))
    }

    pub fn is_mvar(&self) -> bool {
        matches!(self, Term::MVar(_))
    }

    /// Head of an application spine.
    pub fn app_fn(&self) -> &Term {
        let mut t = self;
        while let Term::App(f, _) = t {
            t = f;
        }
        t
    }

    /// Splits `f a1 .. an` into `(f, [a1, .., an])`.
    pub fn app_spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn app_num_args(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let Term::App(f, _) = t {
            n += 1;
            t = f;
        }
        n
    }

    /// One more than the largest loose bound variable index, or 0 if closed.
    pub fn loose_bvar_range(&self) -> u32 {
        fn go(t: &Term, depth: u32) -> u32 {
            match t {
                Term::BVar(i) => {
                    if *i >= depth {
                        i - depth + 1
                    } else {
                        0
                    }
                }
                Term::App(f, a) => go(f, depth).max(go(a, depth)),
                Term::Lam { ty, body, .. } | Term::Pi { ty, body, .. } => {
                    go(ty, depth).max(go(body, depth + 1))
                }
                Term::Let {
                    ty, value, body, ..
                } => go(ty, depth)
                    .max(go(value, depth))
                    .max(go(body, depth + 1)),
                _ => 0,
            }
        }
        go(self, 0)
    }

    pub fn has_loose_bvars(&self) -> bool {
        self.loose_bvar_range() > 0
    }

    pub fn has_loose_bvar(&self, index: u32) -> bool {
        fn go(t: &Term, target: u32) -> bool {
            match t {
                Term::BVar(i) => *i == target,
                Term::App(f, a) => go(f, target) || go(a, target),
                Term::Lam { ty, body, .. } | Term::Pi { ty, body, .. } => {
                    go(ty, target) || go(body, target + 1)
                }
                Term::Let {
                    ty, value, body, ..
                } => go(ty, target) || go(value, target) || go(body, target + 1),
                _ => false,
            }
        }
        go(self, index)
    }

    /// Adds `amount` to every loose bound variable with index `>= cutoff`.
    pub fn lift_loose(&self, cutoff: u32, amount: u32) -> Term {
        if amount == 0 || self.loose_bvar_range() <= cutoff {
            return self.clone();
        }
        self.map_bvars(cutoff, &|i, depth| {
            if i >= depth {
                Term::BVar(i + amount)
            } else {
                Term::BVar(i)
            }
        })
    }

    /// Generic traversal replacing bound variables. `f` receives the index and the
    /// number of binders crossed on the way to it (offset by `start`).
    fn map_bvars(&self, start: u32, f: &dyn Fn(u32, u32) -> Term) -> Term {
        fn go(t: &Term, depth: u32, f: &dyn Fn(u32, u32) -> Term) -> Term {
            match t {
                Term::BVar(i) => f(*i, depth),
                Term::App(a, b) => Term::app(go(a, depth, f), go(b, depth, f)),
                Term::Lam { name, ty, body } => Term::Lam {
                    name: name.clone(),
                    ty: Box::new(go(ty, depth, f)),
                    body: Box::new(go(body, depth + 1, f)),
                },
                Term::Pi {
                    name,
                    ty,
                    body,
                    implicit,
                } => Term::Pi {
                    name: name.clone(),
                    ty: Box::new(go(ty, depth, f)),
                    body: Box::new(go(body, depth + 1, f)),
                    implicit: *implicit,
                },
                Term::Let {
                    name,
                    ty,
                    value,
                    body,
                } => Term::Let {
                    name: name.clone(),
                    ty: Box::new(go(ty, depth, f)),
                    value: Box::new(go(value, depth, f)),
                    body: Box::new(go(body, depth + 1, f)),
                },
                other => other.clone(),
            }
        }
        go(self, start, f)
    }

    /// Substitutes `subst[j]` for loose `bvar j`. Remaining loose variables are
    /// lowered by `subst.len()`.
    pub fn instantiate_many(&self, subst: &[Term]) -> Term {
        if subst.is_empty() || !self.has_loose_bvars() {
            return self.clone();
        }
        let n = subst.len() as u32;
        self.map_bvars(0, &|i, depth| {
            if i < depth {
                Term::BVar(i)
            } else if i - depth < n {
                subst[(i - depth) as usize].lift_loose(0, depth)
            } else {
                Term::BVar(i - n)
            }
        })
    }

    /// Replaces `bvar 0` with `value` (the body of a binder being opened).
    pub fn instantiate1(&self, value: &Term) -> Term {
        self.instantiate_many(std::slice::from_ref(value))
    }

    /// Replaces every occurrence of `fvar` by the bound variable of a binder
    /// that will be wrapped directly around the result.
    pub fn abstract_fvar(&self, fvar: FVarId) -> Term {
        self.abstract_fvars(&[fvar])
    }

    /// Abstracts several fvars at once; `fvars[last]` becomes `bvar 0`.
    pub fn abstract_fvars(&self, fvars: &[FVarId]) -> Term {
        if fvars.is_empty() || !self.has_any_fvar(fvars) {
            return self.clone();
        }
        fn go(t: &Term, depth: u32, fvars: &[FVarId]) -> Term {
            match t {
                Term::FVar(id) => match fvars.iter().rposition(|f| f == id) {
                    Some(pos) => Term::BVar(depth + (fvars.len() - 1 - pos) as u32),
                    None => t.clone(),
                },
                Term::App(a, b) => Term::app(go(a, depth, fvars), go(b, depth, fvars)),
                Term::Lam { name, ty, body } => Term::Lam {
                    name: name.clone(),
                    ty: Box::new(go(ty, depth, fvars)),
                    body: Box::new(go(body, depth + 1, fvars)),
                },
                Term::Pi {
                    name,
                    ty,
                    body,
                    implicit,
                } => Term::Pi {
                    name: name.clone(),
                    ty: Box::new(go(ty, depth, fvars)),
                    body: Box::new(go(body, depth + 1, fvars)),
                    implicit: *implicit,
                },
                Term::Let {
                    name,
                    ty,
                    value,
                    body,
                } => Term::Let {
                    name: name.clone(),
                    ty: Box::new(go(ty, depth, fvars)),
                    value: Box::new(go(value, depth, fvars)),
                    body: Box::new(go(body, depth + 1, fvars)),
                },
                other => other.clone(),
            }
        }
        go(self, 0, fvars)
    }

    pub fn has_fvar(&self, fvar: FVarId) -> bool {
        self.has_any_fvar(&[fvar])
    }

    pub fn has_any_fvar(&self, fvars: &[FVarId]) -> bool {
        self.any(&mut |t| matches!(t, Term::FVar(id) if fvars.contains(id)))
    }

    pub fn has_mvars(&self) -> bool {
        self.any(&mut |t| matches!(t, Term::MVar(_)))
    }

    pub fn has_mvar(&self, m: MVarId) -> bool {
        self.any(&mut |t| matches!(t, Term::MVar(id) if *id == m))
    }

    pub fn has_fvars(&self) -> bool {
        self.any(&mut |t| matches!(t, Term::FVar(_)))
    }

    /// True if `pred` holds for any subterm (pre-order, short-circuiting).
    pub fn any(&self, pred: &mut dyn FnMut(&Term) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Term::App(f, a) => f.any(pred) || a.any(pred),
            Term::Lam { ty, body, .. } | Term::Pi { ty, body, .. } => {
                ty.any(pred) || body.any(pred)
            }
            Term::Let {
                ty, value, body, ..
            } => ty.any(pred) || value.any(pred) || body.any(pred),
            _ => false,
        }
    }

    /// Metavariables in order of first occurrence.
    pub fn mvars(&self) -> Vec<MVarId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.any(&mut |t| {
            if let Term::MVar(id) = t {
                if seen.insert(*id) {
                    out.push(*id);
                }
            }
            false
        });
        out
    }

    pub fn fvars(&self) -> BTreeSet<FVarId> {
        let mut out = BTreeSet::new();
        self.any(&mut |t| {
            if let Term::FVar(id) = t {
                out.insert(*id);
            }
            false
        });
        out
    }

    /// Rebuilds the term bottom-up, letting `f` replace any subterm first.
    /// `f` returns `None` to descend structurally.
    pub fn replace(&self, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
        if let Some(r) = f(self) {
            return r;
        }
        match self {
            Term::App(a, b) => Term::app(a.replace(f), b.replace(f)),
            Term::Lam { name, ty, body } => Term::Lam {
                name: name.clone(),
                ty: Box::new(ty.replace(f)),
                body: Box::new(body.replace(f)),
            },
            Term::Pi {
                name,
                ty,
                body,
                implicit,
            } => Term::Pi {
                name: name.clone(),
                ty: Box::new(ty.replace(f)),
                body: Box::new(body.replace(f)),
                implicit: *implicit,
            },
            Term::Let {
                name,
                ty,
                value,
                body,
            } => Term::Let {
                name: name.clone(),
                ty: Box::new(ty.replace(f)),
                value: Box::new(value.replace(f)),
                body: Box::new(body.replace(f)),
            },
            other => other.clone(),
        }
    }

    /// Beta-reduces the head while it is a lambda applied to arguments.
    pub fn head_beta(&self) -> Term {
        let (head, args) = self.app_spine();
        if !matches!(head, Term::Lam { .. }) || args.is_empty() {
            return self.clone();
        }
        let mut head = head.clone();
        let mut rest = args.into_iter();
        while let Term::Lam { body, .. } = &head {
            match rest.next() {
                Some(arg) => head = body.instantiate1(arg),
                None => break,
            }
        }
        let t = Term::apps(head, rest.cloned());
        if matches!(t.app_fn(), Term::Lam { .. }) && t.app_num_args() > 0 {
            t.head_beta()
        } else {
            t
        }
    }

    /// Number of nodes, used to bound random generation and for diagnostics.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.any(&mut |_| {
            n += 1;
            false
        });
        n
    }
}
