//! Metavariable declarations and assignments, plus the two transformations that
//! move rule patterns into a translation context: transport (fresh copies of a
//! pattern's metavariables) and lifting over binders.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kernel::{FVarId, LocalContext, LocalDecl, MVarId, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaDecl {
    pub ctx: LocalContext,
    pub ty: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignError {
    #[error("occurs check failed for {0}")]
    OccursCheck(MVarId),
    #[error("{0} cannot mention free variable #{f} outside its context", f = .1.0)]
    OutOfScopeFvar(MVarId, FVarId),
    #[error("{0} is already assigned")]
    AlreadyAssigned(MVarId),
    #[error("{0} is not declared")]
    Undeclared(MVarId),
}

#[derive(Clone, Debug)]
enum Undo {
    Declared(MVarId),
    Assigned(MVarId),
    Context(MVarId, LocalContext),
}

/// Declarations and assignments of metavariables for one translation session.
///
/// Changes made inside a [`checkpoint`](MetaState::checkpoint) are recorded on a
/// trail so that [`rollback`](MetaState::rollback) restores the exact prior state.
#[derive(Clone, Debug, Default)]
pub struct MetaState {
    decls: BTreeMap<MVarId, MetaDecl>,
    assignments: BTreeMap<MVarId, Term>,
    trail: Vec<Undo>,
    depth: usize,
}

/// Snapshot equality ignores the undo trail.
impl PartialEq for MetaState {
    fn eq(&self, other: &Self) -> bool {
        self.decls == other.decls && self.assignments == other.assignments
    }
}

impl Eq for MetaState {}

#[derive(Clone, Copy, Debug)]
pub struct Checkpoint(usize);

impl MetaState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_meta(&mut self, ctx: &LocalContext, ty: Term) -> MVarId {
        let id = MVarId::fresh();
        self.declare(id, ctx.clone(), ty);
        id
    }

    pub(crate) fn declare(&mut self, id: MVarId, ctx: LocalContext, ty: Term) {
        self.decls.insert(id, MetaDecl { ctx, ty });
        if self.depth > 0 {
            self.trail.push(Undo::Declared(id));
        }
    }

    pub fn decl(&self, id: MVarId) -> Option<&MetaDecl> {
        self.decls.get(&id)
    }

    pub fn is_declared(&self, id: MVarId) -> bool {
        self.decls.contains_key(&id)
    }

    pub fn assignment(&self, id: MVarId) -> Option<&Term> {
        self.assignments.get(&id)
    }

    pub fn is_assigned(&self, id: MVarId) -> bool {
        self.assignments.contains_key(&id)
    }

    pub fn num_assigned(&self) -> usize {
        self.assignments.len()
    }

    pub fn declared(&self) -> impl Iterator<Item = (&MVarId, &MetaDecl)> {
        self.decls.iter()
    }

    /// Assigns `m := t` after the occurs check and the scope check. No type
    /// check is performed here; see `kernel::defeq`.
    pub fn assign(&mut self, m: MVarId, t: Term) -> Result<(), AssignError> {
        let decl = self.decls.get(&m).ok_or(AssignError::Undeclared(m))?;
        if self.assignments.contains_key(&m) {
            return Err(AssignError::AlreadyAssigned(m));
        }
        let inst = self.instantiate(&t);
        if inst.has_mvar(m) {
            return Err(AssignError::OccursCheck(m));
        }
        if let Some(f) = inst.fvars().into_iter().find(|f| !decl.ctx.contains(*f)) {
            return Err(AssignError::OutOfScopeFvar(m, f));
        }
        self.assign_unchecked(m, t);
        Ok(())
    }

    pub(crate) fn assign_unchecked(&mut self, m: MVarId, t: Term) {
        self.assignments.insert(m, t);
        if self.depth > 0 {
            self.trail.push(Undo::Assigned(m));
        }
    }

    /// Appends `decl` to the declared context of `m`.
    pub fn extend_context(&mut self, m: MVarId, decl: LocalDecl) {
        if let Some(d) = self.decls.get_mut(&m) {
            if d.ctx.contains(decl.fvar) {
                return;
            }
            let old = d.ctx.clone();
            d.ctx.push(decl);
            if self.depth > 0 {
                self.trail.push(Undo::Context(m, old));
            }
        }
    }

    pub fn checkpoint(&mut self) -> Checkpoint {
        self.depth += 1;
        Checkpoint(self.trail.len())
    }

    pub fn commit(&mut self, _cp: Checkpoint) {
        self.depth -= 1;
        if self.depth == 0 {
            self.trail.clear();
        }
    }

    pub fn rollback(&mut self, cp: Checkpoint) {
        while self.trail.len() > cp.0 {
            match self.trail.pop().expect("trail entry") {
                Undo::Declared(id) => {
                    self.decls.remove(&id);
                }
                Undo::Assigned(id) => {
                    self.assignments.remove(&id);
                }
                Undo::Context(id, ctx) => {
                    if let Some(d) = self.decls.get_mut(&id) {
                        d.ctx = ctx;
                    }
                }
            }
        }
        self.depth -= 1;
        if self.depth == 0 {
            self.trail.clear();
        }
    }

    /// Runs `f`; keeps its effects only if it returns true.
    pub fn transaction(&mut self, f: impl FnOnce(&mut Self) -> bool) -> bool {
        let cp = self.checkpoint();
        if f(self) {
            self.commit(cp);
            true
        } else {
            self.rollback(cp);
            false
        }
    }

    /// Replaces assigned metavariables (transitively) and beta-reduces the
    /// redexes that substitution creates at application heads.
    pub fn instantiate(&self, t: &Term) -> Term {
        if self.assignments.is_empty() || !t.has_mvars() {
            return t.clone();
        }
        match t {
            Term::MVar(m) => match self.assignments.get(m) {
                Some(v) => self.instantiate(v),
                None => t.clone(),
            },
            Term::App(..) => {
                let (head, args) = t.app_spine();
                let args: Vec<Term> = args.into_iter().map(|a| self.instantiate(a)).collect();
                match head {
                    Term::MVar(m) if self.assignments.contains_key(m) => {
                        let h = self.instantiate(head);
                        Term::apps(h, args).head_beta()
                    }
                    _ => Term::apps(self.instantiate(head), args),
                }
            }
            Term::Lam { name, ty, body } => Term::Lam {
                name: name.clone(),
                ty: Box::new(self.instantiate(ty)),
                body: Box::new(self.instantiate(body)),
            },
            Term::Pi {
                name,
                ty,
                body,
                implicit,
            } => Term::Pi {
                name: name.clone(),
                ty: Box::new(self.instantiate(ty)),
                body: Box::new(self.instantiate(body)),
                implicit: *implicit,
            },
            Term::Let {
                name,
                ty,
                value,
                body,
            } => Term::Let {
                name: name.clone(),
                ty: Box::new(self.instantiate(ty)),
                value: Box::new(self.instantiate(value)),
                body: Box::new(self.instantiate(body)),
            },
            other => other.clone(),
        }
    }

    /// Unassigned metavariables of `t` after instantiation.
    pub fn unassigned_in(&self, t: &Term) -> Vec<MVarId> {
        self.instantiate(t).mvars()
    }

    /// Wraps `m` so that its solution may depend on `bound`.
    ///
    /// Returns `(λx1..xn. ?f x1..xn) b1..bn`, where `?f : Π x1..xn, T` is fresh and
    /// declared in `m`'s context without the bound variables. When `m`'s own
    /// context already contains every bound variable, `m` is assigned `?f b1..bn`
    /// so that all of its occurrences share the lifted form.
    pub fn lift_over_binders(&mut self, m: MVarId, bound: &[LocalDecl]) -> Term {
        if bound.is_empty() {
            return Term::MVar(m);
        }
        let decl = self.decls[&m].clone();
        let ids: Vec<FVarId> = bound.iter().map(|d| d.fvar).collect();
        let mut outer = LocalContext::new();
        for e in decl.ctx.entries() {
            if !ids.contains(&e.fvar) {
                outer.push(e.clone());
            }
        }
        let fn_ty = close_pi_spine(&decl.ty, bound);
        let f = self.fresh_meta(&outer, fn_ty);

        let n = bound.len() as u32;
        let applied = Term::apps(Term::MVar(f), (0..n).rev().map(Term::BVar));
        let mut lam = applied;
        for (i, d) in bound.iter().enumerate().rev() {
            lam = Term::Lam {
                name: d.name.as_str().into(),
                ty: Box::new(d.ty.abstract_fvars(&ids[..i])),
                body: Box::new(lam),
            };
        }
        let args: Vec<Term> = ids.iter().map(|f| Term::FVar(*f)).collect();
        if ids.iter().all(|x| decl.ctx.contains(*x)) && !self.is_assigned(m) {
            self.assign_unchecked(m, Term::apps(Term::MVar(f), args.clone()));
        }
        Term::apps(lam, args)
    }

    /// Fresh copies of a pattern's metavariables, declared in `target`.
    ///
    /// Returns the rewritten pattern and, positionally with
    /// `template.nonterminals`, the fresh metavariable standing for each one.
    pub fn transport(&mut self, template: &PatternTemplate, target: &LocalContext) -> Transported {
        let mapping: BTreeMap<MVarId, MVarId> = template
            .stored
            .iter()
            .map(|s| (s.id, MVarId::fresh()))
            .collect();
        let subst = |t: &Term| {
            t.replace(&mut |u| match u {
                Term::MVar(m) => mapping.get(m).map(|n| Term::MVar(*n)),
                _ => None,
            })
        };
        for s in &template.stored {
            self.declare(mapping[&s.id], target.clone(), subst(&s.ty));
        }
        let term = subst(&template.term);
        let nonterminals = template
            .nonterminals
            .iter()
            .map(|(_, id)| mapping[id])
            .collect();
        Transported {
            term,
            nonterminals,
            mapping,
        }
    }
}

/// Builds `Π (b1 : T1) .. (bn : Tn), ty` abstracting the bound fvars.
fn close_pi_spine(ty: &Term, bound: &[LocalDecl]) -> Term {
    let ids: Vec<FVarId> = bound.iter().map(|d| d.fvar).collect();
    let mut out = ty.abstract_fvars(&ids);
    for (i, d) in bound.iter().enumerate().rev() {
        out = Term::Pi {
            name: d.name.as_str().into(),
            ty: Box::new(d.ty.abstract_fvars(&ids[..i])),
            body: Box::new(out),
            implicit: false,
        };
    }
    out
}

/// A metavariable recorded with a compiled pattern. Its context is always
/// empty: metavariables created under pattern binders are lifted at compile time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredMeta {
    pub id: MVarId,
    pub ty: Term,
}

/// A partially elaborated term pattern together with the metavariables it owns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternTemplate {
    pub term: Term,
    pub stored: Vec<StoredMeta>,
    /// Nonterminal names with their metavariables, in external-pattern order.
    pub nonterminals: Vec<(String, MVarId)>,
}

#[derive(Clone, Debug)]
pub struct Transported {
    pub term: Term,
    pub nonterminals: Vec<MVarId>,
    pub mapping: BTreeMap<MVarId, MVarId>,
}
