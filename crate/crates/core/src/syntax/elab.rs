use thiserror::Error;

use super::print::Printer;
use super::{SBinder, Surface};
use crate::kernel::{infer_type, is_def_eq, whnf, Environment, LocalContext, LocalDecl, MVarId, Term};
use crate::unify::MetaState;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),
    #[error("type mismatch: `{term}` has type `{actual}` but is expected to have type `{expected}`")]
    TypeMismatch {
        term: String,
        expected: String,
        actual: String,
    },
    #[error("`{0}` is not a function")]
    NotAFunction(String),
    #[error("`{0}` is not a type")]
    NotAType(String),
}

/// A nonterminal met while elaborating the term side of a rule.
#[derive(Clone, Debug)]
pub struct NtOccurrence {
    pub name: String,
    pub mvar: MVarId,
    /// Pattern binders in scope where the nonterminal first occurred.
    pub ctx: LocalContext,
    /// Binders in scope at a later occurrence but absent from `ctx`.
    pub extra: Vec<LocalDecl>,
    /// Created for an unknown identifier rather than a declared nonterminal.
    pub auto: bool,
}

/// Turns identifiers into nonterminal metavariables while elaborating a rule.
#[derive(Clone, Debug, Default)]
pub struct RuleScope {
    pub nonterminals: Vec<String>,
    /// Unknown identifiers become nonterminals too.
    pub auto: bool,
    pub found: Vec<NtOccurrence>,
}

pub struct Elaborator<'a> {
    pub env: &'a Environment,
    pub metas: &'a mut MetaState,
    pub ctx: LocalContext,
    pub scope: Option<RuleScope>,
}

impl<'a> Elaborator<'a> {
    pub fn new(env: &'a Environment, metas: &'a mut MetaState) -> Self {
        Elaborator {
            env,
            metas,
            ctx: LocalContext::new(),
            scope: None,
        }
    }

    pub fn show(&self, t: &Term) -> String {
        Printer {
            env: Some(self.env),
            ctx: Some(&self.ctx),
        }
        .print(&self.metas.instantiate(t))
    }

    /// Elaborates `s`, unifying its type with `expected` when given.
    pub fn elab(&mut self, s: &Surface, expected: Option<&Term>) -> Result<Term, ElabError> {
        let (t, ty) = self.infer(s, expected)?;
        if let Some(e) = expected {
            self.expect_type(&t, &ty, e)?;
        }
        Ok(t)
    }

    /// Elaborates `s` and requires it to be a type.
    pub fn elab_type(&mut self, s: &Surface) -> Result<Term, ElabError> {
        let (t, ty) = self.infer(s, None)?;
        self.ensure_type(&t, &ty)?;
        Ok(t)
    }

    /// A fresh metavariable of type `ty` in the current context. Under binders
    /// it is lifted so that its solution may mention them.
    pub fn new_meta(&mut self, ty: Term) -> Term {
        let ty = self.metas.instantiate(&ty);
        let m = self.metas.fresh_meta(&self.ctx, ty);
        if !self.ctx.is_empty() {
            let bound = self.ctx.entries().to_vec();
            self.metas.lift_over_binders(m, &bound);
        }
        Term::MVar(m)
    }

    fn expect_type(&mut self, t: &Term, ty: &Term, expected: &Term) -> Result<(), ElabError> {
        if is_def_eq(expected, ty, &self.ctx, self.env, self.metas) {
            Ok(())
        } else {
            Err(ElabError::TypeMismatch {
                term: self.show(t),
                expected: self.show(expected),
                actual: self.show(ty),
            })
        }
    }

    fn ensure_type(&mut self, t: &Term, ty: &Term) -> Result<(), ElabError> {
        match whnf(&self.metas.instantiate(ty), self.env, self.metas) {
            Term::Sort(_) => Ok(()),
            other if other.app_fn().is_mvar() => {
                // The sort is left open; it cannot depend on local variables.
                let sort = Term::MVar(self.metas.fresh_meta(&LocalContext::new(), Term::ty()));
                if is_def_eq(&other, &sort, &self.ctx, self.env, self.metas) {
                    Ok(())
                } else {
                    Err(ElabError::NotAType(self.show(t)))
                }
            }
            _ => Err(ElabError::NotAType(self.show(t))),
        }
    }

    fn type_of(&self, t: &Term) -> Result<Term, ElabError> {
        infer_type(t, &self.ctx, self.env, self.metas).map_err(|e| ElabError::NotAType(e.to_string()))
    }

    fn constant(&mut self, name: &str, explicit: bool) -> Option<(Term, Term)> {
        let decl = self.env.get(name)?;
        let mut t = Term::cnst(name);
        let mut ty = decl.ty.clone();
        if !explicit {
            while let Term::Pi {
                implicit: true,
                ty: dom,
                body,
                ..
            } = whnf(&ty, self.env, self.metas)
            {
                let a = self.new_meta(*dom);
                t = Term::app(t, a.clone());
                ty = body.instantiate1(&a);
            }
        }
        Some((t, ty))
    }

    fn nonterminal(&mut self, name: &str, auto: bool) -> (Term, Term) {
        let scope = self.scope.as_mut().expect("rule scope");
        if let Some(occ) = scope.found.iter_mut().find(|o| o.name == name) {
            for d in self.ctx.entries() {
                if !occ.ctx.contains(d.fvar) && !occ.extra.iter().any(|e| e.fvar == d.fvar) {
                    occ.extra.push(d.clone());
                }
            }
            let m = occ.mvar;
            let ty = self.metas.decl(m).expect("declared").ty.clone();
            return (Term::MVar(m), ty);
        }
        let ty = self.new_meta(Term::ty());
        let ty = self.metas.instantiate(&ty);
        let m = self.metas.fresh_meta(&self.ctx, ty.clone());
        if !self.ctx.is_empty() {
            let bound = self.ctx.entries().to_vec();
            self.metas.lift_over_binders(m, &bound);
        }
        self.scope.as_mut().unwrap().found.push(NtOccurrence {
            name: name.to_string(),
            mvar: m,
            ctx: self.ctx.clone(),
            extra: Vec::new(),
            auto,
        });
        (Term::MVar(m), ty)
    }

    fn apply(&mut self, mut f: Term, mut fty: Term, args: &[Surface]) -> Result<(Term, Term), ElabError> {
        for a in args {
            match whnf(&self.metas.instantiate(&fty), self.env, self.metas) {
                Term::Pi { ty, body, .. } => {
                    let arg = self.elab(a, Some(&ty))?;
                    fty = body.instantiate1(&arg);
                    f = Term::app(f, arg);
                }
                _ => return Err(ElabError::NotAFunction(self.show(&f))),
            }
        }
        Ok((f, fty))
    }

    fn infer(&mut self, s: &Surface, expected: Option<&Term>) -> Result<(Term, Term), ElabError> {
        match s {
            Surface::Var(name, _) => {
                if let Some(d) = self.ctx.find_by_name(name) {
                    return Ok((Term::FVar(d.fvar), d.ty.clone()));
                }
                let declared = self
                    .scope
                    .as_ref()
                    .is_some_and(|sc| sc.nonterminals.iter().any(|n| n == name));
                if declared {
                    return Ok(self.nonterminal(name, false));
                }
                if let Some(r) = self.constant(name, false) {
                    return Ok(r);
                }
                if self.scope.as_ref().is_some_and(|sc| sc.auto) {
                    return Ok(self.nonterminal(name, true));
                }
                Err(ElabError::UnknownIdent(name.clone()))
            }
            Surface::ExplicitVar(name, _) => self
                .constant(name, true)
                .ok_or_else(|| ElabError::UnknownIdent(name.clone())),
            Surface::Num(n, _) => {
                // Where a raw literal is expected a numeral stands for itself.
                let nat_rep = Term::cnst(crate::env::NAT_REP);
                if expected.is_some_and(|e| crate::kernel::whnf(e, self.env, self.metas) == nat_rep) {
                    return Ok((Term::NatLit(n.clone()), nat_rep));
                }
                let ty = self.new_meta(Term::ty());
                let t = Term::apps(Term::cnst("numCast"), [ty.clone(), Term::NatLit(n.clone())]);
                Ok((t, ty))
            }
            Surface::NatLit(n) => Ok((Term::NatLit(n.clone()), Term::cnst(crate::env::NAT_REP))),
            Surface::Sort(l) => Ok((Term::Sort(*l), Term::ty())),
            Surface::Hole(_) => {
                let ty = match expected {
                    Some(e) => e.clone(),
                    None => self.new_meta(Term::ty()),
                };
                Ok((self.new_meta(ty.clone()), ty))
            }
            Surface::App(..) => {
                let mut args = Vec::new();
                let mut head = s;
                while let Surface::App(f, a) = head {
                    args.push((**a).clone());
                    head = f;
                }
                args.reverse();
                let (f, fty) = self.infer(head, None)?;
                self.apply(f, fty, &args)
            }
            Surface::Notation(op, args) => {
                let (f, fty) = self
                    .constant(op.constant(), false)
                    .ok_or_else(|| ElabError::UnknownIdent(op.constant().into()))?;
                self.apply(f, fty, args)
            }
            Surface::Lam(binders, body) => self.lam(binders, body, expected),
            Surface::Pi(binders, body) => {
                let t = self.pi(binders, body)?;
                let ty = self.type_of(&t)?;
                Ok((t, ty))
            }
            Surface::Arrow(a, b) => {
                let dom = self.elab_type(a)?;
                let cod = self.elab_type(b)?;
                let t = Term::arrow(dom, cod);
                let ty = self.type_of(&t)?;
                Ok((t, ty))
            }
            Surface::Let(name, ty, value, body) => {
                let ty = match ty {
                    Some(t) => self.elab_type(t)?,
                    None => self.new_meta(Term::ty()),
                };
                let v = self.elab(value, Some(&ty))?;
                let ty = self.metas.instantiate(&ty);
                let v = self.metas.instantiate(&v);
                let x = self.ctx.push_let(name.clone(), ty.clone(), v.clone());
                let r = self.infer(body, expected).and_then(|(b, bty)| {
                    if let Some(e) = expected {
                        self.expect_type(&b, &bty, e)?;
                    }
                    Ok((b, bty))
                });
                self.ctx.pop();
                let (b, bty) = r?;
                let b = self.metas.instantiate(&b).abstract_fvar(x);
                let bty = self.metas.instantiate(&bty).abstract_fvar(x).instantiate1(&v);
                Ok((Term::let_(name.clone(), ty, v, b), bty))
            }
            Surface::Ascribe(e, ty) => {
                let ty = self.elab_type(ty)?;
                let t = self.elab(e, Some(&ty))?;
                Ok((t, ty))
            }
        }
    }

    fn lam(&mut self, binders: &[SBinder], body: &Surface, expected: Option<&Term>) -> Result<(Term, Term), ElabError> {
        let Some((b, rest)) = binders.split_first() else {
            return self.infer(body, expected);
        };
        let exp_pi = expected.map(|e| whnf(&self.metas.instantiate(e), self.env, self.metas));
        let (exp_dom, exp_body) = match exp_pi {
            Some(Term::Pi { ty, body, .. }) => (Some(*ty), Some(*body)),
            _ => (None, None),
        };
        let dom = match (&b.ty, exp_dom) {
            (Some(t), _) => self.elab_type(t)?,
            (None, Some(d)) => d,
            (None, None) => self.new_meta(Term::ty()),
        };
        let dom = self.metas.instantiate(&dom);
        let x = self.ctx.push_local(b.name.clone(), dom.clone());
        let exp_inner = exp_body.map(|eb| eb.instantiate1(&Term::FVar(x)));
        let r = self.lam(rest, body, exp_inner.as_ref()).and_then(|(t, ty)| {
            if rest.is_empty() {
                if let Some(e) = &exp_inner {
                    self.expect_type(&t, &ty, e)?;
                }
            }
            Ok((t, ty))
        });
        self.ctx.pop();
        let (t, ty) = r?;
        let t = self.metas.instantiate(&t).abstract_fvar(x);
        let ty = self.metas.instantiate(&ty).abstract_fvar(x);
        Ok((
            Term::lam(b.name.clone(), dom.clone(), t),
            Term::pi(b.name.clone(), dom, ty),
        ))
    }

    fn pi(&mut self, binders: &[SBinder], body: &Surface) -> Result<Term, ElabError> {
        let Some((b, rest)) = binders.split_first() else {
            return self.elab_type(body);
        };
        let dom = match &b.ty {
            Some(t) => self.elab_type(t)?,
            None => self.new_meta(Term::ty()),
        };
        let dom = self.metas.instantiate(&dom);
        let x = self.ctx.push_local(b.name.clone(), dom.clone());
        let r = self.pi(rest, body);
        self.ctx.pop();
        let t = self.metas.instantiate(&r?).abstract_fvar(x);
        Ok(if b.implicit {
            Term::pi_implicit(b.name.clone(), dom, t)
        } else {
            Term::pi(b.name.clone(), dom, t)
        })
    }
}

/// Assigns `default` to every still-unknown numeral type in `t`. Returns how
/// many metavariables were assigned.
pub fn default_numerals(t: &Term, metas: &mut MetaState, default: &Term) -> usize {
    let mut count = 0;
    loop {
        let inst = metas.instantiate(t);
        let mut pending = Vec::new();
        inst.any(&mut |u| {
            if let Term::App(f, _) = u {
                if let Term::App(h, ty) = &**f {
                    if matches!(&**h, Term::Const(c) if c == "numCast") {
                        if let Term::MVar(m) = ty.app_fn() {
                            pending.push((*m, ty.app_num_args()));
                        }
                    }
                }
            }
            false
        });
        let mut progress = false;
        for (m, arity) in pending {
            if metas.is_assigned(m) {
                continue;
            }
            let Some(decl) = metas.decl(m).cloned() else { continue };
            let mut doms = Vec::new();
            let mut ty = decl.ty.clone();
            for _ in 0..arity {
                match ty {
                    Term::Pi { name, ty: d, body, .. } => {
                        doms.push((name, *d));
                        ty = *body;
                    }
                    _ => break,
                }
            }
            if doms.len() != arity {
                continue;
            }
            let mut value = default.clone();
            for (name, d) in doms.into_iter().rev() {
                value = Term::Lam {
                    name,
                    ty: Box::new(d),
                    body: Box::new(value),
                };
            }
            if metas.assign(m, value).is_ok() {
                count += 1;
                progress = true;
            }
        }
        if !progress {
            return count;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::prelude;
    use crate::kernel::check_closed;
    use crate::syntax::{parse_term, show_in};

    fn elab_closed(src: &str) -> Result<(Term, Term), ElabError> {
        let env = prelude();
        let mut metas = MetaState::new();
        let mut el = Elaborator::new(&env, &mut metas);
        let t = el.elab(&parse_term(src).unwrap(), None)?;
        default_numerals(&t, &mut metas, &Term::cnst("Nat"));
        let t = metas.instantiate(&t);
        let ty = check_closed(&t, &LocalContext::new(), &env).expect("well typed");
        Ok((t, ty))
    }

    #[test]
    fn implicit_arguments_are_inserted() {
        let (t, ty) = elab_closed("(1 : Int) + 2").unwrap();
        assert_eq!(ty, Term::cnst("Int"));
        let env = prelude();
        assert_eq!(show_in(&t, &LocalContext::new(), &env), "(1 : Int) + (2 : Int)");
    }

    #[test]
    fn numerals_default_to_nat() {
        let (_, ty) = elab_closed("1 + 2").unwrap();
        assert_eq!(ty, Term::cnst("Nat"));
    }

    #[test]
    fn binders_and_let() {
        let (_, ty) = elab_closed("fun x : Prop => x ∧ True").unwrap();
        assert_eq!(ty, Term::arrow(Term::prop(), Term::prop()));
        let (_, ty) = elab_closed("let y := (3 : Float); y * y").unwrap();
        assert_eq!(ty, Term::cnst("Float"));
    }

    #[test]
    fn errors() {
        assert!(matches!(elab_closed("frobnicate"), Err(ElabError::UnknownIdent(_))));
        assert!(matches!(
            elab_closed("True ∧ (1 : Int)"),
            Err(ElabError::TypeMismatch { .. })
        ));
    }
}
