use super::context::LocalContext;
use super::defeq::DefEq;
use super::environment::Environment;
use super::error::KernelError;
use super::reduce::whnf;
use super::term::{Level, Term};
use crate::syntax::show;
use crate::unify::MetaState;

/// Infers the type of `t` without checking arguments against parameter types.
///
/// Metavariable types are read from `metas`; nothing is assigned.
pub fn infer_type(
    t: &Term,
    ctx: &LocalContext,
    env: &Environment,
    metas: &MetaState,
) -> Result<Term, KernelError> {
    let mut ctx = ctx.clone();
    Inferer {
        env,
        metas,
        checking: false,
    }
    .infer(t, &mut ctx)
}

/// Full type check of a metavariable-free term.
///
/// Every application argument, let value and binder domain is checked. Free
/// variables must be declared in `ctx`; a free variable that escaped its binder
/// is reported as [`KernelError::UnscopedVar`].
pub fn check_closed(t: &Term, ctx: &LocalContext, env: &Environment) -> Result<Term, KernelError> {
    if let Some(m) = t.mvars().first() {
        return Err(KernelError::UnknownMeta(m.to_string()));
    }
    let metas = MetaState::new();
    let mut ctx = ctx.clone();
    Inferer {
        env,
        metas: &metas,
        checking: true,
    }
    .infer(t, &mut ctx)
}

struct Inferer<'a> {
    env: &'a Environment,
    metas: &'a MetaState,
    checking: bool,
}

impl Inferer<'_> {
    fn whnf(&self, t: &Term) -> Term {
        whnf(t, self.env, self.metas)
    }

    fn conv(&self, expected: &Term, actual: &Term, ctx: &LocalContext) -> bool {
        let mut scratch = self.metas.clone();
        DefEq::new(self.env, ctx.clone()).def_eq(expected, actual, &mut scratch)
    }

    fn ensure_sort(&self, t: &Term, ctx: &mut LocalContext, location: &str) -> Result<Level, KernelError> {
        let ty = self.infer(t, ctx)?;
        match self.whnf(&ty) {
            Term::Sort(l) => Ok(l),
            other if self.checking => Err(KernelError::IllTyped {
                location: location.to_string(),
                expected: "a sort".into(),
                actual: show(&other),
            }),
            _ => Ok(Level::Type),
        }
    }

    fn infer(&self, t: &Term, ctx: &mut LocalContext) -> Result<Term, KernelError> {
        match t {
            Term::Sort(_) => Ok(Term::ty()),
            Term::Const(name) => self
                .env
                .get(name)
                .map(|d| d.ty.clone())
                .ok_or_else(|| KernelError::UnknownConst(name.clone())),
            Term::FVar(id) => ctx
                .get(*id)
                .map(|d| d.ty.clone())
                .ok_or_else(|| KernelError::UnscopedVar(format!("free variable #{}", id.0))),
            Term::BVar(i) => Err(KernelError::UnscopedVar(format!("loose bound variable {i}"))),
            Term::MVar(m) => self
                .metas
                .decl(*m)
                .map(|d| d.ty.clone())
                .ok_or_else(|| KernelError::UnknownMeta(m.to_string())),
            Term::NatLit(_) => Ok(Term::cnst(crate::env::NAT_REP)),
            Term::App(..) => {
                let (head, args) = t.app_spine();
                let mut fty = self.infer(head, ctx)?;
                for arg in args {
                    let pi = match &fty {
                        Term::Pi { .. } => fty.clone(),
                        _ => self.whnf(&fty),
                    };
                    match pi {
                        Term::Pi { ty, body, .. } => {
                            if self.checking {
                                let aty = self.infer(arg, ctx)?;
                                if !self.conv(&ty, &aty, ctx) {
                                    return Err(KernelError::IllTyped {
                                        location: format!("argument `{}`", show(arg)),
                                        expected: show(&ty),
                                        actual: show(&aty),
                                    });
                                }
                            }
                            fty = body.instantiate1(arg);
                        }
                        other => {
                            return Err(KernelError::IllTyped {
                                location: format!("application of `{}`", show(head)),
                                expected: "a function type".into(),
                                actual: show(&other),
                            })
                        }
                    }
                }
                Ok(fty)
            }
            Term::Lam { name, ty, body } => {
                if self.checking {
                    self.ensure_sort(ty, ctx, "binder type")?;
                }
                let x = ctx.push_local(name.as_str(), (**ty).clone());
                let body_ty = self.infer(&body.instantiate1(&Term::FVar(x)), ctx);
                ctx.pop();
                Ok(Term::Pi {
                    name: name.clone(),
                    ty: ty.clone(),
                    body: Box::new(body_ty?.abstract_fvar(x)),
                    implicit: false,
                })
            }
            Term::Pi { name, ty, body, .. } => {
                self.ensure_sort(ty, ctx, "binder type")?;
                let x = ctx.push_local(name.as_str(), (**ty).clone());
                // With `Type : Type` and impredicative `Prop` a product lives in
                // the sort of its codomain, so an undetermined codomain sort is
                // passed through rather than guessed.
                let bt = self.infer(&body.instantiate1(&Term::FVar(x)), ctx).map(|t| self.whnf(&t));
                let out = match bt {
                    Ok(Term::Sort(l)) => Ok(Term::Sort(l)),
                    Ok(t) if !self.checking && t.app_fn().is_mvar() && !t.has_fvar(x) => Ok(t),
                    Ok(other) if self.checking => Err(KernelError::IllTyped {
                        location: "codomain".into(),
                        expected: "a sort".into(),
                        actual: show(&other),
                    }),
                    Ok(_) => Ok(Term::ty()),
                    Err(e) => Err(e),
                };
                ctx.pop();
                out
            }
            Term::Let {
                name,
                ty,
                value,
                body,
            } => {
                if self.checking {
                    self.ensure_sort(ty, ctx, "let type")?;
                    let vty = self.infer(value, ctx)?;
                    if !self.conv(ty, &vty, ctx) {
                        return Err(KernelError::IllTyped {
                            location: format!("let value of `{}`", name.as_str()),
                            expected: show(ty),
                            actual: show(&vty),
                        });
                    }
                }
                let x = ctx.push_let(name.as_str(), (**ty).clone(), (**value).clone());
                let body_ty = self.infer(&body.instantiate1(&Term::FVar(x)), ctx);
                ctx.pop();
                Ok(body_ty?.abstract_fvar(x).instantiate1(value))
            }
        }
    }
}
