//! Definitional equality with metavariable assignment.
//!
//! Equality is checked up to beta, zeta and delta (reducible constants only),
//! alpha-renaming, and solution of metavariables. Flex-rigid problems are solved
//! directly or, when the flexible side is applied to distinct free variables,
//! by abstracting those variables (the pattern fragment). Other flexible
//! applications fall back to first-order matching of application spines.
//! Eta is not implemented.

use super::context::LocalContext;
use super::environment::Environment;
use super::reduce::{step_core, unfold_head, whnf_core};
use super::term::{FVarId, MVarId, Term};
use super::typing::infer_type;
use crate::unify::MetaState;

/// Checks `a ≡ b` in `ctx`. On success the assignments that witnessed the
/// equality are kept; on failure `metas` is left exactly as it was.
pub fn is_def_eq(
    a: &Term,
    b: &Term,
    ctx: &LocalContext,
    env: &Environment,
    metas: &mut MetaState,
) -> bool {
    DefEq::new(env, ctx.clone()).def_eq(a, b, metas)
}

const FUEL: usize = 20_000;

pub(crate) struct DefEq<'a> {
    env: &'a Environment,
    ctx: LocalContext,
    fuel: usize,
}

impl<'a> DefEq<'a> {
    pub(crate) fn new(env: &'a Environment, ctx: LocalContext) -> Self {
        DefEq {
            env,
            ctx,
            fuel: FUEL,
        }
    }

    pub(crate) fn def_eq(&mut self, a: &Term, b: &Term, metas: &mut MetaState) -> bool {
        metas.transaction(|m| self.go(a, b, m))
    }

    fn go(&mut self, a: &Term, b: &Term, metas: &mut MetaState) -> bool {
        if self.fuel == 0 {
            return false;
        }
        self.fuel -= 1;

        let a = instantiate_head(a, metas);
        let b = instantiate_head(b, metas);
        if a == b {
            return true;
        }

        let fa = flex_head(&a, metas);
        let fb = flex_head(&b, metas);
        if fa.is_some() || fb.is_some() {
            return self.solve_flex(&a, fa, &b, fb, metas);
        }

        if let Some(res) = self.congruence(&a, &b, metas) {
            if res {
                return true;
            }
        }

        let ra = step_core(&a, metas);
        let rb = step_core(&b, metas);
        if ra.is_some() || rb.is_some() {
            let a2 = ra.map(|t| whnf_core(&t, metas)).unwrap_or(a);
            let b2 = rb.map(|t| whnf_core(&t, metas)).unwrap_or(b);
            return self.go(&a2, &b2, metas);
        }

        let ua = unfold_head(&a, self.env);
        let ub = unfold_head(&b, self.env);
        if ua.is_some() || ub.is_some() {
            let a2 = ua.unwrap_or(a);
            let b2 = ub.unwrap_or(b);
            return self.go(&a2, &b2, metas);
        }

        // Let-bound free variables unfold to their values as a last resort.
        let za = self.zeta_fvar(&a);
        let zb = self.zeta_fvar(&b);
        if za.is_some() || zb.is_some() {
            let a2 = za.unwrap_or(a);
            let b2 = zb.unwrap_or(b);
            return self.go(&a2, &b2, metas);
        }
        false
    }

    fn zeta_fvar(&self, t: &Term) -> Option<Term> {
        let (head, args) = t.app_spine();
        match head {
            Term::FVar(id) => self
                .ctx
                .get(*id)
                .and_then(|d| d.value.clone())
                .map(|v| Term::apps(v, args.into_iter().cloned()).head_beta()),
            _ => None,
        }
    }

    /// Structural comparison of terms with the same outer shape. `None` when
    /// the shapes do not line up.
    fn congruence(&mut self, a: &Term, b: &Term, metas: &mut MetaState) -> Option<bool> {
        match (a, b) {
            (Term::Sort(x), Term::Sort(y)) => Some(x == y),
            (Term::NatLit(x), Term::NatLit(y)) => Some(x == y),
            (Term::Lam { ty: t1, body: b1, name }, Term::Lam { ty: t2, body: b2, .. })
            | (
                Term::Pi {
                    ty: t1,
                    body: b1,
                    name,
                    ..
                },
                Term::Pi { ty: t2, body: b2, .. },
            ) => Some(metas.transaction(|m| {
                self.go(t1, t2, m) && {
                    let dom = m.instantiate(t1);
                    self.under_binder(name.as_str(), dom, None, b1, b2, m)
                }
            })),
            (
                Term::Let {
                    name,
                    ty: t1,
                    value: v1,
                    body: b1,
                },
                Term::Let {
                    ty: t2,
                    value: v2,
                    body: b2,
                    ..
                },
            ) => Some(metas.transaction(|m| {
                self.go(t1, t2, m) && self.go(v1, v2, m) && {
                    let ty = m.instantiate(t1);
                    let val = m.instantiate(v1);
                    self.under_binder(name.as_str(), ty, Some(val), b1, b2, m)
                }
            })),
            (Term::App(..), Term::App(..)) => {
                let (h1, args1) = a.app_spine();
                let (h2, args2) = b.app_spine();
                let rigid_same = match (h1, h2) {
                    (Term::Const(x), Term::Const(y)) => x == y,
                    (Term::FVar(x), Term::FVar(y)) => x == y,
                    _ => false,
                };
                if !rigid_same || args1.len() != args2.len() {
                    return None;
                }
                Some(metas.transaction(|m| {
                    args1
                        .iter()
                        .zip(&args2)
                        .all(|(x, y)| self.go(x, y, m))
                }))
            }
            _ => None,
        }
    }

    fn under_binder(
        &mut self,
        name: &str,
        ty: Term,
        value: Option<Term>,
        b1: &Term,
        b2: &Term,
        metas: &mut MetaState,
    ) -> bool {
        let x = match value {
            Some(v) => self.ctx.push_let(name, ty, v),
            None => self.ctx.push_local(name, ty),
        };
        let fx = Term::FVar(x);
        let ok = self.go(&b1.instantiate1(&fx), &b2.instantiate1(&fx), metas);
        self.ctx.pop();
        ok
    }

    fn solve_flex(
        &mut self,
        a: &Term,
        fa: Option<MVarId>,
        b: &Term,
        fb: Option<MVarId>,
        metas: &mut MetaState,
    ) -> bool {
        match (fa, fb) {
            (Some(ma), Some(mb)) => {
                // Assign the younger metavariable to the older one first, but
                // try pattern solutions on both sides before approximating
                // first-order, which may commit arguments too eagerly.
                let (first, second) = if ma > mb { ((a, ma), (b, mb)) } else { ((b, mb), (a, ma)) };
                for (x, y) in [(first, second), (second, first)] {
                    if metas.transaction(|m| self.solve_pattern(x.0, x.1, y.0, m)) {
                        return true;
                    }
                }
                if metas.transaction(|m| self.solve(first.0, first.1, second.0, m)) {
                    return true;
                }
                metas.transaction(|m| self.solve(second.0, second.1, first.0, m))
            }
            (Some(ma), None) => self.solve(a, ma, b, metas),
            (None, Some(mb)) => self.solve(b, mb, a, metas),
            (None, None) => unreachable!(),
        }
    }

    /// Solves `?m args =?= rhs` only when `args` are distinct variables.
    fn solve_pattern(&mut self, flex: &Term, m: MVarId, rhs: &Term, metas: &mut MetaState) -> bool {
        let (_, args) = flex.app_spine();
        (args.is_empty() || distinct_fvars(&args).is_some()) && self.solve(flex, m, rhs, metas)
    }

    /// Solves `?m args =?= rhs`.
    fn solve(&mut self, flex: &Term, m: MVarId, rhs: &Term, metas: &mut MetaState) -> bool {
        let (_, args) = flex.app_spine();
        if args.is_empty() {
            let rhs = metas.instantiate(rhs);
            return self.assign_checked(m, rhs, metas);
        }
        if let Some(fvars) = distinct_fvars(&args) {
            let rhs = metas.instantiate(rhs);
            let mut ok = true;
            let mut value = rhs.abstract_fvars(&fvars);
            for (i, f) in fvars.iter().enumerate().rev() {
                let Some(decl) = self.ctx.get(*f) else {
                    ok = false;
                    break;
                };
                value = Term::Lam {
                    name: decl.name.as_str().into(),
                    ty: Box::new(metas.instantiate(&decl.ty).abstract_fvars(&fvars[..i])),
                    body: Box::new(value),
                };
            }
            if ok && metas.transaction(|ms| self.assign_checked(m, value, ms)) {
                return true;
            }
        }
        // Outside the pattern fragment: match application spines first-order.
        metas.transaction(|ms| match (flex, rhs) {
            (Term::App(f1, a1), Term::App(f2, a2)) => self.go(f1, f2, ms) && self.go(a1, a2, ms),
            _ => false,
        }) || {
            // The rigid side may still reduce into something matchable.
            match unfold_head(rhs, self.env).or_else(|| self.zeta_fvar(rhs)) {
                Some(r) => self.go(flex, &r, metas),
                None => false,
            }
        } || metas.transaction(|ms| self.const_approx(m, &args, rhs, ms))
    }

    /// Last resort for `?m a1..an =?= rhs` outside the pattern fragment:
    /// `?m := λ _.. _, rhs`, ignoring the arguments.
    fn const_approx(&mut self, m: MVarId, args: &[&Term], rhs: &Term, metas: &mut MetaState) -> bool {
        let rhs = metas.instantiate(rhs);
        let n = args.len() as u32;
        let mut value = rhs.lift_loose(0, n);
        for (i, a) in args.iter().enumerate().rev() {
            let Ok(ty) = infer_type(a, &self.ctx, self.env, metas) else {
                return false;
            };
            value = Term::Lam {
                name: "_".into(),
                ty: Box::new(metas.instantiate(&ty).lift_loose(0, i as u32)),
                body: Box::new(value),
            };
        }
        self.assign_checked(m, value, metas)
    }

    fn assign_checked(&mut self, m: MVarId, value: Term, metas: &mut MetaState) -> bool {
        if value == Term::MVar(m) {
            return true;
        }
        let Some(decl) = metas.decl(m).cloned() else {
            return false;
        };
        // Scope is checked against the metavariable's own context.
        let Ok(vty) = infer_type(&value, &self.ctx, self.env, metas) else {
            return false;
        };
        if metas.assign(m, value).is_err() {
            return false;
        }
        self.go(&decl.ty, &vty, metas)
    }
}

/// Instantiates an assigned metavariable at the head and beta-reduces.
fn instantiate_head(t: &Term, metas: &MetaState) -> Term {
    let mut t = t.clone();
    loop {
        match t.app_fn() {
            Term::MVar(m) if metas.is_assigned(*m) => {
                t = step_core(&t, metas).expect("assigned head reduces");
            }
            _ => return t,
        }
    }
}

fn flex_head(t: &Term, metas: &MetaState) -> Option<MVarId> {
    match t.app_fn() {
        Term::MVar(m) if !metas.is_assigned(*m) => Some(*m),
        _ => None,
    }
}

fn distinct_fvars(args: &[&Term]) -> Option<Vec<FVarId>> {
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        match a {
            Term::FVar(f) if !out.contains(f) => out.push(*f),
            _ => return None,
        }
    }
    Some(out)
}
