use super::environment::Environment;
use super::term::Term;
use crate::unify::MetaState;

/// Head reduction without unfolding constants: beta, zeta, and instantiation
/// of an assigned metavariable in head position.
pub fn whnf_core(t: &Term, metas: &MetaState) -> Term {
    let mut t = t.clone();
    loop {
        match step_core(&t, metas) {
            Some(next) => t = next,
            None => return t,
        }
    }
}

/// One head step of [`whnf_core`], if any applies.
pub(crate) fn step_core(t: &Term, metas: &MetaState) -> Option<Term> {
    match t {
        Term::Let { value, body, .. } => Some(body.instantiate1(value)),
        Term::MVar(m) => metas.assignment(*m).cloned(),
        Term::App(..) => {
            let (head, args) = t.app_spine();
            match head {
                Term::Lam { .. } => Some(t.head_beta()),
                Term::MVar(m) => metas
                    .assignment(*m)
                    .map(|v| Term::apps(v.clone(), args.into_iter().cloned()).head_beta()),
                Term::Let { value, body, .. } => Some(Term::apps(
                    body.instantiate1(value),
                    args.into_iter().cloned(),
                )),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Replaces a reducible constant in head position by its definition.
pub(crate) fn unfold_head(t: &Term, env: &Environment) -> Option<Term> {
    let (head, args) = t.app_spine();
    match head {
        Term::Const(name) => env
            .unfold(name)
            .map(|def| Term::apps(def.clone(), args.into_iter().cloned()).head_beta()),
        _ => None,
    }
}

/// A single head step: [`whnf_core`]'s step, else one delta-unfolding.
pub fn step_once(t: &Term, env: &Environment, metas: &MetaState) -> Option<Term> {
    step_core(t, metas).or_else(|| unfold_head(t, env))
}

/// Weak head normal form: [`whnf_core`] plus delta-unfolding of reducible
/// constants. Terminates because definitions are not recursive.
pub fn whnf(t: &Term, env: &Environment, metas: &MetaState) -> Term {
    let mut t = whnf_core(t, metas);
    while let Some(u) = unfold_head(&t, env) {
        t = whnf_core(&u, metas);
    }
    t
}
