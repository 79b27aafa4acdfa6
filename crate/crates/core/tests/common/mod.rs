#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use xlat::env::prelude;
use xlat::kernel::{Environment, LocalContext, Term};
use xlat::translate::Translator;

pub const PYTHON: &str = include_str!("../../rules/translate_python.dsl");
pub const PYTHON_ONE_WAY: &str = include_str!("../../rules/translate_python_one_way.dsl");
pub const ARITH: &str = include_str!("../../rules/arith.dsl");
pub const LOGIC: &str = include_str!("../../rules/logic.dsl");
pub const WITH_IDENTITY: &str = include_str!("../../rules/with_identity.dsl");
pub const IRREVERSIBLE: &str = include_str!("../../rules/irreversible.dsl");
pub const DEMO_ENV: &str = include_str!("../../rules/demo.env");

pub fn translator(rules: &str) -> Translator {
    Translator::load(rules, &prelude()).expect("bundled rules compile")
}

pub fn demo_env() -> Environment {
    xlat::env::load_env_file(DEMO_ENV).expect("demo env loads")
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Prop,
    Nat,
}

impl Kind {
    pub fn ty(self) -> Term {
        match self {
            Kind::Prop => Term::prop(),
            Kind::Nat => Term::cnst("Nat"),
        }
    }
}

pub fn nat(n: u32) -> Term {
    Term::apps(Term::cnst("numCast"), [Term::cnst("Nat"), Term::NatLit(n.into())])
}

/// A random well-typed term of the given kind over the prelude, using
/// lets, beta-redexes and products so that reduction has work to do.
pub fn random_term(rng: &mut ChaCha8Rng, kind: Kind, ctx: &mut LocalContext, depth: u32) -> Term {
    let vars: Vec<_> = ctx
        .entries()
        .iter()
        .filter(|d| d.ty == kind.ty())
        .map(|d| d.fvar)
        .collect();
    let leaf = depth == 0 || rng.gen_bool(0.2);
    if leaf {
        if !vars.is_empty() && rng.gen_bool(0.4) {
            return Term::FVar(vars[rng.gen_range(0..vars.len())]);
        }
        return match kind {
            Kind::Prop => Term::cnst(if rng.gen_bool(0.5) { "True" } else { "False" }),
            Kind::Nat => nat(rng.gen_range(0..10)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        // let x : K' := v; body
        0 => {
            let vk = if rng.gen_bool(0.5) { Kind::Prop } else { Kind::Nat };
            let v = random_term(rng, vk, ctx, d);
            let x = ctx.push_local("x", vk.ty());
            let body = random_term(rng, kind, ctx, d);
            ctx.pop();
            Term::let_("x", vk.ty(), v, body.abstract_fvar(x))
        }
        // (fun y : K' => body) arg
        1 => {
            let ak = if rng.gen_bool(0.5) { Kind::Prop } else { Kind::Nat };
            let arg = random_term(rng, ak, ctx, d);
            let y = ctx.push_local("y", ak.ty());
            let body = random_term(rng, kind, ctx, d);
            ctx.pop();
            Term::app(Term::lam("y", ak.ty(), body.abstract_fvar(y)), arg)
        }
        _ => match kind {
            Kind::Prop => match rng.gen_range(0..5) {
                0 => Term::app(Term::cnst("Not"), random_term(rng, Kind::Prop, ctx, d)),
                1 => Term::apps(
                    Term::cnst("And"),
                    [random_term(rng, Kind::Prop, ctx, d), random_term(rng, Kind::Prop, ctx, d)],
                ),
                2 => Term::apps(
                    Term::cnst("Or"),
                    [random_term(rng, Kind::Prop, ctx, d), random_term(rng, Kind::Prop, ctx, d)],
                ),
                3 => Term::apps(
                    Term::cnst("Eq"),
                    [Term::cnst("Nat"), random_term(rng, Kind::Nat, ctx, d), random_term(rng, Kind::Nat, ctx, d)],
                ),
                _ => {
                    let p = ctx.push_local("p", Term::prop());
                    let body = random_term(rng, Kind::Prop, ctx, d);
                    ctx.pop();
                    Term::pi("p", Term::prop(), body.abstract_fvar(p))
                }
            },
            Kind::Nat => {
                let op = if rng.gen_bool(0.5) { "add" } else { "mul" };
                Term::apps(
                    Term::cnst(op),
                    [Term::cnst("Nat"), random_term(rng, Kind::Nat, ctx, d), random_term(rng, Kind::Nat, ctx, d)],
                )
            }
        },
    }
}

/// Full normal form by repeated weak-head reduction of every subterm.
pub fn normalize(t: &Term, env: &Environment) -> Term {
    let ms = xlat::unify::MetaState::new();
    let w = xlat::kernel::whnf(t, env, &ms);
    match w {
        Term::App(f, a) => Term::app(normalize(&f, env), normalize(&a, env)),
        Term::Lam { name, ty, body } => Term::Lam {
            name,
            ty: Box::new(normalize(&ty, env)),
            body: Box::new(normalize(&body, env)),
        },
        Term::Pi { name, ty, body, implicit } => Term::Pi {
            name,
            ty: Box::new(normalize(&ty, env)),
            body: Box::new(normalize(&body, env)),
            implicit,
        },
        other => other,
    }
}

pub mod props {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::{random_term, Kind};
    use xlat::env::prelude;
    use xlat::kernel::{is_def_eq, whnf, FVarId, LocalContext, MVarId, Term};
    use xlat::unify::MetaState;

    /// `whnf (whnf t) == whnf t`.
    pub fn whnf_idempotent(seed: u64) -> Result<(), String> {
        let env = prelude();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if rng.gen_bool(0.5) { Kind::Prop } else { Kind::Nat };
        let t = random_term(&mut rng, kind, &mut LocalContext::new(), 5);
        let ms = MetaState::new();
        let once = whnf(&t, &env, &ms);
        let twice = whnf(&once, &env, &ms);
        if once == twice {
            Ok(())
        } else {
            Err(format!("{t:?}: {once:?} then {twice:?}"))
        }
    }

    fn pattern(rng: &mut ChaCha8Rng, kind: Kind, metas: &[(MVarId, Kind)], depth: u32) -> Term {
        let pool: Vec<_> = metas.iter().filter(|(_, k)| *k == kind).collect();
        if depth == 0 || rng.gen_bool(0.4) {
            if rng.gen_bool(0.7) {
                return Term::MVar(pool[rng.gen_range(0..pool.len())].0);
            }
            return random_term(rng, kind, &mut LocalContext::new(), 0);
        }
        let d = depth - 1;
        match kind {
            Kind::Prop => match rng.gen_range(0..4) {
                0 => Term::app(Term::cnst("Not"), pattern(rng, Kind::Prop, metas, d)),
                1 => Term::apps(
                    Term::cnst("And"),
                    [pattern(rng, Kind::Prop, metas, d), pattern(rng, Kind::Prop, metas, d)],
                ),
                2 => Term::apps(
                    Term::cnst("Or"),
                    [pattern(rng, Kind::Prop, metas, d), pattern(rng, Kind::Prop, metas, d)],
                ),
                _ => Term::apps(
                    Term::cnst("Eq"),
                    [Term::cnst("Nat"), pattern(rng, Kind::Nat, metas, d), pattern(rng, Kind::Nat, metas, d)],
                ),
            },
            Kind::Nat => Term::apps(
                Term::cnst("add"),
                [Term::cnst("Nat"), pattern(rng, Kind::Nat, metas, d), pattern(rng, Kind::Nat, metas, d)],
            ),
        }
    }

    /// A failed `is_def_eq` leaves the metavariable state exactly as it was;
    /// a successful one produces an instance convertible to the target.
    /// Returns whether the comparison failed.
    pub fn rollback_on_failure(seed: u64) -> Result<bool, String> {
        let env = prelude();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ms = MetaState::new();
        let empty = LocalContext::new();
        let metas: Vec<(MVarId, Kind)> = [Kind::Prop, Kind::Prop, Kind::Nat, Kind::Nat]
            .into_iter()
            .map(|k| (ms.fresh_meta(&empty, k.ty()), k))
            .collect();
        let p = pattern(&mut rng, Kind::Prop, &metas, 3);
        let t = random_term(&mut rng, Kind::Prop, &mut LocalContext::new(), 3);
        let before = ms.clone();
        if is_def_eq(&p, &t, &empty, &env, &mut ms) {
            let inst = ms.instantiate(&p);
            if is_def_eq(&inst, &t, &empty, &env, &mut MetaState::new()) || inst.has_mvars() {
                Ok(false)
            } else {
                Err(format!("{p:?} matched {t:?} but instantiates to {inst:?}"))
            }
        } else if ms == before {
            Ok(true)
        } else {
            Err(format!("failed comparison of {p:?} and {t:?} changed the state"))
        }
    }

    /// Abstracting a free variable and instantiating the hole with it again
    /// is the identity; instantiating with another term substitutes it.
    pub fn abstract_instantiate_inverse(seed: u64) -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ctx = LocalContext::new();
        let x: FVarId = ctx.push_local("x", Term::prop());
        let t = random_term(&mut rng, Kind::Prop, &mut ctx, 5);
        let body = t.abstract_fvar(x);
        if body.has_fvar(x) {
            return Err(format!("{t:?}: variable survives abstraction"));
        }
        if body.instantiate1(&Term::FVar(x)) != t {
            return Err(format!("{t:?}: abstract then instantiate differs"));
        }
        let v = random_term(&mut rng, Kind::Prop, &mut LocalContext::new(), 2);
        let subst = t.replace(&mut |u| matches!(u, Term::FVar(f) if *f == x).then(|| v.clone()));
        // One beta step on `(fun x => body) v`.
        let redex = Term::app(Term::lam("x", Term::prop(), body), v);
        let Term::App(f, a) = &redex else { unreachable!() };
        let Term::Lam { body, .. } = &**f else { unreachable!() };
        if body.instantiate1(a) != subst {
            return Err(format!("{t:?}: beta-reduction differs from substitution"));
        }
        Ok(())
    }
}
