//! Randomised round-trip checking.
//!
//! Cases are random derivations over the rules usable in both directions,
//! built type-directed so that most of them elaborate. Each case checks that
//! rendering a term and reading it back gives a definitionally equal term,
//! and that rendering is stable on its own output at the tree level.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::emit::MatchTree;
use crate::kernel::{check_closed, infer_type, is_def_eq, whnf, LocalContext, Term};
use crate::rulespec::{CompiledRule, Direction, RuleKind, Slot};
use crate::syntax::show_in;
use crate::translate::Translator;
use crate::unify::MetaState;

const NAMES: [&str; 5] = ["a", "b", "x", "y", "z"];
const ATTEMPTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// No well-typed derivation was found for this seed.
    Skipped,
    Fail { term: String, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub count: usize,
    pub passed: usize,
    pub skipped: usize,
    pub failed: usize,
    /// First failure in case order: the term in core syntax and the reason.
    pub first_failure: Option<(usize, String, String)>,
    /// Rules left out of generation, as `(index, reason)`.
    pub excluded: Vec<(usize, &'static str)>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    fn from_outcomes(tr: &Translator, outcomes: Vec<Outcome>) -> Report {
        let mut r = Report {
            count: outcomes.len(),
            excluded: excluded_rules(tr),
            ..Report::default()
        };
        for (i, o) in outcomes.into_iter().enumerate() {
            match o {
                Outcome::Pass => r.passed += 1,
                Outcome::Skipped => r.skipped += 1,
                Outcome::Fail { term, reason } => {
                    r.failed += 1;
                    r.first_failure.get_or_insert((i, term, reason));
                }
            }
        }
        r
    }
}

/// Rules not used for generation and why.
pub fn excluded_rules(tr: &Translator) -> Vec<(usize, &'static str)> {
    tr.rules
        .rules
        .iter()
        .filter_map(|r| {
            let why = if r.direction != Direction::Both {
                "one-way"
            } else if r.grouping {
                "grouping"
            } else if r.prec.kind == RuleKind::Bare {
                "no terminal"
            } else {
                return None;
            };
            Some((r.index, why))
        })
        .collect()
}

/// Checks `count` cases, case `i` seeded with `seed + i`.
#[cfg(feature = "parallel")]
pub fn run(tr: &Translator, seed: u64, count: usize, max_depth: usize) -> Report {
    use rayon::prelude::*;
    let outcomes = (0..count)
        .into_par_iter()
        .map(|i| check_case(tr, seed.wrapping_add(i as u64), max_depth))
        .collect();
    Report::from_outcomes(tr, outcomes)
}

#[cfg(not(feature = "parallel"))]
pub fn run(tr: &Translator, seed: u64, count: usize, max_depth: usize) -> Report {
    run_sequential(tr, seed, count, max_depth)
}

pub fn run_sequential(tr: &Translator, seed: u64, count: usize, max_depth: usize) -> Report {
    let outcomes = (0..count)
        .map(|i| check_case(tr, seed.wrapping_add(i as u64), max_depth))
        .collect();
    Report::from_outcomes(tr, outcomes)
}

/// Generates a closed, well-typed term and the text it was read from.
pub fn random_term(tr: &Translator, seed: u64, max_depth: usize) -> Option<(String, Term)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ATTEMPTS {
        let mut g = Gen {
            tr,
            rules: tr
                .rules
                .rules
                .iter()
                .filter(|r| r.direction == Direction::Both && !r.grouping && r.prec.kind != RuleKind::Bare)
                .collect(),
            metas: MetaState::new(),
            rng: &mut rng,
            max_depth,
        };
        let ty = Term::MVar(g.metas.fresh_meta(&LocalContext::new(), Term::ty()));
        let Some(tree) = g.gen(&ty, false, &LocalContext::new(), 0) else {
            continue;
        };
        let Ok(text) = tr.render(&tree) else { continue };
        match tr.from_external(&text, None) {
            Ok((t, _)) if numerals_expressible(tr, &t) => return Some((text, t)),
            _ => {}
        }
    }
    None
}

/// Whether every numeral in `t` is at the default numeral type or at a type
/// that some rule pins with a bare nonterminal, like `"int(" n ")" <==> (n : Int)`.
/// Such numerals can be written anywhere; others, such as one unified with
/// `Prop` through a `let`, may have no external spelling.
pub fn numerals_expressible(tr: &Translator, t: &Term) -> bool {
    let mut types = vec![tr.rules.numeral_default_term()];
    for r in tr.rules.rules.iter().filter(|r| r.direction == Direction::Both) {
        if let ([n], Term::MVar(m)) = (r.nts.as_slice(), &r.template.term) {
            if n.head == *m && n.arity == 0 && !n.ty.has_mvars() {
                types.push(n.ty.clone());
            }
        }
    }
    !t.any(&mut |u| {
        let (head, args) = u.app_spine();
        matches!((head, args.as_slice()), (Term::Const(c), [ty, Term::NatLit(_)]) if c == "numCast" && !types.contains(ty))
    })
}

/// Runs both round-trip checks on the term generated from `seed`.
pub fn check_case(tr: &Translator, seed: u64, max_depth: usize) -> Outcome {
    let Some((_, t)) = random_term(tr, seed, max_depth) else {
        return Outcome::Skipped;
    };
    check_term(tr, &t)
}

/// Term to text to term must be the identity up to definitional equality,
/// and rendering the result again must parse to the same tree.
pub fn check_term(tr: &Translator, t: &Term) -> Outcome {
    let env = tr.env();
    let empty = LocalContext::new();
    let fail = |reason: String| Outcome::Fail {
        term: show_in(t, &empty, env),
        reason,
    };
    if let Err(e) = check_closed(t, &empty, env) {
        return fail(format!("input is ill-typed: {e}"));
    }
    let s1 = match tr.to_external(t) {
        Ok(s) => s,
        Err(e) => return fail(format!("emit: {e}")),
    };
    let t1 = match tr.from_external(&s1, None) {
        Ok((t1, _)) => t1,
        Err(e) => return fail(format!("elaborate `{s1}`: {e}")),
    };
    if !is_def_eq(t, &t1, &empty, env, &mut MetaState::new()) {
        return fail(format!("`{s1}` reads back as `{}`", show_in(&t1, &empty, env)));
    }
    let s2 = match tr.to_external(&t1) {
        Ok(s) => s,
        Err(e) => return fail(format!("emit after read-back: {e}")),
    };
    let g = tr.grouping();
    match (tr.parse(&s1), tr.parse(&s2)) {
        (Ok(c1), Ok(c2)) if MatchTree::from_cst(&c1, &g) == MatchTree::from_cst(&c2, &g) => Outcome::Pass,
        (Ok(_), Ok(_)) => fail(format!("`{s1}` renders back as `{s2}` with a different tree")),
        (Err(e), _) | (_, Err(e)) => fail(format!("re-parse: {e}")),
    }
}

struct Gen<'a, 'r> {
    tr: &'a Translator,
    rules: Vec<&'a CompiledRule>,
    metas: MetaState,
    rng: &'r mut ChaCha8Rng,
    max_depth: usize,
}

enum Choice<'a> {
    Rule(&'a CompiledRule),
    Numeral,
    Var(usize),
}

impl<'a> Gen<'a, '_> {
    fn gen(&mut self, ty: &Term, forced: bool, ctx: &LocalContext, depth: usize) -> Option<MatchTree> {
        let leaf_only = depth >= self.max_depth;
        let mut inner = Vec::new();
        let mut leaves = vec![Choice::Numeral];
        leaves.extend((0..ctx.len()).map(Choice::Var));
        for r in &self.rules {
            if r.nts.is_empty() {
                leaves.push(Choice::Rule(r));
            } else if !leaf_only {
                inner.push(Choice::Rule(r));
            }
        }
        inner.shuffle(self.rng);
        leaves.shuffle(self.rng);
        // Prefer growing the tree while there is depth left.
        let order = if !inner.is_empty() && self.rng.gen_bool(0.7) {
            inner.into_iter().chain(leaves).collect::<Vec<_>>()
        } else {
            leaves.into_iter().chain(inner).collect()
        };
        for c in order {
            let cp = self.metas.checkpoint();
            if let Some(t) = self.try_choice(&c, ty, forced, ctx, depth) {
                self.metas.commit(cp);
                return Some(t);
            }
            self.metas.rollback(cp);
        }
        None
    }

    fn try_choice(&mut self, c: &Choice<'a>, ty: &Term, forced: bool, ctx: &LocalContext, depth: usize) -> Option<MatchTree> {
        let env = self.tr.env();
        match c {
            Choice::Numeral => {
                let default = self.tr.rules.numeral_default_term();
                let ok = is_def_eq(ty, &default, ctx, env, &mut self.metas)
                    || (forced && !matches!(self.metas.instantiate(ty), Term::Sort(_)));
                ok.then(|| MatchTree::Numeral(self.rng.gen_range(0u32..20).into()))
            }
            Choice::Var(i) => {
                let d = ctx.entries()[*i].clone();
                is_def_eq(&d.ty, ty, ctx, env, &mut self.metas).then_some(MatchTree::Ident(d.name))
            }
            Choice::Rule(r) => self.rule(r, ty, ctx, depth),
        }
    }

    fn rule(&mut self, r: &CompiledRule, ty: &Term, ctx: &LocalContext, depth: usize) -> Option<MatchTree> {
        let env = self.tr.env();
        let tr = self.metas.transport(&r.template, ctx);
        let pty = infer_type(&tr.term, ctx, env, &self.metas).ok()?;
        if !is_def_eq(&pty, ty, ctx, env, &mut self.metas) {
            return None;
        }
        let mut names = std::collections::BTreeMap::new();
        for slot in &r.slots {
            if let Slot::Capture { name, .. } = slot {
                let pick = NAMES[self.rng.gen_range(0..NAMES.len())];
                names.insert(name.clone(), pick.to_string());
            }
        }
        let mut children = Vec::with_capacity(r.slots.len());
        for slot in &r.slots {
            match slot {
                Slot::Capture { name, .. } => children.push(MatchTree::Ident(names[name].clone())),
                Slot::Nonterminal { nt: None, .. } => return None,
                Slot::Nonterminal { nt: Some(k), .. } => {
                    let info = &r.nts[*k];
                    let mut ext = ctx.clone();
                    let mut cty = self.metas.instantiate(&self.metas.decl(tr.nonterminals[*k])?.ty.clone());
                    for j in 0..info.arity {
                        let Term::Pi { name, ty, body, .. } = whnf(&cty, env, &self.metas) else {
                            return None;
                        };
                        let shown = info
                            .binder_names
                            .get(j)
                            .and_then(|b| names.get(b).cloned())
                            .unwrap_or_else(|| name.as_str().to_string());
                        let x = ext.push_local(shown, self.metas.instantiate(&ty));
                        cty = body.instantiate1(&Term::FVar(x));
                    }
                    let forced = info.arity == 0 && !info.ty.has_mvars();
                    children.push(self.gen(&cty, forced, &ext, depth + 1)?);
                }
            }
        }
        Some(MatchTree::Node {
            rule: r.index,
            children,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::prelude;

    const PY: &str = "external translate_Python where\n\"True\" <==> True\n\"False\" <==> False\n\"not\" x <==> ¬ x\n\"int(\" n \")\" <==> (n : Int)\n\"float(\" n \")\" <==> (n : Float)\n($name) \"=\" val \";\" rest <==> let name := val; rest\na \"+\" b <==> a + b\n\"(\" x \")\" <==> x\n";

    #[test]
    fn generation_is_deterministic() {
        let tr = Translator::load(PY, &prelude()).unwrap();
        let a: Vec<_> = (0..20).map(|i| random_term(&tr, i, 4).map(|p| p.0)).collect();
        let b: Vec<_> = (0..20).map(|i| random_term(&tr, i, 4).map(|p| p.0)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(Option::is_some));
    }

    #[test]
    fn small_batch_passes() {
        let tr = Translator::load(PY, &prelude()).unwrap();
        let r = run_sequential(&tr, 7, 100, 5);
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.skipped, 0);
        assert_eq!(r.excluded, vec![(7, "grouping")]);
    }

    #[test]
    fn empty_batch_is_vacuous() {
        let tr = Translator::load(PY, &prelude()).unwrap();
        let r = run(&tr, 0, 0, 6);
        assert_eq!((r.count, r.failed), (0, 0));
    }
}
