//! Rule files: parsing, partial elaboration of the term side, direction and
//! priority classification, and precedence inference.

mod parse;
mod prec;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::kernel::{step_once, Environment, MVarId, Term};
use crate::syntax::{parse_term, Elaborator, Printer, RuleScope};
use crate::unify::{MetaState, PatternTemplate, StoredMeta};

pub use parse::{parse_rule_file, Direction, ExtSym, RawRule, RawRuleFile};
pub use prec::{infer_precedences, Prec, RuleKind, BASE, MAX};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: {detail}")]
    Elab { line: usize, detail: String },
    #[error("conflicting precedences {} and {} for `{terminal}` (lines {} and {})", levels.0, levels.1, lines.0, lines.1)]
    PrecedenceConflict {
        terminal: String,
        lines: (usize, usize),
        levels: (u32, u32),
    },
    #[error("unknown numeral type `{0}`")]
    UnknownNumeralType(String),
}

/// Non-fatal diagnostics from [`compile_rules`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleWarning {
    /// A `<==>` rule was downgraded to one direction.
    IrreversibleRule {
        line: usize,
        missing: Vec<String>,
        direction: Direction,
    },
}

impl std::fmt::Display for RuleWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuleWarning::IrreversibleRule {
                line,
                missing,
                direction,
            } => {
                let side = match direction {
                    Direction::ToTermOnly => "term side",
                    _ => "external side",
                };
                write!(
                    f,
                    "line {line}: rule is irreversible: the {side} lacks {}; it is used {}",
                    missing.iter().map(|m| format!("`{m}`")).collect::<Vec<_>>().join(", "),
                    match direction {
                        Direction::ToTermOnly => "only when reading external text",
                        _ => "only when rendering terms",
                    }
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Priority {
    Normal,
    /// The pattern is a bare nonterminal, possibly after one reduction step.
    Low,
}

/// A nonterminal of the term side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NtInfo {
    pub name: String,
    /// Stored metavariable; under `arity` pattern binders it is the lifted head.
    pub head: MVarId,
    pub arity: usize,
    /// Names of the pattern binders the nonterminal is lifted over.
    pub binder_names: Vec<String>,
    /// Binders enclosing a later occurrence that the nonterminal cannot see.
    pub extra: Vec<(String, Term)>,
    /// Type of the nonterminal (a Π over the lifted binders when `arity > 0`).
    pub ty: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    /// Index into [`CompiledRule::nts`], or `None` if the term side omits it.
    Nonterminal { name: String, nt: Option<usize> },
    /// Path from the pattern root to the captured binder.
    Capture { name: String, path: Option<Vec<u8>> },
}

#[derive(Clone, Debug)]
pub struct CompiledRule {
    pub index: usize,
    pub line: usize,
    pub external: Vec<ExtSym>,
    pub term_src: String,
    pub direction: Direction,
    pub priority: Priority,
    /// `"(" x ")" <==> x` shape with an unconstrained type: used for parentheses.
    pub grouping: bool,
    pub template: PatternTemplate,
    pub nts: Vec<NtInfo>,
    /// Nonterminal and capture positions in external order.
    pub slots: Vec<Slot>,
    pub prec: Prec,
    pub right_assoc: bool,
}

impl CompiledRule {
    /// Index in `external` of each slot.
    pub fn slot_positions(&self) -> Vec<usize> {
        self.external
            .iter()
            .enumerate()
            .filter(|(_, s)| !matches!(s, ExtSym::Terminal(_)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.external.iter().filter_map(|s| match s {
            ExtSym::Terminal(t) => Some(t.as_str()),
            _ => None,
        })
    }

    pub fn nt_by_name(&self, name: &str) -> Option<&NtInfo> {
        self.nts.iter().find(|n| n.name == name)
    }

    pub fn external_text(&self) -> String {
        self.external
            .iter()
            .map(|s| match s {
                ExtSym::Terminal(t) => format!("{t:?}"),
                ExtSym::Nonterminal(n) => n.clone(),
                ExtSym::Capture(n) => format!("(${n})"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Clone, Debug)]
pub struct CompiledRuleSet {
    pub name: String,
    pub rules: Vec<CompiledRule>,
    /// Type given to numerals whose type is not otherwise determined.
    pub numeral_default: String,
    pub env: Environment,
}

impl CompiledRuleSet {
    pub fn grouping_rule(&self) -> Option<&CompiledRule> {
        self.rules.iter().find(|r| r.grouping)
    }

    pub fn numeral_default_term(&self) -> Term {
        Term::cnst(self.numeral_default.clone())
    }

    /// Deterministic text form. Metavariables are numbered by first occurrence.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ruleset {} (numerals: {})", self.name, self.numeral_default);
        for r in &self.rules {
            let mut ids: BTreeMap<MVarId, usize> = BTreeMap::new();
            for s in &r.template.stored {
                let k = ids.len();
                ids.entry(s.id).or_insert(k);
            }
            let canon = |t: &Term| {
                let t = t.replace(&mut |u| match u {
                    Term::MVar(m) => Some(Term::cnst(format!("?{}", ids.get(m).copied().unwrap_or(usize::MAX)))),
                    _ => None,
                });
                Printer {
                    env: Some(&self.env),
                    ctx: None,
                }
                .print(&t)
            };
            let _ = writeln!(out, "rule {} (line {}): {} <=> {}", r.index, r.line, r.external_text(), r.term_src);
            let _ = writeln!(
                out,
                "  direction {:?}, priority {:?}, grouping {}, kind {:?}, level {}, left {}, bps {:?}",
                r.direction, r.priority, r.grouping, r.prec.kind, r.prec.level, r.prec.left_req, r.prec.bps
            );
            let _ = writeln!(out, "  pattern {}", canon(&r.template.term));
            for s in &r.template.stored {
                let _ = writeln!(out, "  meta ?{} : {}", ids[&s.id], canon(&s.ty));
            }
            for n in &r.nts {
                let _ = writeln!(
                    out,
                    "  nonterminal {} = ?{} arity {} binders {:?}",
                    n.name, ids[&n.head], n.arity, n.binder_names
                );
            }
        }
        out
    }
}

/// Parses and compiles a rule file against `env`.
pub fn load_rules(text: &str, env: &Environment) -> Result<(CompiledRuleSet, Vec<RuleWarning>), RuleError> {
    compile_rules(&parse_rule_file(text)?, env)
}

pub fn compile_rules(raw: &RawRuleFile, env: &Environment) -> Result<(CompiledRuleSet, Vec<RuleWarning>), RuleError> {
    let numeral_default = raw.number_cast.clone().unwrap_or_else(|| "Nat".to_string());
    match env.get(&numeral_default) {
        Some(d) if d.ty == Term::ty() => {}
        _ => return Err(RuleError::UnknownNumeralType(numeral_default)),
    }
    let precs = infer_precedences(&raw.rules)?;
    let mut rules = Vec::with_capacity(raw.rules.len());
    let mut warnings = Vec::new();
    for (index, (r, prec)) in raw.rules.iter().zip(precs).enumerate() {
        let (rule, warning) = compile_rule(r, index, prec, env)?;
        warnings.extend(warning);
        rules.push(rule);
    }
    Ok((
        CompiledRuleSet {
            name: raw.name.clone(),
            rules,
            numeral_default,
            env: env.clone(),
        },
        warnings,
    ))
}

fn compile_rule(
    r: &RawRule,
    index: usize,
    prec: Prec,
    env: &Environment,
) -> Result<(CompiledRule, Option<RuleWarning>), RuleError> {
    let elab_err = |detail: String| RuleError::Elab { line: r.line, detail };
    let surface = parse_term(&r.term_src).map_err(|e| RuleError::Syntax {
        line: r.line,
        col: if e.line == 1 { r.term_col + e.col - 1 } else { e.col },
        message: e.message,
    })?;
    let ext_nts: Vec<String> = r
        .external
        .iter()
        .filter_map(|s| match s {
            ExtSym::Nonterminal(n) => Some(n.clone()),
            _ => None,
        })
        .collect();

    let mut metas = MetaState::new();
    let (term, scope) = {
        let mut el = Elaborator::new(env, &mut metas);
        el.scope = Some(RuleScope {
            nonterminals: ext_nts.clone(),
            auto: true,
            found: Vec::new(),
        });
        let t = el.elab(&surface, None).map_err(|e| elab_err(e.to_string()))?;
        (t, el.scope.take().unwrap())
    };
    let term = metas.instantiate(&term);
    if term.has_fvars() {
        return Err(elab_err("pattern mentions a variable outside its binder".into()));
    }

    let mut nts = Vec::new();
    for occ in &scope.found {
        let inst = metas.instantiate(&Term::MVar(occ.mvar));
        let (head, args) = inst.app_spine();
        let expected: Vec<Term> = occ.ctx.entries().iter().map(|d| Term::FVar(d.fvar)).collect();
        let head = match head {
            Term::MVar(h) if !metas.is_assigned(*h) && args.iter().copied().eq(expected.iter()) => *h,
            _ => {
                return Err(elab_err(format!(
                    "nonterminal `{}` is fixed by the pattern to `{}`",
                    occ.name,
                    crate::syntax::show(&inst)
                )))
            }
        };
        let extra = occ
            .extra
            .iter()
            .map(|d| (d.name.clone(), metas.instantiate(&d.ty)))
            .collect();
        nts.push(NtInfo {
            name: occ.name.clone(),
            head,
            arity: args.len(),
            binder_names: occ.ctx.entries().iter().map(|d| d.name.clone()).collect(),
            extra,
            ty: metas.instantiate(&metas.decl(head).unwrap().ty),
        });
    }

    // Every unassigned metavariable reachable from the pattern or the
    // nonterminals, in first-occurrence order.
    let mut stored: Vec<StoredMeta> = Vec::new();
    let mut queue: Vec<MVarId> = term.mvars();
    queue.extend(nts.iter().map(|n| n.head));
    let mut i = 0;
    while i < queue.len() {
        let m = queue[i];
        i += 1;
        if stored.iter().any(|s| s.id == m) {
            continue;
        }
        let decl = metas.decl(m).expect("declared");
        if !decl.ctx.is_empty() {
            return Err(elab_err(format!("internal: metavariable {m} has a local context")));
        }
        let ty = metas.instantiate(&decl.ty);
        queue.extend(ty.mvars());
        stored.push(StoredMeta { id: m, ty });
    }

    // Direction.
    let term_names: Vec<&str> = nts.iter().map(|n| n.name.as_str()).collect();
    let missing_in_term: Vec<String> = ext_nts.iter().filter(|n| !term_names.contains(&n.as_str())).cloned().collect();
    let missing_in_ext: Vec<String> = term_names
        .iter()
        .filter(|n| !ext_nts.iter().any(|e| e == *n))
        .map(|n| n.to_string())
        .collect();
    let mut warning = None;
    let direction = match r.arrow {
        Direction::Both => match (missing_in_term.is_empty(), missing_in_ext.is_empty()) {
            (true, true) => Direction::Both,
            (false, false) => {
                return Err(elab_err(format!(
                    "rule is unusable in both directions: `{}` only on the external side, `{}` only on the term side",
                    missing_in_term.join("`, `"),
                    missing_in_ext.join("`, `")
                )))
            }
            (false, true) => {
                warning = Some(RuleWarning::IrreversibleRule {
                    line: r.line,
                    missing: missing_in_term.clone(),
                    direction: Direction::ToTermOnly,
                });
                Direction::ToTermOnly
            }
            (true, false) => {
                warning = Some(RuleWarning::IrreversibleRule {
                    line: r.line,
                    missing: missing_in_ext.clone(),
                    direction: Direction::ToExternalOnly,
                });
                Direction::ToExternalOnly
            }
        },
        Direction::ToExternalOnly if !missing_in_term.is_empty() => {
            return Err(elab_err(format!(
                "`{}` does not occur on the term side, so the rule cannot render",
                missing_in_term.join("`, `")
            )))
        }
        d => d,
    };

    let priority = if is_identity_like(&term, env, &metas) {
        Priority::Low
    } else {
        Priority::Normal
    };

    // Only a bracket pair counts, so `"id(" x ")" <==> x` stays an ordinary rule.
    let grouping = matches!(
        r.external.as_slice(),
        [ExtSym::Terminal(o), ExtSym::Nonterminal(_), ExtSym::Terminal(c)]
            if matches!((o.as_str(), c.as_str()), ("(", ")") | ("[", "]") | ("{", "}"))
    ) && matches!(&term, Term::MVar(m) if nts.first().is_some_and(|n| n.head == *m && n.arity == 0 && matches!(n.ty, Term::MVar(_))));

    let slots = r
        .external
        .iter()
        .filter_map(|s| match s {
            ExtSym::Terminal(_) => None,
            ExtSym::Nonterminal(n) => Some(Slot::Nonterminal {
                name: n.clone(),
                nt: nts.iter().position(|x| &x.name == n),
            }),
            ExtSym::Capture(n) => Some(Slot::Capture {
                name: n.clone(),
                path: find_binder(&term, n),
            }),
        })
        .collect();

    let template = PatternTemplate {
        term,
        stored,
        nonterminals: nts.iter().map(|n| (n.name.clone(), n.head)).collect(),
    };
    Ok((
        CompiledRule {
            index,
            line: r.line,
            external: r.external.clone(),
            term_src: r.term_src.clone(),
            direction,
            priority,
            grouping,
            template,
            nts,
            slots,
            prec,
            right_assoc: r.right_assoc,
        },
        warning,
    ))
}

/// A bare metavariable, or one after a single head reduction or unfolding.
fn is_identity_like(term: &Term, env: &Environment, metas: &MetaState) -> bool {
    if term.is_mvar() {
        return true;
    }
    matches!(step_once(term, env, metas), Some(Term::MVar(_)))
}

/// Path to the first binder named `name`: 0/1 pick function/argument of an
/// application, domain/body of a binder; 0/1/2 pick type/value/body of a let.
pub fn find_binder(t: &Term, name: &str) -> Option<Vec<u8>> {
    fn go(t: &Term, name: &str, path: &mut Vec<u8>) -> bool {
        let children: Vec<&Term> = match t {
            Term::Lam { name: n, ty, body } | Term::Pi { name: n, ty, body, .. } => {
                if n.as_str() == name {
                    return true;
                }
                vec![ty, body]
            }
            Term::Let {
                name: n,
                ty,
                value,
                body,
            } => {
                if n.as_str() == name {
                    return true;
                }
                vec![ty, value, body]
            }
            Term::App(f, a) => vec![f, a],
            _ => vec![],
        };
        for (i, c) in children.into_iter().enumerate() {
            path.push(i as u8);
            if go(c, name, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    go(t, name, &mut path).then_some(path)
}

/// The binder node at `path`, if the term has that shape.
pub fn binder_at<'t>(t: &'t Term, path: &[u8]) -> Option<&'t Term> {
    let mut cur = t;
    for &step in path {
        cur = match (cur, step) {
            (Term::App(f, _), 0) => f,
            (Term::App(_, a), 1) => a,
            (Term::Lam { ty, .. } | Term::Pi { ty, .. }, 0) => ty,
            (Term::Lam { body, .. } | Term::Pi { body, .. }, 1) => body,
            (Term::Let { ty, .. }, 0) => ty,
            (Term::Let { value, .. }, 1) => value,
            (Term::Let { body, .. }, 2) => body,
            _ => return None,
        };
    }
    matches!(cur, Term::Lam { .. } | Term::Pi { .. } | Term::Let { .. }).then_some(cur)
}

/// Renames the binder at `path`.
pub fn rename_binder(t: &Term, path: &[u8], new: &str) -> Term {
    let mut t = t.clone();
    let mut cur = &mut t;
    for &step in path {
        cur = match (cur, step) {
            (Term::App(f, _), 0) => f,
            (Term::App(_, a), 1) => a,
            (Term::Lam { ty, .. } | Term::Pi { ty, .. }, 0) => ty,
            (Term::Lam { body, .. } | Term::Pi { body, .. }, 1) => body,
            (Term::Let { ty, .. }, 0) => ty,
            (Term::Let { value, .. }, 1) => value,
            (Term::Let { body, .. }, 2) => body,
            _ => return t,
        };
    }
    if let Term::Lam { name, .. } | Term::Pi { name, .. } | Term::Let { name, .. } = cur {
        *name = new.into();
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::prelude;

    fn compile(src: &str) -> (CompiledRuleSet, Vec<RuleWarning>) {
        load_rules(&format!("external t where\n{src}"), &prelude()).unwrap()
    }

    #[test]
    fn plus_rule_has_hidden_implicit() {
        let (rs, w) = compile("a \"+\" b <==> a + b");
        assert!(w.is_empty());
        let r = &rs.rules[0];
        assert_eq!(r.direction, Direction::Both);
        assert_eq!(r.priority, Priority::Normal);
        let (head, args) = r.template.term.app_spine();
        assert_eq!(head, &Term::cnst("add"));
        assert_eq!(args.len(), 3);
        assert!(args.iter().all(|a| a.is_mvar()));
        assert_eq!(r.nts.len(), 2);
        assert_eq!(args[1], &Term::MVar(r.nts[0].head));
        assert_eq!(args[2], &Term::MVar(r.nts[1].head));
        // The implicit is stored but is not a nonterminal.
        assert_eq!(r.template.stored.len(), 3);
    }

    #[test]
    fn one_way_rule_is_accepted_silently() {
        let (rs, w) = compile("\"(\" a \",\" b \")[0]\" ==> a");
        assert!(w.is_empty());
        assert_eq!(rs.rules[0].direction, Direction::ToTermOnly);
    }

    #[test]
    fn asymmetric_rule_is_downgraded_with_one_warning() {
        let (rs, w) = compile("\"first\" a b <==> a");
        assert_eq!(rs.rules[0].direction, Direction::ToTermOnly);
        assert_eq!(
            w,
            vec![RuleWarning::IrreversibleRule {
                line: 2,
                missing: vec!["b".into()],
                direction: Direction::ToTermOnly
            }]
        );
        let (rs, w) = compile("\"both\" a <==> a ∧ c");
        assert_eq!(rs.rules[0].direction, Direction::ToExternalOnly);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn identity_like_rules_are_low_priority() {
        let (rs, _) = compile("\"id\" x <==> (fun y : Prop => y) x\n\"int(\" n \")\" <==> (n : Int)\n\"(\" x \")\" <==> x\n\"not\" x <==> ¬ x");
        let p: Vec<_> = rs.rules.iter().map(|r| (r.priority, r.grouping)).collect();
        assert_eq!(
            p,
            vec![
                (Priority::Low, false),
                (Priority::Low, false),
                (Priority::Low, true),
                (Priority::Normal, false)
            ]
        );
    }

    #[test]
    fn binders_lift_nonterminals() {
        let (rs, _) = compile("($name) \"=\" val \";\" rest <==> let name := val; rest");
        let r = &rs.rules[0];
        let rest = r.nt_by_name("rest").unwrap();
        assert_eq!(rest.arity, 1);
        assert_eq!(rest.binder_names, vec!["name".to_string()]);
        assert_eq!(r.nt_by_name("val").unwrap().arity, 0);
        assert_eq!(r.slots[0], Slot::Capture { name: "name".into(), path: Some(vec![]) });
    }

    #[test]
    fn dump_is_deterministic() {
        let src = "external t where\na \"+\" b <==> a + b\n($n) \"=\" v \";\" r <==> let n := v; r\n";
        let a = load_rules(src, &prelude()).unwrap().0.dump();
        let b = load_rules(src, &prelude()).unwrap().0.dump();
        assert_eq!(a, b);
        assert!(a.contains("pattern ?1 + ?2"), "{a}");
        assert!(a.contains("meta ?1 : ?0"), "{a}");
    }

    #[test]
    fn elaboration_errors_name_the_line() {
        let e = load_rules("external t where\n\"x\" a <==> True ∧ (1 : Int)\n", &prelude()).unwrap_err();
        assert!(matches!(e, RuleError::Elab { line: 2, .. }));
    }
}
