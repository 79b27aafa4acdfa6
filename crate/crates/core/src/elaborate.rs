//! External text to terms.
//!
//! The tree is walked parents first. Each node's pattern is copied into the
//! goal's context and assigned to the goal by definitional equality, which
//! also pushes the goal's type into the pattern's nonterminals. Nonterminals
//! lifted over pattern binders are elaborated in a context extended with
//! fresh variables for those binders and abstracted back once every
//! metavariable below them is solved.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::kernel::{check_closed, infer_type, is_def_eq, whnf, Environment, FVarId, KernelError, LocalContext, LocalDecl, MVarId, Term};
use crate::parsegen::{Cst, ParseError, ParserTable};
use crate::rulespec::{rename_binder, CompiledRuleSet, Slot};
use crate::syntax::{default_numerals, line_col, Printer, Span};
use crate::unify::MetaState;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{line}:{col}: type mismatch: expected `{expected}`, found `{actual}`")]
    TypeMismatch {
        span: Span,
        line: usize,
        col: usize,
        expected: String,
        actual: String,
    },
    #[error("{line}:{col}: could not determine `{meta}`")]
    UnsolvedMeta { span: Span, line: usize, col: usize, meta: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    UnknownIdent { span: Span, line: usize, col: usize, name: String },
    #[error("elaborated term is ill-typed: {0}")]
    IllTyped(KernelError),
}

/// Extends the declared context of each unassigned metavariable in
/// `affected` with `decl`.
pub fn fix_binder_contexts(metas: &mut MetaState, decl: &LocalDecl, affected: &[MVarId]) {
    for m in affected {
        if !metas.is_assigned(*m) {
            metas.extend_context(*m, decl.clone());
        }
    }
}

/// Parses and elaborates `text`. Returns the term and its type.
pub fn from_external(
    text: &str,
    rs: &CompiledRuleSet,
    table: &ParserTable,
    ctx: &LocalContext,
    expected: Option<&Term>,
) -> Result<(Term, Term), ElabError> {
    let cst = table.parse(text)?;
    elaborate_cst(&cst, text, rs, ctx, expected)
}

/// Elaborates an already parsed tree; `text` is used for error positions.
pub fn elaborate_cst(
    cst: &Cst,
    text: &str,
    rs: &CompiledRuleSet,
    ctx: &LocalContext,
    expected: Option<&Term>,
) -> Result<(Term, Term), ElabError> {
    let mut el = Elab {
        rs,
        env: &rs.env,
        src: text,
        metas: MetaState::new(),
        delayed: Vec::new(),
        spans: BTreeMap::new(),
    };
    let ty = match expected {
        Some(t) => t.clone(),
        None => Term::MVar(el.metas.fresh_meta(ctx, Term::ty())),
    };
    let root = el.metas.fresh_meta(ctx, ty.clone());
    el.spans.insert(root, cst.span());
    el.node(cst, root)?;

    let default = rs.numeral_default_term();
    default_numerals(&Term::MVar(root), &mut el.metas, &default);
    for d in &el.delayed {
        default_numerals(&Term::MVar(d.goal), &mut el.metas, &default);
    }
    default_numerals(&ty, &mut el.metas, &default);
    while let Some(d) = el.delayed.pop() {
        let body = el.metas.instantiate(&Term::MVar(d.goal));
        let lhs = Term::apps(d.head.clone(), d.fvars.iter().map(|f| Term::FVar(*f)));
        if !is_def_eq(&lhs, &body, &d.ctx, el.env, &mut el.metas) {
            return Err(el.mismatch(d.span, &d.ctx, &lhs, &body));
        }
    }

    let term = el.metas.instantiate(&Term::MVar(root));
    if let Some(m) = term.mvars().first() {
        let span = el.spans.get(m).copied().unwrap_or(cst.span());
        let (line, col) = line_col(text, span.start);
        return Err(ElabError::UnsolvedMeta {
            span,
            line,
            col,
            meta: m.to_string(),
        });
    }
    let checked = check_closed(&term, ctx, el.env).map_err(ElabError::IllTyped)?;
    let ty = el.metas.instantiate(&ty);
    let ty = if ty.has_mvars() { checked } else { ty };
    Ok((term, ty))
}

struct Delayed {
    head: Term,
    fvars: Vec<FVarId>,
    ctx: LocalContext,
    goal: MVarId,
    span: Span,
}

struct Elab<'a> {
    rs: &'a CompiledRuleSet,
    env: &'a Environment,
    src: &'a str,
    metas: MetaState,
    delayed: Vec<Delayed>,
    spans: BTreeMap<MVarId, Span>,
}

impl Elab<'_> {
    fn show(&self, t: &Term, ctx: &LocalContext) -> String {
        Printer {
            env: Some(self.env),
            ctx: Some(ctx),
        }
        .print(&self.metas.instantiate(t))
    }

    fn mismatch(&self, span: Span, ctx: &LocalContext, goal: &Term, value: &Term) -> ElabError {
        let expected = infer_type(goal, ctx, self.env, &self.metas)
            .map(|t| self.show(&t, ctx))
            .unwrap_or_else(|_| self.show(goal, ctx));
        let actual = infer_type(value, ctx, self.env, &self.metas)
            .map(|t| self.show(&t, ctx))
            .unwrap_or_else(|_| self.show(value, ctx));
        let (line, col) = line_col(self.src, span.start);
        ElabError::TypeMismatch {
            span,
            line,
            col,
            expected,
            actual,
        }
    }

    fn assign_goal(&mut self, goal: MVarId, value: Term, span: Span) -> Result<(), ElabError> {
        let ctx = self.metas.decl(goal).expect("goal declared").ctx.clone();
        if is_def_eq(&Term::MVar(goal), &value, &ctx, self.env, &mut self.metas) {
            Ok(())
        } else {
            Err(self.mismatch(span, &ctx, &Term::MVar(goal), &value))
        }
    }

    /// Follows assignments of the form `?a := ?b`.
    fn resolve(&self, mut m: MVarId) -> Option<MVarId> {
        loop {
            match self.metas.assignment(m) {
                None => return Some(m),
                Some(Term::MVar(n)) => m = *n,
                Some(_) => return None,
            }
        }
    }

    fn numeral(&mut self, n: &BigUint, goal: MVarId, span: Span) -> Result<(), ElabError> {
        let ctx = self.metas.decl(goal).unwrap().ctx.clone();
        let ty = self.metas.fresh_meta(&ctx, Term::ty());
        self.spans.insert(ty, span);
        let value = Term::apps(Term::cnst("numCast"), [Term::MVar(ty), Term::NatLit(n.clone())]);
        self.assign_goal(goal, value, span)
    }

    fn node(&mut self, cst: &Cst, goal: MVarId) -> Result<(), ElabError> {
        self.spans.entry(goal).or_insert(cst.span());
        let ctx = self.metas.decl(goal).expect("goal declared").ctx.clone();
        let (rule, children, span) = match cst {
            Cst::Numeral { value, span } => return self.numeral(value, goal, *span),
            Cst::Ident { name, span } => {
                let value = match ctx.find_by_name(name) {
                    Some(d) => Term::FVar(d.fvar),
                    None if self.env.contains(name) => Term::cnst(name.clone()),
                    None => {
                        let (line, col) = line_col(self.src, span.start);
                        return Err(ElabError::UnknownIdent {
                            span: *span,
                            line,
                            col,
                            name: name.clone(),
                        });
                    }
                };
                return self.assign_goal(goal, value, *span);
            }
            Cst::Node { rule, children, span } => (&self.rs.rules[*rule], children, *span),
        };

        let tr = self.metas.transport(&rule.template, &ctx);
        for m in tr.mapping.values() {
            self.spans.insert(*m, span);
        }
        let mut captured: BTreeMap<&str, &str> = BTreeMap::new();
        let mut term = tr.term.clone();
        for (slot, child) in rule.slots.iter().zip(children) {
            if let (Slot::Capture { name, path }, Cst::Ident { name: id, .. }) = (slot, child) {
                captured.insert(name, id);
                if let Some(p) = path {
                    term = rename_binder(&term, p, id);
                }
            }
        }
        self.assign_goal(goal, term, span)?;

        for (slot, child) in rule.slots.iter().zip(children) {
            let Slot::Nonterminal { nt: Some(k), .. } = slot else {
                continue;
            };
            let info = &rule.nts[*k];
            let head = tr.nonterminals[*k];
            let display = |n: &str| captured.get(n).map_or(n.to_string(), |s| s.to_string());
            if info.arity == 0 {
                match self.resolve(head) {
                    Some(m) => {
                        let m_ctx = self.metas.decl(m).unwrap().ctx.clone();
                        for (name, ty) in &info.extra {
                            let ty = if ty.has_fvars() {
                                Term::MVar(self.metas.fresh_meta(&m_ctx, Term::ty()))
                            } else {
                                ty.clone()
                            };
                            let decl = LocalDecl {
                                fvar: FVarId::fresh(),
                                name: display(name),
                                ty,
                                value: None,
                            };
                            fix_binder_contexts(&mut self.metas, &decl, &[m]);
                        }
                        self.node(child, m)?;
                    }
                    None => {
                        let d = self.metas.decl(head).unwrap().clone();
                        let g = self.metas.fresh_meta(&d.ctx, d.ty.clone());
                        self.node(child, g)?;
                        if !is_def_eq(&Term::MVar(head), &Term::MVar(g), &d.ctx, self.env, &mut self.metas) {
                            return Err(self.mismatch(child.span(), &d.ctx, &Term::MVar(head), &Term::MVar(g)));
                        }
                    }
                }
                continue;
            }
            let mut fty = self.metas.instantiate(&self.metas.decl(head).unwrap().ty.clone());
            let mut ext = ctx.clone();
            let mut fvars = Vec::new();
            for j in 0..info.arity {
                match whnf(&fty, self.env, &self.metas) {
                    Term::Pi { name, ty, body, .. } => {
                        let shown = info
                            .binder_names
                            .get(j)
                            .map_or_else(|| name.as_str().to_string(), |b| display(b));
                        let x = ext.push_local(shown, self.metas.instantiate(&ty));
                        fvars.push(x);
                        fty = body.instantiate1(&Term::FVar(x));
                    }
                    _ => unreachable!("lifted nonterminal has a product type"),
                }
            }
            let g = self.metas.fresh_meta(&ext, fty);
            self.delayed.push(Delayed {
                head: Term::MVar(head),
                fvars,
                ctx: ext,
                goal: g,
                span: child.span(),
            });
            self.node(child, g)?;
        }
        Ok(())
    }
}
