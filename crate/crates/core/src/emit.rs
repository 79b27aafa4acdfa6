//! Terms to external text.
//!
//! Emission first builds a [`MatchTree`] by matching rule patterns against
//! the term up to definitional equality, then renders it with the fewest
//! parentheses the parser needs to rebuild the same tree.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use thiserror::Error;

use crate::kernel::{infer_type, is_def_eq, whnf, Environment, LocalContext, Term};
use crate::parsegen::{Cst, ParserTable};
use crate::rulespec::{binder_at, CompiledRule, CompiledRuleSet, ExtSym, Priority, RuleKind, Slot};
use crate::syntax::Printer;
use crate::unify::MetaState;

pub const DEFAULT_MAX_DEPTH: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("no rule matches `{term}` (depth {depth})")]
    NoMatch { term: String, depth: usize },
    #[error("recursion depth limit {0} exceeded")]
    DepthExceeded(usize),
    #[error("parentheses are needed around `{rule}` but the rules declare no grouping rule such as `\"(\" x \")\" <==> x`")]
    NoGrouping { rule: String },
}

/// Rule-labelled tree mirroring the external structure of the output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchTree {
    /// One child per nonterminal or capture of the rule, in external order.
    Node { rule: usize, children: Vec<MatchTree> },
    Numeral(BigUint),
    Ident(String),
}

impl MatchTree {
    /// Same format as [`Cst::sexp`].
    pub fn sexp(&self) -> String {
        match self {
            MatchTree::Node { rule, children } => {
                let mut s = format!("(r{rule}");
                for c in children {
                    s.push(' ');
                    s.push_str(&c.sexp());
                }
                s.push(')');
                s
            }
            MatchTree::Numeral(n) => format!("(num {n})"),
            MatchTree::Ident(x) => format!("(id {x})"),
        }
    }

    /// Whether `cst` has this shape once grouping nodes are dropped.
    pub fn matches_cst(&self, cst: &Cst, grouping: &[usize]) -> bool {
        match (self, cst) {
            (_, Cst::Node { rule, children, .. }) if grouping.contains(rule) && children.len() == 1 => {
                self.matches_cst(&children[0], grouping)
            }
            (MatchTree::Node { rule: a, children: x }, Cst::Node { rule: b, children: y, .. }) => {
                a == b && x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.matches_cst(q, grouping))
            }
            (MatchTree::Numeral(a), Cst::Numeral { value: b, .. }) => a == b,
            (MatchTree::Ident(a), Cst::Ident { name: b, .. }) => a == b,
            _ => false,
        }
    }

    /// Rebuilds the tree from a parse, dropping grouping nodes.
    pub fn from_cst(cst: &Cst, grouping: &[usize]) -> MatchTree {
        match cst {
            Cst::Node { rule, children, .. } if grouping.contains(rule) && children.len() == 1 => {
                MatchTree::from_cst(&children[0], grouping)
            }
            Cst::Node { rule, children, .. } => MatchTree::Node {
                rule: *rule,
                children: children.iter().map(|c| MatchTree::from_cst(c, grouping)).collect(),
            },
            Cst::Numeral { value, .. } => MatchTree::Numeral(value.clone()),
            Cst::Ident { name, .. } => MatchTree::Ident(name.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmitStats {
    pub low_priority_applications: usize,
    pub rules_tried: usize,
    pub max_depth: usize,
}

/// Result of a successful match: one entry per nonterminal of the rule.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Instantiated value; a function of the binder variables when lifted.
    pub values: Vec<Term>,
    /// Display name for each capture, keyed by capture name.
    pub captures: BTreeMap<String, String>,
}

/// Matches `t` against `rule` in `ctx`. Leaves `metas` unchanged.
pub fn match_rule(
    t: &Term,
    rule: &CompiledRule,
    ctx: &LocalContext,
    env: &Environment,
    metas: &mut MetaState,
) -> Option<Solution> {
    let cp = metas.checkpoint();
    let out = try_match(t, rule, ctx, env, metas);
    metas.rollback(cp);
    out
}

fn try_match(
    t: &Term,
    rule: &CompiledRule,
    ctx: &LocalContext,
    env: &Environment,
    metas: &mut MetaState,
) -> Option<Solution> {
    // Binders in the target are only matched by patterns with the same
    // binder, so that a `let` is never rendered through its reduct.
    let pat = &rule.template.term;
    let same_binder = match t {
        Term::Let { .. } => matches!(pat, Term::Let { .. }),
        Term::Lam { .. } => matches!(pat, Term::Lam { .. }),
        Term::Pi { .. } => matches!(pat, Term::Pi { .. }),
        _ => true,
    };
    if !same_binder && !pat.app_fn().is_mvar() {
        return None;
    }
    let tr = metas.transport(&rule.template, ctx);
    if !is_def_eq(&tr.term, t, ctx, env, metas) {
        return None;
    }
    let pty = infer_type(&tr.term, ctx, env, metas).ok()?;
    let tty = infer_type(t, ctx, env, metas).ok()?;
    if !is_def_eq(&pty, &tty, ctx, env, metas) {
        return None;
    }
    let mut values = Vec::with_capacity(tr.nonterminals.len());
    for m in &tr.nonterminals {
        let v = metas.instantiate(&Term::MVar(*m)).head_beta();
        if v.has_mvars() {
            return None;
        }
        values.push(v);
    }
    let mut captures = BTreeMap::new();
    for slot in &rule.slots {
        if let Slot::Capture { name, path } = slot {
            let shown = path
                .as_ref()
                .and_then(|p| binder_at(t, p))
                .and_then(binder_name)
                .unwrap_or_else(|| name.clone());
            captures.insert(name.clone(), shown);
        }
    }
    Some(Solution { values, captures })
}

fn binder_name(t: &Term) -> Option<String> {
    match t {
        Term::Lam { name, .. } | Term::Pi { name, .. } | Term::Let { name, .. } => Some(name.as_str().to_string()),
        _ => None,
    }
}

pub struct Emitter<'a> {
    rs: &'a CompiledRuleSet,
    metas: MetaState,
    pub max_depth: usize,
    pub stats: EmitStats,
    failed: HashSet<(Term, Option<Term>, Vec<usize>)>,
}

impl<'a> Emitter<'a> {
    pub fn new(rs: &'a CompiledRuleSet) -> Self {
        Emitter {
            rs,
            metas: MetaState::new(),
            max_depth: DEFAULT_MAX_DEPTH,
            stats: EmitStats::default(),
            failed: HashSet::new(),
        }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn match_tree(&mut self, t: &Term, ctx: &LocalContext) -> Result<MatchTree, EmitError> {
        self.emit(t, ctx, None, &[], 0)
    }

    fn env(&self) -> &'a Environment {
        &self.rs.env
    }

    fn emit(
        &mut self,
        t: &Term,
        ctx: &LocalContext,
        forced: Option<&Term>,
        excluded: &[usize],
        depth: usize,
    ) -> Result<MatchTree, EmitError> {
        if depth > self.max_depth {
            return Err(EmitError::DepthExceeded(self.max_depth));
        }
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let key = (t.clone(), forced.cloned(), excluded.to_vec());
        if self.failed.contains(&key) {
            return Err(self.no_match(t, ctx, depth));
        }
        if let Term::FVar(x) = t {
            if let Some(d) = ctx.get(*x) {
                return Ok(MatchTree::Ident(d.name.clone()));
            }
        }
        let rs = self.rs;
        for rule in rs.rules.iter().filter(|r| usable(r) && r.priority == Priority::Normal) {
            if let Some(tree) = self.try_rule(t, ctx, rule, forced, excluded, depth)? {
                return Ok(tree);
            }
        }
        if let Some(n) = self.numeral(t, ctx, forced) {
            return Ok(MatchTree::Numeral(n));
        }
        for rule in rs.rules.iter().filter(|r| usable(r) && r.priority == Priority::Low) {
            if excluded.contains(&rule.index) {
                continue;
            }
            if let Some(tree) = self.try_rule(t, ctx, rule, forced, excluded, depth)? {
                self.stats.low_priority_applications += 1;
                return Ok(tree);
            }
        }
        self.failed.insert(key);
        Err(self.no_match(t, ctx, depth))
    }

    fn no_match(&self, t: &Term, ctx: &LocalContext, depth: usize) -> EmitError {
        EmitError::NoMatch {
            term: Printer {
                env: Some(self.env()),
                ctx: Some(ctx),
            }
            .print(t),
            depth,
        }
    }

    /// `n` when `t` reduces to a numeral cast at the default or forced type.
    fn numeral(&mut self, t: &Term, ctx: &LocalContext, forced: Option<&Term>) -> Option<BigUint> {
        let w = whnf(t, self.env(), &self.metas);
        let (head, args) = w.app_spine();
        let (Term::Const(c), [ty, Term::NatLit(n)]) = (head, args.as_slice()) else {
            return None;
        };
        if c != "numCast" {
            return None;
        }
        let default = self.rs.numeral_default_term();
        let env = self.env();
        let ok = is_def_eq(ty, &default, ctx, env, &mut self.metas)
            || forced.is_some_and(|f| is_def_eq(ty, f, ctx, env, &mut self.metas));
        ok.then(|| n.clone())
    }

    fn try_rule(
        &mut self,
        t: &Term,
        ctx: &LocalContext,
        rule: &CompiledRule,
        forced: Option<&Term>,
        excluded: &[usize],
        depth: usize,
    ) -> Result<Option<MatchTree>, EmitError> {
        self.stats.rules_tried += 1;
        let Some(sol) = match_rule(t, rule, ctx, self.env(), &mut self.metas) else {
            return Ok(None);
        };
        let mut captures = sol.captures.clone();
        let mut opened = Vec::with_capacity(rule.nts.len());
        for (info, value) in rule.nts.iter().zip(&sol.values) {
            let mut ext = ctx.clone();
            let value = if info.arity > 0 {
                match self.open(value, info, &mut captures, &mut ext) {
                    Some(v) => v,
                    None => return Ok(None),
                }
            } else {
                value.clone()
            };
            opened.push((value, ext));
        }
        let mut children = Vec::with_capacity(rule.slots.len());
        for slot in &rule.slots {
            match slot {
                Slot::Capture { name, .. } => children.push(MatchTree::Ident(captures[name].clone())),
                Slot::Nonterminal { nt: None, .. } => return Ok(None),
                Slot::Nonterminal { nt: Some(k), .. } => {
                    let info = &rule.nts[*k];
                    let (value, ext) = &opened[*k];
                    let own = (info.arity == 0 && !info.ty.has_mvars()).then(|| info.ty.clone());
                    let same = value == t;
                    let child_forced = own.as_ref().or(if same { forced } else { None });
                    let mut child_excluded = Vec::new();
                    if same && rule.priority == Priority::Low {
                        child_excluded.extend_from_slice(excluded);
                        child_excluded.push(rule.index);
                    }
                    match self.emit(value, ext, child_forced, &child_excluded, depth + 1) {
                        Ok(c) => children.push(c),
                        Err(EmitError::NoMatch { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(Some(MatchTree::Node {
            rule: rule.index,
            children,
        }))
    }

    /// Applies a lifted solution to fresh variables pushed onto `ext`.
    fn open(
        &mut self,
        value: &Term,
        info: &crate::rulespec::NtInfo,
        captures: &mut BTreeMap<String, String>,
        ext: &mut LocalContext,
    ) -> Option<Term> {
        let mut body = value.clone();
        let mut fvars = Vec::new();
        for j in 0..info.arity {
            let Term::Lam { name, ty, body: inner } = whnf(&body, self.env(), &self.metas) else {
                return None;
            };
            let captured = info.binder_names.get(j).filter(|b| captures.contains_key(*b)).cloned();
            let mut shown = match &captured {
                Some(b) => captures[b].clone(),
                None => name.as_str().to_string(),
            };
            // Avoid capturing an outer variable of the same name that the body uses.
            let clashes = |s: &str, ext: &LocalContext| {
                inner
                    .fvars()
                    .iter()
                    .any(|f| ext.get(*f).is_some_and(|d| d.name == s))
            };
            if clashes(&shown, ext) {
                let base = shown.clone();
                let mut i = 1;
                while clashes(&shown, ext) || ext.find_by_name(&shown).is_some() {
                    shown = format!("{base}_{i}");
                    i += 1;
                }
                if let Some(b) = captured {
                    captures.insert(b, shown.clone());
                }
            }
            let x = ext.push_local(shown, *ty);
            fvars.push(x);
            body = inner.instantiate1(&Term::FVar(x));
        }
        Some(body)
    }
}

fn usable(r: &CompiledRule) -> bool {
    r.direction.to_external() && !r.grouping
}

/// Renders a match tree with minimal parentheses.
pub fn render(tree: &MatchTree, rs: &CompiledRuleSet, table: &ParserTable) -> Result<String, EmitError> {
    let mut toks = Vec::new();
    Renderer { rs, table }.node(tree, 0, None, &mut toks)?;
    toks.reverse();
    Ok(join_tokens(&toks))
}

/// Joins tokens with single spaces, except inside brackets and before
/// separators.
pub fn join_tokens(toks: &[String]) -> String {
    let mut out = String::new();
    for (i, t) in toks.iter().enumerate() {
        if i > 0 {
            let prev_open = out.ends_with(['(', '[', '{']);
            let next_close = t.starts_with([')', ']', '}', ',', ';']);
            if !prev_open && !next_close {
                out.push(' ');
            }
        }
        out.push_str(t);
    }
    out
}

struct Renderer<'a> {
    rs: &'a CompiledRuleSet,
    table: &'a ParserTable,
}

impl Renderer<'_> {
    fn level(&self, tree: &MatchTree) -> u32 {
        match tree {
            MatchTree::Node { rule, children } => {
                let r = &self.rs.rules[*rule];
                match r.prec.kind {
                    RuleKind::Bare => children.first().map_or(crate::rulespec::MAX, |c| self.level(c)),
                    _ => r.prec.level,
                }
            }
            _ => crate::rulespec::MAX,
        }
    }

    /// Binding power of the rightmost open position, if the tree ends in one.
    fn right_open(&self, tree: &MatchTree) -> Option<u32> {
        let MatchTree::Node { rule, children } = tree else {
            return None;
        };
        let r = &self.rs.rules[*rule];
        match r.prec.kind {
            RuleKind::Bare => children.first().and_then(|c| self.right_open(c)),
            _ => r.prec.final_bp(&r.external),
        }
    }

    /// Pushes tokens in reverse order. `follow` is the token after the tree.
    fn node(&self, tree: &MatchTree, bp: u32, follow: Option<&str>, out: &mut Vec<String>) -> Result<(), EmitError> {
        let captured_by_follow = match (self.right_open(tree), follow) {
            (Some(fb), Some(f)) => self.table.continues(f, fb),
            _ => false,
        };
        if self.level(tree) < bp || captured_by_follow {
            let MatchTree::Node { rule, .. } = tree else { unreachable!() };
            let g = self.rs.grouping_rule().ok_or_else(|| EmitError::NoGrouping {
                rule: self.rs.rules[*rule].external_text(),
            })?;
            let mut close = None;
            for sym in g.external.iter().rev() {
                match sym {
                    ExtSym::Terminal(t) => out.push(t.clone()),
                    _ => {
                        self.plain(tree, 0, close.as_deref(), out)?;
                    }
                }
                if let ExtSym::Terminal(t) = sym {
                    close = Some(t.clone());
                }
            }
            return Ok(());
        }
        self.plain(tree, bp, follow, out)
    }

    fn plain(&self, tree: &MatchTree, bp: u32, follow: Option<&str>, out: &mut Vec<String>) -> Result<(), EmitError> {
        let (rule, children) = match tree {
            MatchTree::Numeral(n) => {
                out.push(n.to_string());
                return Ok(());
            }
            MatchTree::Ident(x) => {
                out.push(x.clone());
                return Ok(());
            }
            MatchTree::Node { rule, children } => (&self.rs.rules[*rule], children),
        };
        if rule.prec.kind == RuleKind::Bare {
            return self.node(&children[0], bp, follow, out);
        }
        let mut next: Option<String> = follow.map(str::to_string);
        let mut slot = children.len();
        for (i, sym) in rule.external.iter().enumerate().rev() {
            let before = out.len();
            match sym {
                ExtSym::Terminal(t) => out.push(t.clone()),
                _ => {
                    slot -= 1;
                    self.node(&children[slot], rule.prec.bps[i], next.as_deref(), out)?;
                }
            }
            next = out.get(before..).and_then(|s| s.last()).cloned();
        }
        Ok(())
    }
}
