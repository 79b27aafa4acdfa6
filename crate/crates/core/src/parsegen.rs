//! A Pratt parser generated at run time from a compiled rule set.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use thiserror::Error;

use crate::rulespec::{CompiledRuleSet, ExtSym, Prec, RuleKind, MAX};
use crate::syntax::{line_col, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokKind {
    Terminal(String),
    Numeral(BigUint),
    Ident(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub span: Span,
}

impl Token {
    fn describe(&self) -> String {
        match &self.kind {
            TokKind::Terminal(t) => format!("`{t}`"),
            TokKind::Numeral(n) => format!("numeral `{n}`"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: unexpected character `{ch}`")]
    LexError { span: Span, line: usize, col: usize, ch: char },
    #[error("{line}:{col}: unexpected {found}; expected {}", expected.join(", "))]
    ParseError {
        span: Span,
        line: usize,
        col: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("{line}:{col}: unexpected trailing input starting with {found}")]
    TrailingInput { span: Span, line: usize, col: usize, found: String },
}

/// Concrete syntax tree. A node has one child per nonterminal or capture of
/// its rule, in pattern order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cst {
    Node { rule: usize, children: Vec<Cst>, span: Span },
    Numeral { value: BigUint, span: Span },
    Ident { name: String, span: Span },
}

impl Cst {
    pub fn span(&self) -> Span {
        match self {
            Cst::Node { span, .. } | Cst::Numeral { span, .. } | Cst::Ident { span, .. } => *span,
        }
    }

    /// S-expression form: `(rule child..)`, `(num n)`, `(id x)`.
    pub fn sexp(&self) -> String {
        match self {
            Cst::Node { rule, children, .. } => {
                let mut s = format!("(r{rule}");
                for c in children {
                    s.push(' ');
                    s.push_str(&c.sexp());
                }
                s.push(')');
                s
            }
            Cst::Numeral { value, .. } => format!("(num {value})"),
            Cst::Ident { name, .. } => format!("(id {name})"),
        }
    }

    /// Structural equality ignoring spans.
    pub fn same_shape(&self, other: &Cst) -> bool {
        match (self, other) {
            (Cst::Node { rule: a, children: x, .. }, Cst::Node { rule: b, children: y, .. }) => {
                a == b && x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.same_shape(q))
            }
            (Cst::Numeral { value: a, .. }, Cst::Numeral { value: b, .. }) => a == b,
            (Cst::Ident { name: a, .. }, Cst::Ident { name: b, .. }) => a == b,
            _ => false,
        }
    }

    /// Removes nodes of the given grouping rules.
    pub fn without_grouping(&self, grouping: &[usize]) -> Cst {
        match self {
            Cst::Node { rule, children, .. } if grouping.contains(rule) && children.len() == 1 => {
                children[0].without_grouping(grouping)
            }
            Cst::Node { rule, children, span } => Cst::Node {
                rule: *rule,
                children: children.iter().map(|c| c.without_grouping(grouping)).collect(),
                span: *span,
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug)]
struct RuleShape {
    external: Vec<ExtSym>,
    prec: Prec,
}

/// Dispatch tables for the rules usable when reading external text.
#[derive(Clone, Debug)]
pub struct ParserTable {
    /// Terminal texts, longest first.
    terminals: Vec<String>,
    leading: BTreeMap<String, Vec<usize>>,
    ident_leading: BTreeMap<String, Vec<usize>>,
    trailing: BTreeMap<String, Vec<usize>>,
    rules: BTreeMap<usize, RuleShape>,
}

impl ParserTable {
    pub fn new(rs: &CompiledRuleSet) -> Self {
        let mut terminals = BTreeSet::new();
        let mut leading: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut ident_leading: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut trailing: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut rules = BTreeMap::new();
        for r in &rs.rules {
            terminals.extend(r.terminals().map(str::to_string));
            if !r.direction.to_term() {
                continue;
            }
            let map = match &r.prec.kind {
                RuleKind::Leading(_) => &mut leading,
                RuleKind::IdentLeading(_) => &mut ident_leading,
                RuleKind::Trailing(_) => &mut trailing,
                RuleKind::Bare => continue,
            };
            map.entry(r.prec.kind.key().unwrap().to_string()).or_default().push(r.index);
            rules.insert(
                r.index,
                RuleShape {
                    external: r.external.clone(),
                    prec: r.prec.clone(),
                },
            );
        }
        let count = |i: &usize| {
            rules[i]
                .external
                .iter()
                .filter(|s| matches!(s, ExtSym::Terminal(_)))
                .count()
        };
        for list in leading.values_mut().chain(ident_leading.values_mut()).chain(trailing.values_mut()) {
            list.sort_by_key(|i| (std::cmp::Reverse(count(i)), *i));
        }
        let mut terminals: Vec<String> = terminals.into_iter().collect();
        terminals.sort_by_key(|t| (std::cmp::Reverse(t.len()), t.clone()));
        ParserTable {
            terminals,
            leading,
            ident_leading,
            trailing,
            rules,
        }
    }

    /// Whether a trailing rule keyed by `terminal` with level at least
    /// `min_level` exists.
    pub fn continues(&self, terminal: &str, min_level: u32) -> bool {
        self.trailing
            .get(terminal)
            .is_some_and(|rs| rs.iter().any(|r| self.rules[r].prec.level >= min_level))
    }

    /// Whether an identifier followed by `terminal` may start a rule.
    pub fn ident_continues(&self, terminal: &str) -> bool {
        self.ident_leading.contains_key(terminal)
    }

    pub fn is_terminal(&self, text: &str) -> bool {
        self.terminals.iter().any(|t| t == text)
    }

    pub fn tokenize(&self, input: &str) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < input.len() {
            let rest = &input[i..];
            let c = rest.chars().next().unwrap();
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            let term = self.terminals.iter().find(|t| rest.starts_with(t.as_str()));
            let ident_len = if c.is_alphabetic() || c == '_' {
                rest.find(|ch: char| !(ch.is_alphanumeric() || ch == '_')).unwrap_or(rest.len())
            } else {
                0
            };
            let num_len = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            let term_len = term.map_or(0, |t| t.len());
            let (kind, len) = if term_len > 0 && term_len >= ident_len && term_len >= num_len {
                (TokKind::Terminal(term.unwrap().clone()), term_len)
            } else if ident_len > 0 {
                (TokKind::Ident(rest[..ident_len].to_string()), ident_len)
            } else if num_len > 0 {
                (TokKind::Numeral(rest[..num_len].parse().unwrap()), num_len)
            } else {
                let (line, col) = line_col(input, i);
                return Err(ParseError::LexError {
                    span: Span::new(i, i + c.len_utf8()),
                    line,
                    col,
                    ch: c,
                });
            };
            out.push(Token {
                kind,
                span: Span::new(i, i + len),
            });
            i += len;
        }
        Ok(out)
    }

    pub fn parse(&self, input: &str) -> Result<Cst, ParseError> {
        let toks = self.tokenize(input)?;
        let mut p = Parser {
            table: self,
            toks: &toks,
            pos: 0,
            furthest: 0,
            expected: BTreeSet::new(),
            end: input.len(),
        };
        let result = p.expr(0);
        let err_at = |pos: usize, p: &Parser| {
            let (span, found) = match toks.get(pos) {
                Some(t) => (t.span, t.describe()),
                None => (Span::new(p.end, p.end), "end of input".to_string()),
            };
            let (line, col) = line_col(input, span.start);
            (span, line, col, found)
        };
        match result {
            Some((cst, _)) if p.pos == toks.len() => Ok(cst),
            Some(_) if p.furthest <= p.pos => {
                let (span, line, col, found) = err_at(p.pos, &p);
                Err(ParseError::TrailingInput { span, line, col, found })
            }
            _ => {
                let (span, line, col, found) = err_at(p.furthest, &p);
                Err(ParseError::ParseError {
                    span,
                    line,
                    col,
                    found,
                    expected: p.expected.into_iter().collect(),
                })
            }
        }
    }
}

struct Parser<'a> {
    table: &'a ParserTable,
    toks: &'a [Token],
    pos: usize,
    furthest: usize,
    expected: BTreeSet<String>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn expect(&mut self, what: String) {
        if self.pos > self.furthest {
            self.furthest = self.pos;
            self.expected.clear();
        }
        if self.pos == self.furthest {
            self.expected.insert(what);
        }
    }

    fn span_from(&self, start: usize) -> Span {
        let s = self.toks.get(start).map_or(self.end, |t| t.span.start);
        let e = if self.pos > start {
            self.toks[self.pos - 1].span.end
        } else {
            s
        };
        Span::new(s, e)
    }

    fn expect_leading(&mut self) {
        let leading: Vec<String> = self.table.leading.keys().map(|k| format!("`{k}`")).collect();
        for k in leading {
            self.expect(k);
        }
        self.expect("numeral".into());
        self.expect("identifier".into());
    }

    fn expr(&mut self, min: u32) -> Option<(Cst, u32)> {
        let start = self.pos;
        let (mut lhs, mut level) = match self.peek().cloned() {
            Some(TokKind::Terminal(t)) => {
                let Some(cands) = self.table.leading.get(&t) else {
                    self.expect_leading();
                    return None;
                };
                let mut found = None;
                for &r in cands {
                    self.pos = start + 1;
                    let mut children = Vec::new();
                    if self.rest(r, 1, &mut children) {
                        found = Some((
                            Cst::Node {
                                rule: r,
                                children,
                                span: self.span_from(start),
                            },
                            self.table.rules[&r].prec.level,
                        ));
                        break;
                    }
                }
                match found {
                    Some(f) => f,
                    None => {
                        self.pos = start;
                        return None;
                    }
                }
            }
            Some(TokKind::Numeral(n)) => {
                self.pos += 1;
                (
                    Cst::Numeral {
                        value: n,
                        span: self.toks[start].span,
                    },
                    MAX,
                )
            }
            Some(TokKind::Ident(name)) => {
                let leaf = Cst::Ident {
                    name,
                    span: self.toks[start].span,
                };
                let cands = match self.toks.get(start + 1).map(|t| &t.kind) {
                    Some(TokKind::Terminal(t)) => self.table.ident_leading.get(t).cloned().unwrap_or_default(),
                    _ => Vec::new(),
                };
                let mut found = None;
                for r in cands {
                    self.pos = start + 1;
                    let mut children = vec![leaf.clone()];
                    if self.rest(r, 1, &mut children) {
                        found = Some((
                            Cst::Node {
                                rule: r,
                                children,
                                span: self.span_from(start),
                            },
                            self.table.rules[&r].prec.level,
                        ));
                        break;
                    }
                }
                match found {
                    Some(f) => f,
                    None => {
                        self.pos = start + 1;
                        (leaf, MAX)
                    }
                }
            }
            None => {
                self.expect_leading();
                return None;
            }
        };

        loop {
            let Some(TokKind::Terminal(t)) = self.peek().cloned() else {
                break;
            };
            let Some(cands) = self.table.trailing.get(&t) else { break };
            let here = self.pos;
            let mut extended = false;
            for &r in cands {
                let prec = &self.table.rules[&r].prec;
                if prec.level < min || level < prec.left_req {
                    continue;
                }
                self.pos = here;
                let mut children = vec![lhs.clone()];
                if self.rest(r, 1, &mut children) {
                    lhs = Cst::Node {
                        rule: r,
                        children,
                        span: self.span_from(start),
                    };
                    level = prec.level;
                    extended = true;
                    break;
                }
            }
            if !extended {
                self.pos = here;
                break;
            }
        }
        Some((lhs, level))
    }

    /// Parses symbols `from..` of rule `r`, pushing children.
    fn rest(&mut self, r: usize, from: usize, children: &mut Vec<Cst>) -> bool {
        let shape = &self.table.rules[&r];
        for i in from..shape.external.len() {
            match &shape.external[i] {
                ExtSym::Terminal(t) => match self.peek() {
                    Some(TokKind::Terminal(u)) if u == t => self.pos += 1,
                    _ => {
                        self.expect(format!("`{t}`"));
                        return false;
                    }
                },
                ExtSym::Capture(_) => match self.peek().cloned() {
                    Some(TokKind::Ident(name)) => {
                        children.push(Cst::Ident {
                            name,
                            span: self.toks[self.pos].span,
                        });
                        self.pos += 1;
                    }
                    _ => {
                        self.expect("identifier".into());
                        return false;
                    }
                },
                ExtSym::Nonterminal(_) => match self.expr(shape.prec.bps[i]) {
                    Some((c, _)) => children.push(c),
                    None => return false,
                },
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::prelude;
    use crate::rulespec::load_rules;

    fn table(src: &str) -> ParserTable {
        ParserTable::new(&load_rules(&format!("external t where\n{src}"), &prelude()).unwrap().0)
    }

    const PY: &str = "\"True\" <==> True\n\"False\" <==> False\n\"not\" x <==> ¬ x\n\"int(\" n \")\" <==> (n : Int)\n($name) \"=\" val \";\" rest <==> let name := val; rest\na \"+\" b <==> a + b\n";

    #[test]
    fn longest_match_tokens() {
        let t = table(PY);
        let kinds: Vec<TokKind> = t.tokenize("not True").unwrap().into_iter().map(|t| t.kind).collect();
        assert_eq!(kinds, vec![TokKind::Terminal("not".into()), TokKind::Terminal("True".into())]);
        let kinds: Vec<TokKind> = t.tokenize("int(1)").unwrap().into_iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokKind::Terminal("int(".into()),
                TokKind::Numeral(1u32.into()),
                TokKind::Terminal(")".into())
            ]
        );
        assert_eq!(
            t.tokenize("Truest").unwrap()[0].kind,
            TokKind::Ident("Truest".into())
        );
        assert!(t.tokenize("").unwrap().is_empty());
        assert!(matches!(t.tokenize("a ? b"), Err(ParseError::LexError { col: 3, .. })));
    }

    #[test]
    fn listing_trees() {
        let t = table(PY);
        assert_eq!(t.parse("not True").unwrap().sexp(), "(r2 (r0))");
        assert_eq!(t.parse("1 + 2 + 3").unwrap().sexp(), "(r5 (r5 (num 1) (num 2)) (num 3))");
        assert_eq!(
            t.parse("myvar = int(1); myvar").unwrap().sexp(),
            "(r4 (id myvar) (r3 (num 1)) (id myvar))"
        );
        assert_eq!(t.parse("not 1 + 2").unwrap().sexp(), "(r5 (r2 (num 1)) (num 2))");
    }

    #[test]
    fn errors() {
        let t = table(PY);
        match t.parse("not") {
            Err(ParseError::ParseError { expected, found, .. }) => {
                assert_eq!(found, "end of input");
                assert!(expected.contains(&"numeral".to_string()));
                assert!(expected.contains(&"`not`".to_string()));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(t.parse("True False"), Err(ParseError::TrailingInput { col: 6, .. })));
        assert!(matches!(
            t.parse("int(1"),
            Err(ParseError::ParseError { ref expected, .. }) if expected.contains(&"`)`".to_string())
        ));
    }

    #[test]
    fn spans_cover_nodes() {
        let t = table(PY);
        let c = t.parse("1 + 22").unwrap();
        assert_eq!(c.span(), Span::new(0, 6));
        let Cst::Node { children, .. } = c else { panic!() };
        assert_eq!(children[1].span(), Span::new(4, 6));
    }
}
