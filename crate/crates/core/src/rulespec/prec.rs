//! Binding powers for rule positions.
//!
//! Trailing rules (those starting with a nonterminal) default to level
//! [`BASE`] and associate to the left. Rules starting with a terminal or a
//! name capture default to [`MAX`], since they are delimited on the left.

use std::collections::BTreeMap;

use super::parse::{ExtSym, RawRule};
use super::RuleError;

pub const BASE: u32 = 100;
pub const MAX: u32 = 1024;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Starts with this terminal.
    Leading(String),
    /// `($name)` followed by this terminal.
    IdentLeading(String),
    /// A nonterminal followed by this terminal.
    Trailing(String),
    /// A lone nonterminal; never parsed.
    Bare,
}

impl RuleKind {
    pub fn key(&self) -> Option<&str> {
        match self {
            RuleKind::Leading(t) | RuleKind::IdentLeading(t) | RuleKind::Trailing(t) => Some(t),
            RuleKind::Bare => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prec {
    pub kind: RuleKind,
    /// Level of a node built by the rule.
    pub level: u32,
    /// Minimum level of the leading operand of a trailing rule.
    pub left_req: u32,
    /// Binding power of each external symbol; zero for terminals and captures.
    pub bps: Vec<u32>,
}

impl Prec {
    /// Binding power of the last symbol when it is a nonterminal.
    pub fn final_bp(&self, external: &[ExtSym]) -> Option<u32> {
        match (external.last(), &self.kind) {
            (_, RuleKind::Bare) => None,
            (Some(ExtSym::Nonterminal(_)), _) => self.bps.last().copied(),
            _ => None,
        }
    }
}

fn kind_of(r: &RawRule) -> Result<RuleKind, RuleError> {
    let bad = |msg: &str| RuleError::Syntax {
        line: r.line,
        col: 1,
        message: msg.to_string(),
    };
    match r.external.as_slice() {
        [ExtSym::Terminal(t), ..] => Ok(RuleKind::Leading(t.clone())),
        [ExtSym::Capture(_), ExtSym::Terminal(t), ..] => Ok(RuleKind::IdentLeading(t.clone())),
        [ExtSym::Capture(_), ..] => Err(bad("a leading `($name)` must be followed by a terminal")),
        [ExtSym::Nonterminal(_)] => Ok(RuleKind::Bare),
        [ExtSym::Nonterminal(_), ExtSym::Terminal(t), ..] => Ok(RuleKind::Trailing(t.clone())),
        [ExtSym::Nonterminal(_), ..] => Err(bad("a leading nonterminal must be followed by a terminal")),
        [] => Err(bad("external pattern is empty")),
    }
}

pub fn infer_precedences(rules: &[RawRule]) -> Result<Vec<Prec>, RuleError> {
    let mut explicit: BTreeMap<(u8, String), (u32, usize)> = BTreeMap::new();
    let mut out = Vec::with_capacity(rules.len());
    for r in rules {
        let kind = kind_of(r)?;
        if let (Some(p), Some(key)) = (r.precedence, kind.key()) {
            let tag = match kind {
                RuleKind::Trailing(_) => 1,
                _ => 0,
            };
            match explicit.get(&(tag, key.to_string())) {
                Some(&(q, line)) if q != p => {
                    return Err(RuleError::PrecedenceConflict {
                        terminal: key.to_string(),
                        lines: (line, r.line),
                        levels: (q, p),
                    })
                }
                _ => {
                    explicit.insert((tag, key.to_string()), (p, r.line));
                }
            }
        }
        let trailing = matches!(kind, RuleKind::Trailing(_));
        let level = match r.precedence {
            Some(p) => p.min(MAX),
            None if trailing => BASE,
            None => MAX,
        };
        let n = r.external.len();
        let pure_prefix = matches!(r.external.as_slice(), [ExtSym::Terminal(_), ExtSym::Nonterminal(_)]);
        let left_req = if trailing {
            if r.right_assoc {
                (level + 1).min(MAX)
            } else {
                level
            }
        } else {
            0
        };
        let mut bps = vec![0; n];
        for (i, s) in r.external.iter().enumerate() {
            if !matches!(s, ExtSym::Nonterminal(_)) {
                continue;
            }
            bps[i] = if trailing && i == 0 {
                left_req
            } else if i + 1 < n {
                match r.external[i + 1] {
                    ExtSym::Terminal(_) => 0,
                    _ => MAX,
                }
            } else if trailing {
                if r.right_assoc {
                    level
                } else {
                    (level + 1).min(MAX)
                }
            } else if r.precedence.is_some() {
                level
            } else if pure_prefix {
                MAX
            } else {
                0
            };
        }
        out.push(Prec {
            kind,
            level,
            left_req,
            bps,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_rule_file;
    use super::*;

    fn precs(src: &str) -> Result<Vec<Prec>, RuleError> {
        infer_precedences(&parse_rule_file(&format!("external t where\n{src}")).unwrap().rules)
    }

    #[test]
    fn infix_is_left_associative_by_default() {
        let p = &precs("a \"+\" b <==> a + b").unwrap()[0];
        assert_eq!(p.kind, RuleKind::Trailing("+".into()));
        assert_eq!((p.level, p.left_req), (BASE, BASE));
        assert_eq!(p.bps, vec![BASE, 0, BASE + 1]);
    }

    #[test]
    fn right_associative_flag_swaps_sides() {
        let p = &precs("a \"+\" b <==> a + b +rightAssociative").unwrap()[0];
        assert_eq!(p.left_req, BASE + 1);
        assert_eq!(p.bps, vec![BASE + 1, 0, BASE]);
    }

    #[test]
    fn prefix_argument_binds_tightest() {
        let p = &precs("\"not\" x <==> ¬ x").unwrap()[0];
        assert_eq!(p.level, MAX);
        assert_eq!(p.bps, vec![0, MAX]);
        let p = &precs("\"not\" x <==> ¬ x (precedence := 40)").unwrap()[0];
        assert_eq!(p.bps, vec![0, 40]);
    }

    #[test]
    fn delimited_positions_restart_at_zero() {
        let p = &precs("($n) \"=\" v \";\" r <==> let n := v; r").unwrap()[0];
        assert_eq!(p.kind, RuleKind::IdentLeading("=".into()));
        assert_eq!(p.bps, vec![0, 0, 0, 0, 0]);
        let p = &precs("\"(\" x \")\" <==> x").unwrap()[0];
        assert_eq!(p.bps, vec![0, 0, 0]);
        let p = &precs("\"all\" ($x) \",\" b <==> ∀ x : Prop, b").unwrap()[0];
        assert_eq!(p.bps, vec![0, 0, 0, 0]);
    }

    #[test]
    fn conflicting_explicit_levels() {
        let e = precs("a \"-\" b <==> a - b (precedence := 65)\na \"-\" b \"!\" <==> a - b (precedence := 70)")
            .unwrap_err();
        assert!(matches!(e, RuleError::PrecedenceConflict { .. }));
        // Prefix and infix uses of one terminal are independent.
        assert!(precs("a \"-\" b <==> a - b (precedence := 65)\n\"-\" b <==> b (precedence := 75)").is_ok());
    }
}
