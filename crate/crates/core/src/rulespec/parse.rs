//! Reader for rule files.
//!
//! ```text
//! -- comment
//! external translate_Python (numberCast := Float) where
//!   "not" x <==> ¬ x
//!   a "+" b <==> a + b  +rightAssociative (precedence := 65)
//! ```

use super::RuleError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtSym {
    Terminal(String),
    Nonterminal(String),
    /// `($name)`: an identifier naming a binder of the term side.
    Capture(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Both,
    /// External text may be turned into terms but not back.
    ToTermOnly,
    /// Terms may be rendered externally but not read back.
    ToExternalOnly,
}

impl Direction {
    pub fn to_term(self) -> bool {
        self != Direction::ToExternalOnly
    }

    pub fn to_external(self) -> bool {
        self != Direction::ToTermOnly
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRule {
    pub external: Vec<ExtSym>,
    pub arrow: Direction,
    pub term_src: String,
    pub precedence: Option<u32>,
    pub right_assoc: bool,
    pub line: usize,
    /// Column of the first character of `term_src`.
    pub term_col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRuleFile {
    pub name: String,
    pub number_cast: Option<String>,
    pub rules: Vec<RawRule>,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> RuleError {
    RuleError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

/// Byte index where a `--` comment starts, ignoring string literals.
fn comment_start(line: &str) -> Option<usize> {
    let mut in_str = false;
    let mut escaped = false;
    let b = line.as_bytes();
    for i in 0..b.len() {
        if in_str {
            match b[i] {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
        } else if b[i] == b'"' {
            in_str = true;
        } else if b[i] == b'-' && b.get(i + 1) == Some(&b'-') {
            return Some(i);
        }
    }
    None
}

fn col_of(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn parse_rule_file(text: &str) -> Result<RawRuleFile, RuleError> {
    let mut header: Option<(String, Option<String>)> = None;
    let mut rules = Vec::new();
    for (i, full) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match comment_start(full) {
            Some(c) => &full[..c],
            None => full,
        };
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        rules.push(parse_rule(line, line_no)?);
    }
    let Some((name, number_cast)) = header else {
        return Err(err(1, 1, "expected `external NAME where`"));
    };
    Ok(RawRuleFile {
        name,
        number_cast,
        rules,
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<(String, Option<String>), RuleError> {
    let indent = line.len() - line.trim_start().len();
    let words = line.trim();
    let Some(rest) = words.strip_prefix("external").filter(|r| r.starts_with(char::is_whitespace)) else {
        return Err(err(line_no, indent + 1, "expected `external NAME where`"));
    };
    let Some(rest) = rest.trim_end().strip_suffix("where") else {
        return Err(err(line_no, line.trim_end().chars().count() + 1, "expected `where` at end of header"));
    };
    let rest = rest.trim();
    let (name, opts) = match rest.find('(') {
        Some(p) => (rest[..p].trim(), Some(rest[p..].trim())),
        None => (rest, None),
    };
    if name.is_empty() || !name.chars().all(|c| is_ident_char(c) || c == '.') {
        return Err(err(line_no, indent + 10, format!("invalid ruleset name `{name}`")));
    }
    let number_cast = match opts {
        None => None,
        Some(o) => {
            let inner = o
                .strip_prefix('(')
                .and_then(|o| o.strip_suffix(')'))
                .and_then(|o| o.trim().strip_prefix("numberCast"))
                .and_then(|o| o.trim().strip_prefix(":="))
                .map(str::trim)
                .filter(|t| !t.is_empty() && t.chars().all(|c| is_ident_char(c) || c == '.'));
            match inner {
                Some(t) => Some(t.to_string()),
                None => return Err(err(line_no, indent + 1, format!("unknown header option `{o}`"))),
            }
        }
    };
    Ok((name.to_string(), number_cast))
}

/// Removes trailing `+rightAssociative` and `(precedence := N)` options.
fn strip_options(mut term: &str, line: &str, line_no: usize) -> Result<(String, Option<u32>, bool), RuleError> {
    let mut precedence = None;
    let mut right = false;
    loop {
        let t = term.trim_end();
        if let Some(rest) = t.strip_suffix("+rightAssociative") {
            right = true;
            term = rest;
            continue;
        }
        if t.ends_with(')') {
            if let Some(open) = t.rfind('(') {
                let inner = t[open + 1..t.len() - 1].trim();
                if let Some(v) = inner.strip_prefix("precedence") {
                    let v = v.trim_start().strip_prefix(":=").map(str::trim);
                    let col = col_of(line, line.len() - (term.len() - open));
                    match v.and_then(|v| v.parse::<u32>().ok()) {
                        Some(n) => {
                            precedence = Some(n);
                            term = &t[..open];
                            continue;
                        }
                        None => return Err(err(line_no, col, "expected `(precedence := N)` with N a natural number")),
                    }
                }
            }
        }
        return Ok((t.to_string(), precedence, right));
    }
}

fn parse_rule(line: &str, line_no: usize) -> Result<RawRule, RuleError> {
    let mut external = Vec::new();
    let mut i = 0;
    let b = line.as_bytes();
    let arrow = loop {
        while i < line.len() && line[i..].starts_with(char::is_whitespace) {
            i += line[i..].chars().next().unwrap().len_utf8();
        }
        if i >= line.len() {
            return Err(err(line_no, col_of(line, i), "expected `<==>`, `==>` or `<==`"));
        }
        let rest = &line[i..];
        if let Some(dir) = [("<==>", Direction::Both), ("==>", Direction::ToTermOnly), ("<==", Direction::ToExternalOnly)]
            .iter()
            .find(|(a, _)| rest.starts_with(a))
        {
            i += dir.0.len();
            break dir.1;
        }
        let c = rest.chars().next().unwrap();
        if c == '"' {
            let start = i;
            i += 1;
            let mut text = String::new();
            loop {
                match line[i..].chars().next() {
                    None => return Err(err(line_no, col_of(line, start), "unterminated string literal")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let next = line[i + 1..].chars().next();
                        match next {
                            Some(e @ ('"' | '\\')) => {
                                text.push(e);
                                i += 2;
                            }
                            _ => return Err(err(line_no, col_of(line, i), "invalid escape in string literal")),
                        }
                    }
                    Some(ch) => {
                        text.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            if text.trim().is_empty() {
                return Err(err(line_no, col_of(line, start), "terminal must not be empty"));
            }
            if text.chars().any(char::is_whitespace) {
                return Err(err(line_no, col_of(line, start), format!("terminal `{text}` contains whitespace")));
            }
            external.push(ExtSym::Terminal(text));
        } else if rest.starts_with("($") {
            let start = i;
            i += 2;
            let s = i;
            while let Some(ch) = line[i..].chars().next().filter(|ch| is_ident_char(*ch)) {
                i += ch.len_utf8();
            }
            if s == i || b.get(i) != Some(&b')') {
                return Err(err(line_no, col_of(line, start), "expected `($name)`"));
            }
            external.push(ExtSym::Capture(line[s..i].to_string()));
            i += 1;
        } else if is_ident_start(c) {
            let s = i;
            while let Some(ch) = line[i..].chars().next().filter(|ch| is_ident_char(*ch)) {
                i += ch.len_utf8();
            }
            external.push(ExtSym::Nonterminal(line[s..i].to_string()));
        } else {
            return Err(err(line_no, col_of(line, i), format!("unexpected `{c}` in external pattern")));
        }
    };
    if external.is_empty() {
        return Err(err(line_no, col_of(line, i), "external pattern is empty"));
    }
    let mut seen = Vec::new();
    for s in &external {
        if let ExtSym::Nonterminal(n) | ExtSym::Capture(n) = s {
            if seen.contains(n) {
                return Err(err(line_no, 1, format!("`{n}` occurs twice in the external pattern")));
            }
            seen.push(n.clone());
        }
    }
    let after = &line[i..];
    let lead = after.len() - after.trim_start().len();
    let (term_src, precedence, right_assoc) = strip_options(after, line, line_no)?;
    if term_src.trim().is_empty() {
        return Err(err(line_no, col_of(line, line.len()), "expected a term after the arrow"));
    }
    Ok(RawRule {
        external,
        arrow,
        term_src: term_src.trim().to_string(),
        precedence,
        right_assoc,
        line: line_no,
        term_col: col_of(line, i + lead),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_rules() {
        let f = parse_rule_file(
            "-- demo\nexternal translate_Python where\n  \"True\" <==> True\n  \"not\" x <==> ¬ x\n  ($name) \"=\" val \";\" rest <==> let name := val; rest\n",
        )
        .unwrap();
        assert_eq!(f.name, "translate_Python");
        assert_eq!(f.rules.len(), 3);
        assert_eq!(f.rules[0].external, vec![ExtSym::Terminal("True".into())]);
        assert_eq!(f.rules[0].arrow, Direction::Both);
        assert_eq!(
            f.rules[1].external,
            vec![ExtSym::Terminal("not".into()), ExtSym::Nonterminal("x".into())]
        );
        assert_eq!(
            f.rules[2].external,
            vec![
                ExtSym::Capture("name".into()),
                ExtSym::Terminal("=".into()),
                ExtSym::Nonterminal("val".into()),
                ExtSym::Terminal(";".into()),
                ExtSym::Nonterminal("rest".into()),
            ]
        );
        assert_eq!(f.rules[2].term_src, "let name := val; rest");
        assert_eq!(f.rules[2].line, 5);
    }

    #[test]
    fn options_and_arrows() {
        let f = parse_rule_file(
            "external t (numberCast := Float) where\na \"+\" b <==> a + b +rightAssociative (precedence := 65)\n\"(\" a \",\" b \")[0]\" ==> a\n",
        )
        .unwrap();
        assert_eq!(f.number_cast.as_deref(), Some("Float"));
        assert_eq!(f.rules[0].precedence, Some(65));
        assert!(f.rules[0].right_assoc);
        assert_eq!(f.rules[0].term_src, "a + b");
        assert_eq!(f.rules[1].arrow, Direction::ToTermOnly);
    }

    #[test]
    fn comments_inside_terminals_are_kept() {
        let f = parse_rule_file("external t where\n\"--\" x <==> ¬ x -- negation\n").unwrap();
        assert_eq!(f.rules[0].external[0], ExtSym::Terminal("--".into()));
        assert_eq!(f.rules[0].term_src, "¬ x");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_rule_file("external t where\n  \"a\" ? <==> True\n").unwrap_err();
        assert!(matches!(e, RuleError::Syntax { line: 2, col: 7, .. }), "{e:?}");
        let e = parse_rule_file("external t where\n\"a\" True\n").unwrap_err();
        assert!(matches!(e, RuleError::Syntax { line: 2, .. }));
        let e = parse_rule_file("\"a\" <==> True\n").unwrap_err();
        assert!(matches!(e, RuleError::Syntax { line: 1, .. }));
    }
}
