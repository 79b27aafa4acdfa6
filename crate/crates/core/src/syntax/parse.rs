//! Parser for the core-term surface syntax used by environment files, the term
//! side of rules, and the command line.

use num_bigint::BigUint;

use super::{Op, SBinder, Span, Surface, SyntaxError};
use crate::kernel::Level;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    At(String),
    Num(BigUint),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[
    ":=", "=>", "->", "(", ")", "{", "}", ":", ",", ";", "_", "¬", "∧", "∨", "→", "+", "*", "-", "=",
    "Π", "∀", "λ",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() && !matches!(c, 'Π' | 'λ') || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit() || c == '.' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, SyntaxError> {
    let mut out = Vec::new();
    let mut i = 0;
    let bytes = src.as_bytes();
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if src[i..].starts_with("--") {
            while i < src.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: BigUint = src[start..i].parse().expect("digits");
            out.push((Tok::Num(n), Span::new(start, i)));
            continue;
        }
        if c == '@' {
            i += 1;
            let s = i;
            while let Some(ch) = src[i..].chars().next().filter(|ch| is_ident_continue(*ch)) {
                i += ch.len_utf8();
            }
            if s == i {
                return Err(SyntaxError::at(src, start, "expected identifier after `@`"));
            }
            out.push((Tok::At(src[s..i].to_string()), Span::new(start, i)));
            continue;
        }
        if is_ident_start(c) && !(c == '_' && !src[i + 1..].starts_with(|ch: char| is_ident_continue(ch))) {
            while let Some(ch) = src[i..].chars().next().filter(|ch| is_ident_continue(*ch)) {
                i += ch.len_utf8();
            }
            out.push((Tok::Ident(src[start..i].to_string()), Span::new(start, i)));
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                i += s.len();
                out.push((Tok::Sym(s), Span::new(start, i)));
            }
            None => {
                return Err(SyntaxError::at(src, start, &format!("unexpected character `{c}`")));
            }
        }
    }
    out.push((Tok::Eof, Span::new(src.len(), src.len())));
    Ok(out)
}

pub fn parse_term(src: &str) -> Result<Surface, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let t = p.term(0)?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser<'s> {
    src: &'s str,
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

const APP_PREC: u32 = 1024;

fn infix(tok: &Tok) -> Option<(Op, u32, u32)> {
    let Tok::Sym(s) = tok else { return None };
    Some(match *s {
        "→" | "->" => (Op::Arrow, 25, 25),
        "∨" => (Op::Or, 30, 30),
        "∧" => (Op::And, 35, 35),
        "=" => (Op::Eq, 50, 51),
        "+" => (Op::Add, 65, 66),
        "-" => (Op::Sub, 65, 66),
        "*" => (Op::Mul, 70, 71),
        _ => return None,
    })
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> Result<T, SyntaxError> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::At(s) => format!("`@{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(SyntaxError::at(self.src, self.span().start, &format!("{msg}, found {found}")))
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), SyntaxError> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.err(&format!("expected `{sym}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.err("expected end of term")
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Sym("_") => {
                self.bump();
                Ok("_".into())
            }
            _ => self.err("expected identifier"),
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !matches!(s.as_str(), "fun" | "let" | "forall"),
            Tok::At(_) | Tok::Num(_) => true,
            Tok::Sym(s) => matches!(*s, "(" | "_"),
            Tok::Eof => false,
        }
    }

    fn term(&mut self, min: u32) -> Result<Surface, SyntaxError> {
        let mut lhs = self.prefix()?;
        loop {
            if let Some((op, lbp, rbp)) = infix(self.peek()) {
                if lbp < min {
                    break;
                }
                self.bump();
                let rhs = self.term(rbp)?;
                lhs = if op == Op::Arrow {
                    Surface::Arrow(Box::new(lhs), Box::new(rhs))
                } else {
                    Surface::Notation(op, vec![lhs, rhs])
                };
            } else if self.starts_atom() && APP_PREC >= min {
                let arg = self.atom()?;
                lhs = Surface::App(Box::new(lhs), Box::new(arg));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Surface, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "fun" => {
                self.bump();
                let bs = self.binders()?;
                self.expect("=>")?;
                Ok(Surface::Lam(bs, Box::new(self.term(0)?)))
            }
            Tok::Sym("λ") => {
                self.bump();
                let bs = self.binders()?;
                self.expect("=>")?;
                Ok(Surface::Lam(bs, Box::new(self.term(0)?)))
            }
            Tok::Sym("Π") | Tok::Sym("∀") => {
                self.bump();
                let bs = self.binders()?;
                self.expect(",")?;
                Ok(Surface::Pi(bs, Box::new(self.term(0)?)))
            }
            Tok::Ident(k) if k == "forall" => {
                self.bump();
                let bs = self.binders()?;
                self.expect(",")?;
                Ok(Surface::Pi(bs, Box::new(self.term(0)?)))
            }
            Tok::Ident(k) if k == "let" => {
                self.bump();
                let name = self.ident()?;
                let ty = if self.eat(":") {
                    Some(Box::new(self.term(0)?))
                } else {
                    None
                };
                self.expect(":=")?;
                let value = self.term(0)?;
                self.expect(";")?;
                let body = self.term(0)?;
                Ok(Surface::Let(name, ty, Box::new(value), Box::new(body)))
            }
            Tok::Sym("¬") => {
                self.bump();
                let arg = self.term(40)?;
                Ok(Surface::Notation(Op::Not, vec![arg]))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Surface, SyntaxError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "Prop" => Ok(Surface::Sort(Level::Prop)),
                    "Type" => Ok(Surface::Sort(Level::Type)),
                    "nat_lit" => match self.bump() {
                        (Tok::Num(n), _) => Ok(Surface::NatLit(n)),
                        _ => {
                            self.pos -= 1;
                            self.err("expected numeral after `nat_lit`")
                        }
                    },
                    _ => Ok(Surface::Var(s, span)),
                }
            }
            Tok::At(s) => {
                self.bump();
                Ok(Surface::ExplicitVar(s, span))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Surface::Num(n, span))
            }
            Tok::Sym("_") => {
                self.bump();
                Ok(Surface::Hole(span))
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.term(0)?;
                if self.eat(":") {
                    let ty = self.term(0)?;
                    self.expect(")")?;
                    Ok(Surface::Ascribe(Box::new(inner), Box::new(ty)))
                } else {
                    self.expect(")")?;
                    Ok(inner)
                }
            }
            _ => self.err("expected a term"),
        }
    }

    /// `x`, `x y : T`, `(x y : T)`, `{x : T}` sequences.
    fn binders(&mut self) -> Result<Vec<SBinder>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Sym(open @ ("(" | "{")) => {
                    self.bump();
                    let implicit = open == "{";
                    let mut names = vec![self.ident()?];
                    while matches!(self.peek(), Tok::Ident(_) | Tok::Sym("_")) {
                        names.push(self.ident()?);
                    }
                    self.expect(":")?;
                    let ty = self.term(0)?;
                    self.expect(if implicit { "}" } else { ")" })?;
                    out.extend(names.into_iter().map(|name| SBinder {
                        name,
                        ty: Some(ty.clone()),
                        implicit,
                    }));
                }
                Tok::Ident(_) | Tok::Sym("_") => {
                    let mut names = vec![self.ident()?];
                    while matches!(self.peek(), Tok::Ident(_) | Tok::Sym("_")) {
                        names.push(self.ident()?);
                    }
                    let ty = if self.eat(":") {
                        Some(self.term(0)?)
                    } else {
                        None
                    };
                    out.extend(names.into_iter().map(|name| SBinder {
                        name,
                        ty: ty.clone(),
                        implicit: false,
                    }));
                    // An unparenthesised typed group ends the binder list.
                    break;
                }
                _ => break,
            }
        }
        if out.is_empty() {
            return self.err("expected binder");
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn application_binds_tighter_than_operators() {
        let t = parse_term("f a + g b").unwrap();
        let Surface::Notation(Op::Add, args) = t else {
            panic!("expected +")
        };
        assert!(matches!(args[0], Surface::App(..)));
    }

    #[test]
    fn arrow_is_right_associative() {
        let t = parse_term("Prop → Prop → Prop").unwrap();
        let Surface::Arrow(_, rhs) = t else { panic!() };
        assert!(matches!(*rhs, Surface::Arrow(..)));
    }

    #[test]
    fn not_binds_looser_than_eq_tighter_than_and() {
        let t = parse_term("¬ a ∧ b").unwrap();
        assert!(matches!(t, Surface::Notation(Op::And, _)));
        let t = parse_term("¬ a = b").unwrap();
        assert!(matches!(t, Surface::Notation(Op::Not, _)));
    }

    #[test]
    fn binder_forms() {
        assert!(matches!(parse_term("fun x : Prop => x").unwrap(), Surface::Lam(..)));
        assert!(matches!(parse_term("Π {A : Type}, A → A").unwrap(), Surface::Pi(..)));
        assert!(matches!(
            parse_term("let x : Int := (1 : Int); x").unwrap(),
            Surface::Let(..)
        ));
    }

    #[test]
    fn error_position() {
        let e = parse_term("fun x : Prop =>").unwrap_err();
        assert_eq!((e.line, e.col), (1, 16));
    }
}
