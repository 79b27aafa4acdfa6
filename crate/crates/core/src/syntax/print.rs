use crate::kernel::{Environment, LocalContext, Term};

const MAX: u32 = 1024;
const ARG: u32 = MAX + 1;

/// Renders `t` without an environment; constants taking implicit arguments
/// are printed as if they took none.
pub fn show(t: &Term) -> String {
    Printer::default().print(t)
}

/// Renders `t` with free variables named from `ctx`.
pub fn show_in(t: &Term, ctx: &LocalContext, env: &Environment) -> String {
    Printer {
        env: Some(env),
        ctx: Some(ctx),
    }
    .print(t)
}

#[derive(Clone, Copy, Default)]
pub struct Printer<'a> {
    pub env: Option<&'a Environment>,
    pub ctx: Option<&'a LocalContext>,
}

impl Printer<'_> {
    pub fn print(&self, t: &Term) -> String {
        self.go(t, &mut Vec::new(), 0)
    }

    fn go(&self, t: &Term, names: &mut Vec<String>, prec: u32) -> String {
        let (s, level) = self.term(t, names);
        if level < prec {
            format!("({s})")
        } else {
            s
        }
    }

    fn implicit_prefix(&self, name: &str) -> usize {
        let Some(decl) = self.env.and_then(|e| e.get(name)) else {
            return 0;
        };
        let mut n = 0;
        let mut ty = &decl.ty;
        while let Term::Pi {
            implicit: true,
            body,
            ..
        } = ty
        {
            n += 1;
            ty = body;
        }
        n
    }

    fn fresh_name(&self, base: &str, names: &[String], used: bool) -> String {
        let base = if base.is_empty() || base == "_" {
            if !used {
                return "_".into();
            }
            "x"
        } else {
            base
        };
        let taken = |n: &str| {
            names.iter().any(|m| m == n)
                || self.ctx.is_some_and(|c| c.find_by_name(n).is_some())
                || self.env.is_some_and(|e| e.contains(n))
        };
        if !taken(base) {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| !taken(n))
            .unwrap()
    }

    fn binary(&self, op: &str, a: &Term, b: &Term, names: &mut Vec<String>, lvl: u32, right: bool) -> (String, u32) {
        let (lp, rp) = if right { (lvl + 1, lvl) } else { (lvl, lvl + 1) };
        let l = self.go(a, names, lp);
        let r = self.go(b, names, rp);
        (format!("{l} {op} {r}"), lvl)
    }

    fn term(&self, t: &Term, names: &mut Vec<String>) -> (String, u32) {
        match t {
            Term::Sort(crate::kernel::Level::Prop) => ("Prop".into(), ARG),
            Term::Sort(crate::kernel::Level::Type) => ("Type".into(), ARG),
            Term::Const(c) => {
                if self.implicit_prefix(c) > 0 {
                    (format!("@{c}"), ARG)
                } else {
                    (c.clone(), ARG)
                }
            }
            Term::FVar(f) => match self.ctx.and_then(|c| c.get(*f)) {
                Some(d) => (d.name.clone(), ARG),
                None => (format!("_fv{}", f.0), ARG),
            },
            Term::MVar(m) => (m.to_string(), ARG),
            Term::BVar(i) => match names.len().checked_sub(*i as usize + 1) {
                Some(k) => (names[k].clone(), ARG),
                None => (format!("#{i}"), ARG),
            },
            Term::NatLit(n) => (format!("nat_lit {n}"), ARG),
            Term::App(..) => self.app(t, names),
            Term::Lam { name, ty, body } => {
                let ty_s = self.go(ty, names, 0);
                let n = self.fresh_name(name.as_str(), names, body.has_loose_bvar(0));
                names.push(n.clone());
                let b = self.go(body, names, 0);
                names.pop();
                (format!("fun {n} : {ty_s} => {b}"), 0)
            }
            Term::Pi {
                name,
                ty,
                body,
                implicit,
            } => {
                let used = body.has_loose_bvar(0);
                if !used && !implicit {
                    let d = self.go(ty, names, 26);
                    names.push("_".into());
                    let c = self.go(body, names, 25);
                    names.pop();
                    return (format!("{d} → {c}"), 25);
                }
                let ty_s = self.go(ty, names, 0);
                let n = self.fresh_name(name.as_str(), names, true);
                names.push(n.clone());
                let b = self.go(body, names, 0);
                names.pop();
                if *implicit {
                    (format!("Π {{{n} : {ty_s}}}, {b}"), 0)
                } else {
                    (format!("Π {n} : {ty_s}, {b}"), 0)
                }
            }
            Term::Let {
                name,
                ty,
                value,
                body,
            } => {
                let ty_s = self.go(ty, names, 0);
                let v = self.go(value, names, 0);
                let n = self.fresh_name(name.as_str(), names, true);
                names.push(n.clone());
                let b = self.go(body, names, 0);
                names.pop();
                (format!("let {n} : {ty_s} := {v}; {b}"), 0)
            }
        }
    }

    fn app(&self, t: &Term, names: &mut Vec<String>) -> (String, u32) {
        let (head, args) = t.app_spine();
        if let Term::Const(c) = head {
            match (c.as_str(), args.as_slice()) {
                ("Not", [a]) => return (format!("¬ {}", self.go(a, names, 40)), 40),
                ("And", [a, b]) => return self.binary("∧", a, b, names, 35, true),
                ("Or", [a, b]) => return self.binary("∨", a, b, names, 30, true),
                ("Eq", [_, a, b]) => {
                    let l = self.go(a, names, 51);
                    let r = self.go(b, names, 51);
                    return (format!("{l} = {r}"), 50);
                }
                ("add", [_, a, b]) => return self.binary("+", a, b, names, 65, false),
                ("sub", [_, a, b]) => return self.binary("-", a, b, names, 65, false),
                ("mul", [_, a, b]) => return self.binary("*", a, b, names, 70, false),
                ("numCast", [ty, Term::NatLit(n)]) => {
                    if matches!(ty, Term::Const(k) if k == "Nat") {
                        return (n.to_string(), ARG);
                    }
                    return (format!("({n} : {})", self.go(ty, names, 0)), ARG);
                }
                _ => {}
            }
        }
        let mut s = self.go(head, names, MAX);
        for a in args {
            s.push(' ');
            s.push_str(&self.go(a, names, ARG));
        }
        (s, MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrows_and_binders() {
        let t = Term::pi("A", Term::ty(), Term::arrow(Term::BVar(0), Term::BVar(0)));
        assert_eq!(show(&t), "Π A : Type, A → A");
    }

    #[test]
    fn shadowed_names_are_renamed() {
        let t = Term::lam("x", Term::prop(), Term::lam("x", Term::prop(), Term::BVar(1)));
        assert_eq!(show(&t), "fun x : Prop => fun x_1 : Prop => x");
    }

    #[test]
    fn notation_parenthesises_by_precedence() {
        let n = |k: u64| Term::apps(Term::cnst("numCast"), [Term::cnst("Nat"), Term::nat(k)]);
        let add = |a, b| Term::apps(Term::cnst("add"), [Term::cnst("Nat"), a, b]);
        let mul = |a, b| Term::apps(Term::cnst("mul"), [Term::cnst("Nat"), a, b]);
        assert_eq!(show(&mul(add(n(1), n(2)), n(3))), "(1 + 2) * 3");
        assert_eq!(show(&add(n(1), mul(n(2), n(3)))), "1 + 2 * 3");
        assert_eq!(show(&add(n(1), add(n(2), n(3)))), "1 + (2 + 3)");
    }
}
