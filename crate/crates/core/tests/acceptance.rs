//! Acceptance checks. Prints one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use xlat::elaborate::ElabError;
use xlat::emit::{EmitError, MatchTree};
use xlat::env::load_env_file;
use xlat::kernel::{check_closed, Environment, KernelError, LocalContext, Term};
use xlat::roundtrip;
use xlat::rulespec::{Direction, RuleWarning};
use xlat::translate::Translator;

const LISTING_BUDGET: Duration = Duration::from_secs(1);
const ROUNDTRIP_BUDGET: Duration = Duration::from_secs(30);
const TERMINATION_BUDGET: Duration = Duration::from_secs(1);
const ROUNDTRIP_SEED: u64 = 20261015;
const ROUNDTRIP_CASES: usize = 1000;
const ROUNDTRIP_DEPTH: usize = 6;
const RENDERED_SEED: u64 = 7_000_000;
const RENDERED_CASES: u64 = 500;
const PROPERTY_CASES: u64 = 1000;

/// Terms returned by elaboration, re-checked by criterion 8.
#[derive(Default)]
struct Corpus(Vec<(Term, Environment)>);

impl Corpus {
    fn read(&mut self, tr: &Translator, text: &str) -> Result<(Term, Term), String> {
        let r = tr.from_external(text, None).map_err(|e| format!("`{text}`: {e}"))?;
        self.0.push((r.0.clone(), tr.env().clone()));
        Ok(r)
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn not(t: Term) -> Term {
    Term::app(Term::cnst("Not"), t)
}

fn c1_listing(corpus: &mut Corpus) -> Result<String, String> {
    let start = Instant::now();
    let py = translator(PYTHON);
    let one_way = translator(PYTHON_ONE_WAY);

    let r = corpus.read(&py, "True")?;
    ensure(r == (Term::cnst("True"), Term::prop()), format!("True gave {r:?}"))?;
    let s = py.to_external(&Term::cnst("False")).map_err(|e| e.to_string())?;
    ensure(s == "False", format!("False rendered as {s:?}"))?;
    let r = corpus.read(&py, "not True")?;
    ensure(r.0 == not(Term::cnst("True")), format!("not True gave {:?}", r.0))?;
    let s = py.to_external(&not(Term::cnst("False"))).map_err(|e| e.to_string())?;
    ensure(s == "not False", format!("¬ False rendered as {s:?}"))?;
    let (t, ty) = corpus.read(&py, "myvar = int(1); myvar")?;
    match &t {
        Term::Let { name, body, .. } if name.as_str() == "myvar" && **body == Term::BVar(0) => {}
        other => return Err(format!("let listing gave {other:?}")),
    }
    ensure(ty == Term::cnst("Int"), format!("let listing has type {ty:?}"))?;
    let r = corpus.read(&one_way, "(True, False)[0]")?;
    ensure(r == (Term::cnst("True"), Term::prop()), format!("tuple listing gave {r:?}"))?;
    let took = start.elapsed();
    ensure(took < LISTING_BUDGET, format!("took {took:?}"))?;
    Ok(format!("6 listings replayed in {took:?}"))
}

fn c2_implicits(corpus: &mut Corpus) -> Result<String, String> {
    let py = translator(PYTHON);
    let mut out = Vec::new();
    for (text, ty) in [("int(1) + int(1)", "Int"), ("float(1) + float(1)", "Float")] {
        let (t, inferred) = corpus.read(&py, text)?;
        let checked = check_closed(&t, &LocalContext::new(), py.env()).map_err(|e| e.to_string())?;
        ensure(inferred == Term::cnst(ty) && checked == Term::cnst(ty), format!("{text} : {inferred:?}"))?;
        let one = Term::apps(Term::cnst("numCast"), [Term::cnst(ty), Term::NatLit(1u32.into())]);
        let expected = Term::apps(Term::cnst("add"), [Term::cnst(ty), one.clone(), one]);
        let nf = normalize(&t, py.env());
        ensure(nf == expected, format!("{text} normalises to {nf:?}"))?;
        let root = match py.parse(text).map_err(|e| e.to_string())? {
            xlat::parsegen::Cst::Node { rule, .. } => rule,
            other => return Err(format!("{text} parsed as {}", other.sexp())),
        };
        ensure(root == 6, format!("{text} used rule {root}"))?;
        out.push(format!("{text} : {ty}"));
    }
    Ok(format!("{} via the same `+` rule", out.join(", ")))
}

fn c3_precedence() -> Result<String, String> {
    let shape = |rules: &str, text: &str| -> Result<String, String> {
        let tr = Translator::load(rules, &xlat::env::prelude()).map_err(|e| e.to_string())?;
        Ok(tr.parse(text).map_err(|e| e.to_string())?.sexp())
    };
    let cases = [
        (PYTHON.to_string(), "1 + 2 + 3", "(r6 (r6 (num 1) (num 2)) (num 3))"),
        (
            PYTHON.replace("a \"+\" b <==> a + b", "a \"+\" b <==> a + b +rightAssociative"),
            "1 + 2 + 3",
            "(r6 (num 1) (r6 (num 2) (num 3)))",
        ),
        (ARITH.to_string(), "1 + 2 * 3", "(r0 (num 1) (r2 (num 2) (num 3)))"),
        (ARITH.to_string(), "1 * 2 + 3", "(r0 (r2 (num 1) (num 2)) (num 3))"),
        (
            ARITH.replace("(precedence := 70)", "(precedence := 60)"),
            "1 + 2 * 3",
            "(r2 (r0 (num 1) (num 2)) (num 3))",
        ),
    ];
    for (rules, text, want) in &cases {
        let got = shape(rules, text)?;
        ensure(&got == want, format!("{text}: {got}, expected {want}"))?;
    }
    Ok(format!("{} trees match", cases.len()))
}

fn c4_roundtrip_a() -> Result<String, String> {
    let mut out = Vec::new();
    for rules in [PYTHON, ARITH] {
        let tr = translator(rules);
        let start = Instant::now();
        let r = roundtrip::run(&tr, ROUNDTRIP_SEED, ROUNDTRIP_CASES, ROUNDTRIP_DEPTH);
        let took = start.elapsed();
        ensure(
            r.passed == ROUNDTRIP_CASES,
            format!("{}: {r:?}", tr.rules.name),
        )?;
        ensure(took < ROUNDTRIP_BUDGET, format!("{} took {took:?}", tr.rules.name))?;
        out.push(format!("{} {}/{} in {took:.1?}", tr.rules.name, r.passed, r.count));
    }
    Ok(format!("{} (seed {ROUNDTRIP_SEED}, depth <= {ROUNDTRIP_DEPTH})", out.join(", ")))
}

fn c5_roundtrip_b(corpus: &mut Corpus) -> Result<String, String> {
    let mut out = Vec::new();
    for rules in [PYTHON, ARITH] {
        let tr = translator(rules);
        let g = tr.grouping();
        let mut passed = 0;
        for i in 0..RENDERED_CASES {
            let (_, t) = roundtrip::random_term(&tr, RENDERED_SEED + i, ROUNDTRIP_DEPTH)
                .ok_or_else(|| format!("no term for seed {}", RENDERED_SEED + i))?;
            let s = tr.to_external(&t).map_err(|e| e.to_string())?;
            let (back, _) = corpus.read(&tr, &s)?;
            let s2 = tr.to_external(&back).map_err(|e| e.to_string())?;
            let a = MatchTree::from_cst(&tr.parse(&s).map_err(|e| e.to_string())?, &g);
            let b = MatchTree::from_cst(&tr.parse(&s2).map_err(|e| e.to_string())?, &g);
            ensure(a == b, format!("`{s}` came back as `{s2}`"))?;
            passed += 1;
        }
        out.push(format!("{} {passed}/{RENDERED_CASES}", tr.rules.name));
    }
    Ok(out.join(", "))
}

fn c6_irreversible(corpus: &mut Corpus) -> Result<String, String> {
    let tr = translator(IRREVERSIBLE);
    ensure(tr.warnings.len() == 1, format!("warnings: {:?}", tr.warnings))?;
    let RuleWarning::IrreversibleRule { missing, direction, .. } = &tr.warnings[0];
    ensure(
        missing == &vec!["b".to_string()] && *direction == Direction::ToTermOnly,
        format!("warning: {}", tr.warnings[0]),
    )?;
    let (t, _) = corpus.read(&tr, "first(True, False)")?;
    ensure(t == Term::cnst("True"), format!("read {t:?}"))?;
    // The rule's term side is a bare nonterminal, so were it used for
    // rendering it would match anything.
    let or = Term::apps(Term::cnst("Or"), [Term::cnst("True"), Term::cnst("True")]);
    let r = tr.to_external(&or);
    ensure(matches!(r, Err(EmitError::NoMatch { .. })), format!("rendered Or as {r:?}"))?;
    Ok(format!("one warning ({}); read-only in use", tr.warnings[0]))
}

fn c7_priority(corpus: &mut Corpus) -> Result<String, String> {
    let tr = translator(WITH_IDENTITY);
    let (t, _) = corpus.read(&tr, "id(not True) and False")?;
    let mut low = 0;
    let mut cases = vec![t];
    for i in 0..300 {
        if let Some((_, t)) = roundtrip::random_term(&tr, i, ROUNDTRIP_DEPTH) {
            cases.push(t);
        }
    }
    for t in &cases {
        let (_, stats) = tr
            .to_external_in(t, &LocalContext::new())
            .map_err(|e| e.to_string())?;
        low += stats.low_priority_applications;
    }
    ensure(low == 0, format!("low-priority rule applied {low} times"))?;

    let start = Instant::now();
    let or = Term::apps(Term::cnst("Or"), [Term::cnst("True"), Term::cnst("False")]);
    let r = tr.to_external(&or);
    ensure(matches!(r, Err(EmitError::NoMatch { .. })), format!("untranslatable input gave {r:?}"))?;
    let deep = (0..600).fold(Term::cnst("True"), |t, _| not(t));
    let r = tr.to_external(&deep);
    ensure(matches!(r, Err(EmitError::DepthExceeded(512))), format!("deep input gave {r:?}"))?;
    let took = start.elapsed();
    ensure(took < TERMINATION_BUDGET, format!("termination took {took:?}"))?;
    Ok(format!(
        "0 low-priority uses over {} terms; NoMatch and DepthExceeded(512) in {took:?}",
        cases.len()
    ))
}

fn c8_final_check(corpus: &mut Corpus) -> Result<String, String> {
    let logic = Translator::load(LOGIC, &demo_env()).map_err(|e| e.to_string())?;
    for text in ["forall x, x /\\ P \\/ Q", "~ (forall p, forall q, p \\/ q)"] {
        corpus.read(&logic, text)?;
    }
    for (t, env) in &corpus.0 {
        check_closed(t, &LocalContext::new(), env).map_err(|e| format!("{t:?}: {e}"))?;
    }
    let env = load_env_file("constant Both : Prop → (Prop → Prop) → Prop").map_err(|e| e.to_string())?;
    let leak = Translator::load(
        "external leak where\n  \"leak\" ($x) b <==> Both b (fun x : Prop => b)\n  \"True\" <==> True\n",
        &env,
    )
    .map_err(|e| e.to_string())?;
    let ok = leak.from_external("leak y True", None);
    ensure(ok.is_ok(), format!("in-scope use rejected: {ok:?}"))?;
    let bad = leak.from_external("leak y y", None);
    ensure(
        matches!(bad, Err(ElabError::IllTyped(KernelError::UnscopedVar(_)))),
        format!("leaking use gave {bad:?}"),
    )?;
    Ok(format!("{} terms re-checked; leaking rule rejected", corpus.0.len()))
}

fn c9_kernel() -> Result<String, String> {
    let mut failed_defeq = 0;
    for seed in 0..PROPERTY_CASES {
        props::whnf_idempotent(seed)?;
        if props::rollback_on_failure(seed)? {
            failed_defeq += 1;
        }
        props::abstract_instantiate_inverse(seed)?;
    }
    ensure(failed_defeq > 0, "no failing comparisons exercised rollback")?;
    Ok(format!(
        "{PROPERTY_CASES} cases each; {failed_defeq} rollbacks compared against snapshots"
    ))
}

#[test]
fn acceptance() {
    let mut corpus = Corpus::default();
    let mut results: Vec<(u8, &str, Result<String, String>)> = Vec::new();
    let mut run = |n: u8, name: &'static str, f: &mut dyn FnMut(&mut Corpus) -> Result<String, String>| {
        let r = catch_unwind(AssertUnwindSafe(|| f(&mut corpus)))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        results.push((n, name, r));
    };
    run(1, "listing replay", &mut c1_listing);
    run(2, "deferred implicit inference", &mut c2_implicits);
    run(3, "associativity and precedence", &mut |_| c3_precedence());
    run(4, "round-trip A", &mut |_| c4_roundtrip_a());
    run(5, "round-trip B", &mut c5_roundtrip_b);
    run(6, "irreversibility detection", &mut c6_irreversible);
    run(7, "priority and termination", &mut c7_priority);
    run(8, "final type-check safety", &mut c8_final_check);
    run(9, "kernel properties", &mut |_| c9_kernel());

    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(why) => println!("criterion {n} ({name}): FAIL - {why}"),
        }
    }
    let failed: Vec<_> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
