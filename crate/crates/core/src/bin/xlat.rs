use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xlat::emit::DEFAULT_MAX_DEPTH;
use xlat::env::{load_env_file, prelude};
use xlat::kernel::{Environment, LocalContext, Term};
use xlat::roundtrip;
use xlat::rulespec::{Direction, Priority, RuleKind};
use xlat::syntax::{read_term, show_in};
use xlat::translate::Translator;

#[derive(Parser)]
#[command(name = "xlat", version, about = "Translate between core terms and rule-defined external languages")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate one input in either direction.
    Translate(TranslateArgs),
    /// Check random terms survive a trip through the external language.
    Roundtrip(RoundtripArgs),
    /// Compile a rule file and report how its rules will be used.
    LintRules(Common),
}

#[derive(Args)]
struct Common {
    /// Rule file.
    #[arg(long)]
    rules: PathBuf,
    /// Extra declarations loaded on top of the prelude.
    #[arg(long)]
    env: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("direction").required(true).args(["from_external", "to_external"])))]
struct TranslateArgs {
    #[command(flatten)]
    common: Common,
    /// External text to read.
    #[arg(long, value_name = "TEXT")]
    from_external: Option<String>,
    /// Core term to render; read from stdin when omitted or `-`.
    #[arg(long, value_name = "TERM", num_args = 0..=1, default_missing_value = "-")]
    to_external: Option<String>,
    /// Expected type, in core syntax.
    #[arg(long, value_name = "TYPE")]
    expect: Option<String>,
    /// Recursion limit when rendering.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Print the parse tree of the external text.
    #[arg(long)]
    dump_cst: bool,
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 6)]
    max_term_depth: usize,
}

/// Exit status 1 with a message.
struct Failure(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Translate(a) => translate(a),
        Cmd::Roundtrip(a) => run_roundtrip(a),
        Cmd::LintRules(a) => lint(a),
    };
    match res {
        Ok(code) => code,
        Err(Failure(msg)) => {
            for line in msg.lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &Path) -> String {
    match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            use clap::CommandFactory;
            let mut cmd = Cli::command();
            cmd.error(clap::error::ErrorKind::Io, format!("cannot read `{}`: {e}", path.display()))
                .exit()
        }
    }
}

fn load(common: &Common) -> Result<Translator, Failure> {
    let env: Environment = match &common.env {
        Some(p) => load_env_file(&read_file(p)).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
        None => prelude(),
    };
    let text = read_file(&common.rules);
    Translator::load(&text, &env).map_err(|e| Failure(format!("{}: {e}", common.rules.display())))
}

fn translate(a: &TranslateArgs) -> Result<ExitCode, Failure> {
    let mut tr = load(&a.common)?;
    tr.max_depth = a.max_depth;
    let env = tr.env().clone();
    let ctx = LocalContext::new();
    let numerals = tr.rules.numeral_default_term();
    let expected = match &a.expect {
        Some(s) => Some(
            read_term(s, &env, None, &numerals)
                .map_err(|e| Failure(format!("--expect: {e}")))?
                .0,
        ),
        None => None,
    };
    if let Some(text) = &a.from_external {
        if a.dump_cst {
            let cst = tr.parse(text).map_err(|e| Failure(e.to_string()))?;
            println!("{}", cst.sexp());
        }
        let (t, ty) = tr
            .from_external(text, expected.as_ref())
            .map_err(|e| Failure(e.to_string()))?;
        println!("{} : {}", show_in(&t, &ctx, &env), show_in(&ty, &ctx, &env));
        return Ok(ExitCode::SUCCESS);
    }
    let src = match a.to_external.as_deref() {
        Some("-") | None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure(format!("stdin: {e}")))?;
            s
        }
        Some(s) => s.to_string(),
    };
    let (t, _): (Term, Term) =
        read_term(src.trim(), &env, expected.as_ref(), &numerals).map_err(|e| Failure(e.to_string()))?;
    let out = tr.to_external(&t).map_err(|e| Failure(e.to_string()))?;
    if a.dump_cst {
        let cst = tr.parse(&out).map_err(|e| Failure(e.to_string()))?;
        println!("{}", cst.sexp());
    }
    println!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn run_roundtrip(a: &RoundtripArgs) -> Result<ExitCode, Failure> {
    let tr = load(&a.common)?;
    let r = roundtrip::run(&tr, a.seed, a.count, a.max_term_depth);
    println!(
        "ruleset {}: {} cases, seed {}, max depth {}",
        tr.rules.name, r.count, a.seed, a.max_term_depth
    );
    for (i, why) in &r.excluded {
        let rule = &tr.rules.rules[*i];
        println!("excluded: r{i} (line {}) {}: {why}", rule.line, rule.external_text());
    }
    println!("passed {}, failed {}, skipped {}", r.passed, r.failed, r.skipped);
    if let Some((case, term, reason)) = &r.first_failure {
        println!("first failure (case {case}): {term}");
        println!("  {reason}");
    }
    Ok(if r.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn lint(a: &Common) -> Result<ExitCode, Failure> {
    let tr = load(a)?;
    let rs = &tr.rules;
    println!("ruleset {} (numerals: {})", rs.name, rs.numeral_default);
    for w in &tr.warnings {
        println!("warning: {w}");
    }
    for r in rs.rules.iter().filter(|r| r.priority == Priority::Low) {
        println!("low priority: r{} (line {}) {}", r.index, r.line, r.external_text());
    }
    println!("rules:");
    for r in &rs.rules {
        let dir = match r.direction {
            Direction::Both => "both",
            Direction::ToTermOnly => "to-term",
            Direction::ToExternalOnly => "to-external",
        };
        let kind = match &r.prec.kind {
            RuleKind::Leading(t) => format!("leading {t:?}"),
            RuleKind::IdentLeading(t) => format!("name then {t:?}"),
            RuleKind::Trailing(t) => format!("trailing {t:?}"),
            RuleKind::Bare => "bare".to_string(),
        };
        let mut line = format!(
            "  r{:<3} line {:<4} {:<12} {:<22} level {:<5}",
            r.index, r.line, dir, kind, r.prec.level
        );
        if matches!(r.prec.kind, RuleKind::Trailing(_)) {
            line.push_str(&format!(
                " left {:<5} {}",
                r.prec.left_req,
                if r.right_assoc { "right-assoc" } else { "left-assoc" }
            ));
        }
        if r.grouping {
            line.push_str(" grouping");
        }
        println!("{}", line.trim_end());
    }
    Ok(ExitCode::SUCCESS)
}
