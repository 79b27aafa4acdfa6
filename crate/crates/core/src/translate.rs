//! A compiled rule set bundled with its parser.

use crate::elaborate::{from_external, ElabError};
use crate::emit::{render, EmitError, EmitStats, Emitter, MatchTree, DEFAULT_MAX_DEPTH};
use crate::kernel::{Environment, LocalContext, Term};
use crate::parsegen::{Cst, ParseError, ParserTable};
use crate::rulespec::{load_rules, CompiledRuleSet, RuleError, RuleWarning};

#[derive(Clone, Debug)]
pub struct Translator {
    pub rules: CompiledRuleSet,
    pub table: ParserTable,
    pub warnings: Vec<RuleWarning>,
    pub max_depth: usize,
}

impl Translator {
    pub fn new(rules: CompiledRuleSet) -> Self {
        let table = ParserTable::new(&rules);
        Translator {
            rules,
            table,
            warnings: Vec::new(),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    /// Compiles a rule file against `env`.
    pub fn load(text: &str, env: &Environment) -> Result<Self, RuleError> {
        let (rules, warnings) = load_rules(text, env)?;
        Ok(Translator {
            warnings,
            ..Translator::new(rules)
        })
    }

    pub fn env(&self) -> &Environment {
        &self.rules.env
    }

    pub fn parse(&self, text: &str) -> Result<Cst, ParseError> {
        self.table.parse(text)
    }

    /// Elaborates `text` in the empty context. Returns the term and its type.
    pub fn from_external(&self, text: &str, expected: Option<&Term>) -> Result<(Term, Term), ElabError> {
        from_external(text, &self.rules, &self.table, &LocalContext::new(), expected)
    }

    pub fn to_external(&self, t: &Term) -> Result<String, EmitError> {
        self.to_external_in(t, &LocalContext::new()).map(|(s, _)| s)
    }

    pub fn to_external_in(&self, t: &Term, ctx: &LocalContext) -> Result<(String, EmitStats), EmitError> {
        let mut e = Emitter::new(&self.rules).with_max_depth(self.max_depth);
        let tree = e.match_tree(t, ctx)?;
        Ok((render(&tree, &self.rules, &self.table)?, e.stats))
    }

    pub fn match_tree(&self, t: &Term) -> Result<MatchTree, EmitError> {
        Emitter::new(&self.rules)
            .with_max_depth(self.max_depth)
            .match_tree(t, &LocalContext::new())
    }

    pub fn render(&self, tree: &MatchTree) -> Result<String, EmitError> {
        render(tree, &self.rules, &self.table)
    }

    /// Indices of the rules used only for parentheses.
    pub fn grouping(&self) -> Vec<usize> {
        self.rules.rules.iter().filter(|r| r.grouping).map(|r| r.index).collect()
    }
}
