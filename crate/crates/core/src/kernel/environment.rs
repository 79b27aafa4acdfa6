use std::collections::BTreeMap;

use super::term::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub ty: Term,
    pub value: Option<Term>,
    pub reducible: bool,
}

/// Global constants. Immutable once built; cheap to share behind a reference.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Environment {
    decls: BTreeMap<String, Declaration>,
    order: Vec<String>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Declaration> {
        self.decls.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.decls.contains_key(name)
    }

    /// Inserts without checking; returns false if the name is taken.
    pub(crate) fn insert(&mut self, decl: Declaration) -> bool {
        if self.decls.contains_key(&decl.name) {
            return false;
        }
        self.order.push(decl.name.clone());
        self.decls.insert(decl.name.clone(), decl);
        true
    }

    /// Declarations in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Declaration> {
        self.order.iter().map(move |n| &self.decls[n])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Definition body if `name` is a reducible definition.
    pub fn unfold(&self, name: &str) -> Option<&Term> {
        self.decls
            .get(name)
            .filter(|d| d.reducible)
            .and_then(|d| d.value.as_ref())
    }
}
