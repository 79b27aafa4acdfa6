use super::term::{FVarId, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDecl {
    pub fvar: FVarId,
    pub name: String,
    pub ty: Term,
    pub value: Option<Term>,
}

/// Ordered free-variable declarations. Later entries may mention earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalContext {
    entries: Vec<LocalDecl>,
}

impl LocalContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LocalDecl] {
        &self.entries
    }

    pub fn get(&self, fvar: FVarId) -> Option<&LocalDecl> {
        self.entries.iter().rev().find(|d| d.fvar == fvar)
    }

    pub fn contains(&self, fvar: FVarId) -> bool {
        self.get(fvar).is_some()
    }

    /// Innermost entry with the given display name.
    pub fn find_by_name(&self, name: &str) -> Option<&LocalDecl> {
        self.entries.iter().rev().find(|d| d.name == name)
    }

    pub fn push(&mut self, decl: LocalDecl) {
        debug_assert!(!self.contains(decl.fvar), "duplicate fvar in context");
        self.entries.push(decl);
    }

    /// Declares a fresh fvar and returns it.
    pub fn push_local(&mut self, name: impl Into<String>, ty: Term) -> FVarId {
        let fvar = FVarId::fresh();
        self.push(LocalDecl {
            fvar,
            name: name.into(),
            ty,
            value: None,
        });
        fvar
    }

    pub fn push_let(&mut self, name: impl Into<String>, ty: Term, value: Term) -> FVarId {
        let fvar = FVarId::fresh();
        self.push(LocalDecl {
            fvar,
            name: name.into(),
            ty,
            value: Some(value),
        });
        fvar
    }

    pub fn with_local(&self, name: impl Into<String>, ty: Term) -> (LocalContext, FVarId) {
        let mut ctx = self.clone();
        let f = ctx.push_local(name, ty);
        (ctx, f)
    }

    pub fn pop(&mut self) -> Option<LocalDecl> {
        self.entries.pop()
    }

    /// True when every entry of `self` appears in `other` in the same order.
    pub fn is_prefix_of(&self, other: &LocalContext) -> bool {
        self.entries.len() <= other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.fvar == b.fvar)
    }
}
