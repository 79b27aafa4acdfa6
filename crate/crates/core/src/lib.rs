//! Bidirectional translation between a small dependently typed core calculus
//! and user-defined external languages described by rule files.

pub mod elaborate;
pub mod emit;
pub mod env;
pub mod kernel;
pub mod parsegen;
pub mod roundtrip;
pub mod rulespec;
pub mod syntax;
pub mod translate;
pub mod unify;
