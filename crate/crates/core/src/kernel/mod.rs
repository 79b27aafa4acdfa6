//! The core calculus: terms, contexts, reduction, typing and definitional
//! equality.
//!
//! Two sorts are available, `Prop` and `Type`, with `Prop : Type` and
//! `Type : Type`. Products into `Prop` are impredicative.

mod context;
mod defeq;
mod environment;
mod error;
mod reduce;
mod term;
mod typing;

pub use context::{LocalContext, LocalDecl};
pub use defeq::is_def_eq;
pub use environment::{Declaration, Environment};
pub use error::KernelError;
pub use reduce::{step_once, whnf, whnf_core};
pub use term::{BinderName, FVarId, Level, MVarId, Term};
pub use typing::{check_closed, infer_type};
