//! An engine for the Object Constraint Language: parsing, type checking and
//! three-valued evaluation of constraints over object snapshots.

pub mod contracts;
pub mod diag;
pub mod dynamics;
pub mod eval;
pub mod fixpoint;
pub mod model;
pub mod syntax;
pub mod types;

pub use diag::{Diagnostic, Diagnostics, Pos, Severity};
