//! Symbolic engine: formulas, satisfiability, interpolation and abstraction.

mod abstraction;
mod formula;
mod interpolate;
mod linear;
mod post;
mod simplex;
mod solver;

use alloc::string::String;

pub use abstraction::{abstract_formula, abstract_post, Precision, DEFAULT_MAX_PREDS};
pub use formula::{negate_atom, Formula, Literal, Nnf};
pub use interpolate::{interpolate, interpolate_cubes, interpolate_sequence};
pub use linear::{rat, Atom, AtomOrConst, LinTerm, Rational, Rel, Var, Version};
pub use post::{havoc_of, path_formula, strongest_post, strongest_post_seq, PathFormula};
pub use simplex::{certificate_is_valid, solve, SimplexResult};
pub use solver::{Model, Solver};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("capacity exceeded: more than {limit} {what}")]
    Capacity { what: &'static str, limit: usize },
    #[error("interpolation requested for a satisfiable formula")]
    SatisfiablePath,
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}
