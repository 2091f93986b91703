//! Operations labelling CFG edges.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use core::fmt;

use crate::logic::{Formula, LinTerm, Var};

/// Scheduler primitives of the FairThreads model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prim {
    Await,
    Generate,
    Cooperate,
    Join,
}

impl Prim {
    pub fn name(self) -> &'static str {
        match self {
            Prim::Await => "await",
            Prim::Generate => "generate",
            Prim::Cooperate => "cooperate",
            Prim::Join => "join",
        }
    }

    pub fn from_name(s: &str) -> Option<Prim> {
        Some(match s {
            "await" => Prim::Await,
            "generate" => Prim::Generate,
            "cooperate" => Prim::Cooperate,
            "join" => Prim::Join,
            _ => return None,
        })
    }

    /// Whether a call may hand control back to the scheduler.
    pub fn is_blocking(self) -> bool {
        !matches!(self, Prim::Generate)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rhs {
    Term(LinTerm),
    /// The nondeterministic value `*`.
    Nondet,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Assign { target: Var, rhs: Rhs },
    Assume(Formula),
    /// `target := prim(arg)`; `arg` names an event or a thread.
    Prim { target: Option<Var>, prim: Prim, arg: Option<Arc<str>> },
}

impl Operation {
    pub fn assign(target: Var, t: LinTerm) -> Self {
        Operation::Assign { target, rhs: Rhs::Term(t) }
    }

    pub fn havoc(target: Var) -> Self {
        Operation::Assign { target, rhs: Rhs::Nondet }
    }

    pub fn assume(f: Formula) -> Self {
        Operation::Assume(f)
    }

    pub fn written(&self) -> Option<&Var> {
        match self {
            Operation::Assign { target, .. } => Some(target),
            Operation::Prim { target, .. } => target.as_ref(),
            Operation::Assume(_) => None,
        }
    }

    pub fn read(&self) -> BTreeSet<Var> {
        match self {
            Operation::Assign { rhs: Rhs::Term(t), .. } => t.vars().cloned().collect(),
            Operation::Assume(f) => f.vars(),
            _ => BTreeSet::new(),
        }
    }

    pub fn prim(&self) -> Option<(Prim, Option<&Arc<str>>)> {
        match self {
            Operation::Prim { prim, arg, .. } => Some((*prim, arg.as_ref())),
            _ => None,
        }
    }

    pub fn is_blocking(&self) -> bool {
        matches!(self, Operation::Prim { prim, .. } if prim.is_blocking())
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Assign { target, rhs: Rhs::Term(t) } => write!(f, "{} := {}", target, t),
            Operation::Assign { target, rhs: Rhs::Nondet } => write!(f, "{} := *", target),
            Operation::Assume(c) => write!(f, "[{}]", c),
            Operation::Prim { target, prim, arg } => {
                if let Some(t) = target {
                    write!(f, "{} := ", t)?;
                }
                write!(f, "{}({})", prim.name(), arg.as_deref().unwrap_or(""))
            }
        }
    }
}
