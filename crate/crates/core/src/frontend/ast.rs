//! Syntax trees: the raw parse and the scope-resolved program.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::ir::{Prim, Rhs};
use crate::logic::{Formula, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Ident(String, Pos),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>, Pos),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BExp {
    Const(bool),
    Rel(Expr, RelOp, Expr),
    And(Box<BExp>, Box<BExp>),
    Or(Box<BExp>, Box<BExp>),
    Not(Box<BExp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawStmt {
    Assign { name: String, pos: Pos, rhs: Expr },
    Havoc { name: String, pos: Pos },
    Call { target: Option<(String, Pos)>, prim: Prim, arg: Option<(String, Pos)>, pos: Pos },
    Local { name: String, pos: Pos, init: i64 },
    If { cond: BExp, then_branch: Vec<RawStmt>, else_branch: Vec<RawStmt> },
    While { cond: BExp, body: Vec<RawStmt> },
    Assert { cond: BExp, pos: Pos },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawThread {
    pub name: String,
    pub pos: Pos,
    pub body: Vec<RawStmt>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawProgram {
    pub globals: Vec<(String, i64, Pos)>,
    pub events: Vec<(String, Pos)>,
    pub threads: Vec<RawThread>,
}

/// A statement after scope resolution; locals are qualified `thread.name`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign { target: Var, rhs: Rhs },
    Call { target: Option<Var>, prim: Prim, arg: Option<Arc<str>> },
    If { cond: Formula, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    While { cond: Formula, body: Vec<Stmt> },
    Assert { cond: Formula, line: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub name: Arc<str>,
    pub locals: Vec<Var>,
    pub body: Vec<Stmt>,
}

/// A parsed, scope-resolved threaded program; `threads[0]` is `main`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadedProgram {
    pub globals: Vec<(Var, i64)>,
    pub events: Vec<Arc<str>>,
    pub threads: Vec<Thread>,
}
