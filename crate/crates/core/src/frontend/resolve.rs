//! Scope resolution and lowering of expressions to linear terms.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::ast::{BExp, Expr, Pos, RawProgram, RawStmt, RelOp, Stmt, Thread, ThreadedProgram};
use super::FrontendError;
use crate::ir::{Prim, Rhs};
use crate::logic::{rat, Formula, LinTerm, Var};

struct Scope<'a> {
    thread: &'a str,
    globals: &'a BTreeSet<String>,
    events: &'a BTreeSet<String>,
    threads: &'a BTreeSet<String>,
    locals: BTreeSet<String>,
    order: Vec<Var>,
}

fn semantic(pos: Pos, msg: String) -> FrontendError {
    FrontendError::Semantic { line: pos.line, col: pos.col, msg }
}

/// The qualified name of a thread-local variable.
pub fn local_name(thread: &str, name: &str) -> String {
    alloc::format!("{}.{}", thread, name)
}

impl Scope<'_> {
    fn var(&self, name: &str, pos: Pos) -> Result<Var, FrontendError> {
        if self.locals.contains(name) {
            Ok(Var::new(&local_name(self.thread, name)))
        } else if self.globals.contains(name) {
            Ok(Var::new(name))
        } else {
            Err(FrontendError::Undeclared { line: pos.line, col: pos.col, name: name.to_string() })
        }
    }

    fn term(&self, e: &Expr) -> Result<LinTerm, FrontendError> {
        Ok(match e {
            Expr::Int(v) => LinTerm::int(*v),
            Expr::Ident(n, p) => LinTerm::var(self.var(n, *p)?),
            Expr::Neg(a) => self.term(a)?.neg(),
            Expr::Add(a, b) => self.term(a)?.add(&self.term(b)?),
            Expr::Sub(a, b) => self.term(a)?.sub(&self.term(b)?),
            Expr::Mul(a, b, p) => {
                let (x, y) = (self.term(a)?, self.term(b)?);
                if x.is_constant() {
                    y.scale(x.constant_part())
                } else if y.is_constant() {
                    x.scale(y.constant_part())
                } else {
                    return Err(FrontendError::NonLinear { line: p.line, col: p.col });
                }
            }
        })
    }

    fn cond(&self, b: &BExp) -> Result<Formula, FrontendError> {
        Ok(match b {
            BExp::Const(true) => Formula::True,
            BExp::Const(false) => Formula::False,
            BExp::Rel(l, op, r) => {
                let (l, r) = (self.term(l)?, self.term(r)?);
                match op {
                    RelOp::Lt => Formula::lt(&l, &r),
                    RelOp::Le => Formula::le(&l, &r),
                    RelOp::Eq => Formula::eq(&l, &r),
                    RelOp::Ne => Formula::ne(&l, &r),
                    RelOp::Gt => Formula::gt(&l, &r),
                    RelOp::Ge => Formula::ge(&l, &r),
                }
            }
            BExp::And(a, c) => Formula::and([self.cond(a)?, self.cond(c)?]),
            BExp::Or(a, c) => Formula::or([self.cond(a)?, self.cond(c)?]),
            BExp::Not(a) => Formula::not(self.cond(a)?),
        })
    }

    fn stmts(&mut self, body: &[RawStmt]) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::with_capacity(body.len());
        for s in body {
            out.push(self.stmt(s)?);
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &RawStmt) -> Result<Stmt, FrontendError> {
        Ok(match s {
            RawStmt::Assign { name, pos, rhs } => {
                Stmt::Assign { target: self.var(name, *pos)?, rhs: Rhs::Term(self.term(rhs)?) }
            }
            RawStmt::Havoc { name, pos } => Stmt::Assign { target: self.var(name, *pos)?, rhs: Rhs::Nondet },
            RawStmt::Local { name, pos, init } => {
                if self.globals.contains(name) {
                    return Err(semantic(*pos, alloc::format!("local `{}` shadows a global", name)));
                }
                if !self.locals.insert(name.clone()) {
                    return Err(semantic(*pos, alloc::format!("local `{}` declared twice", name)));
                }
                let v = Var::new(&local_name(self.thread, name));
                self.order.push(v.clone());
                Stmt::Assign { target: v, rhs: Rhs::Term(LinTerm::int(*init)) }
            }
            RawStmt::Call { target, prim, arg, pos: _ } => {
                let target = match target {
                    Some((n, p)) => Some(self.var(n, *p)?),
                    None => None,
                };
                let arg = match (prim, arg) {
                    (Prim::Await | Prim::Generate, Some((e, p))) => {
                        if !self.events.contains(e) {
                            return Err(FrontendError::Undeclared { line: p.line, col: p.col, name: e.clone() });
                        }
                        Some(Arc::from(e.as_str()))
                    }
                    (Prim::Join, Some((t, p))) => {
                        if !self.threads.contains(t) {
                            return Err(FrontendError::Undeclared { line: p.line, col: p.col, name: t.clone() });
                        }
                        if t == self.thread {
                            return Err(semantic(*p, alloc::format!("thread `{}` joins itself", t)));
                        }
                        Some(Arc::from(t.as_str()))
                    }
                    _ => None,
                };
                Stmt::Call { target, prim: *prim, arg }
            }
            RawStmt::If { cond, then_branch, else_branch } => Stmt::If {
                cond: self.cond(cond)?,
                then_branch: self.stmts(then_branch)?,
                else_branch: self.stmts(else_branch)?,
            },
            RawStmt::While { cond, body } => Stmt::While { cond: self.cond(cond)?, body: self.stmts(body)? },
            RawStmt::Assert { cond, pos } => Stmt::Assert { cond: self.cond(cond)?, line: pos.line },
        })
    }
}

pub fn resolve(raw: &RawProgram) -> Result<ThreadedProgram, FrontendError> {
    let mut globals = BTreeSet::new();
    let mut events = BTreeSet::new();
    let mut threads = BTreeSet::new();
    for (g, _, p) in &raw.globals {
        if !globals.insert(g.clone()) {
            return Err(semantic(*p, alloc::format!("global `{}` declared twice", g)));
        }
    }
    for (e, p) in &raw.events {
        if !events.insert(e.clone()) {
            return Err(semantic(*p, alloc::format!("event `{}` declared twice", e)));
        }
    }
    for t in &raw.threads {
        if !threads.insert(t.name.clone()) {
            return Err(FrontendError::DuplicateThread(t.name.clone()));
        }
    }
    match raw.threads.first() {
        Some(t) if t.name == "main" => {}
        _ if threads.contains("main") => return Err(FrontendError::MainNotFirst),
        _ => return Err(FrontendError::MissingMain),
    }

    let mut out_threads = Vec::with_capacity(raw.threads.len());
    for t in &raw.threads {
        let mut scope = Scope {
            thread: &t.name,
            globals: &globals,
            events: &events,
            threads: &threads,
            locals: BTreeSet::new(),
            order: Vec::new(),
        };
        let mut body = scope.stmts(&t.body)?;
        if t.name == "main" {
            let mut init: Vec<Stmt> = raw
                .globals
                .iter()
                .map(|(g, v, _)| Stmt::Assign { target: Var::new(g), rhs: Rhs::Term(LinTerm::constant(rat(*v))) })
                .collect();
            init.append(&mut body);
            body = init;
        }
        out_threads.push(Thread { name: Arc::from(t.name.as_str()), locals: scope.order, body });
    }
    Ok(ThreadedProgram {
        globals: raw.globals.iter().map(|(g, v, _)| (Var::new(g), *v)).collect(),
        events: raw.events.iter().map(|(e, _)| Arc::from(e.as_str())).collect(),
        threads: out_threads,
    })
}
