//! Parsing, CFG construction and static summaries for atomic blocks.

mod ast;
mod blocks;
mod cfg;
mod lexer;
mod parser;
mod resolve;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use ast::{Stmt, Thread, ThreadedProgram};
pub use blocks::{block_entries, compute_access_summary, identify_atomic_blocks, AccessSummary, AtomicBlock, BlockId};
pub use cfg::{build_cfg, Cfg, Edge, Loc};
pub use resolve::local_name;

use crate::logic::Var;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared { line: u32, col: u32, name: String },
    #[error("duplicate thread `{0}`")]
    DuplicateThread(String),
    #[error("{line}:{col}: non-constant primitive argument to `{prim}`")]
    NonConstantArgument { line: u32, col: u32, prim: &'static str },
    #[error("{line}:{col}: non-linear expression")]
    NonLinear { line: u32, col: u32 },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: u32, col: u32, msg: String },
    #[error("no thread named `main`")]
    MissingMain,
    #[error("thread `main` must be declared first")]
    MainNotFirst,
}

/// Parses and scope-resolves program text.
pub fn parse_program(text: &str) -> Result<ThreadedProgram, FrontendError> {
    resolve::resolve(&parser::parse_raw(text)?)
}

pub fn build_cfgs(p: &ThreadedProgram) -> Vec<Cfg> {
    p.threads.iter().map(|t| build_cfg(&t.body)).collect()
}

#[derive(Clone, Debug)]
pub struct ThreadInfo {
    pub name: Arc<str>,
    pub locals: Vec<Var>,
    pub cfg: Cfg,
    pub blocks: Vec<AtomicBlock>,
    pub summaries: Vec<AccessSummary>,
    block_at: BTreeMap<Loc, usize>,
}

impl ThreadInfo {
    /// The block whose entry is `l`, if any.
    pub fn block_at(&self, l: Loc) -> Option<usize> {
        self.block_at.get(&l).copied()
    }
}

/// A program ready for analysis: CFGs plus atomic-block summaries.
#[derive(Clone, Debug)]
pub struct Program {
    pub ast: ThreadedProgram,
    pub globals: Vec<Var>,
    pub events: Vec<Arc<str>>,
    pub threads: Vec<ThreadInfo>,
    global_names: BTreeSet<Arc<str>>,
    local_owner: BTreeMap<Arc<str>, usize>,
}

impl Program {
    pub fn from_source(text: &str) -> Result<Program, FrontendError> {
        Ok(Program::new(parse_program(text)?))
    }

    pub fn new(ast: ThreadedProgram) -> Program {
        let globals: Vec<Var> = ast.globals.iter().map(|(v, _)| v.clone()).collect();
        let global_names: BTreeSet<Arc<str>> = globals.iter().map(|v| v.name.clone()).collect();
        let is_global = |v: &Var| global_names.contains(&v.name);
        let mut local_owner = BTreeMap::new();
        let mut threads = Vec::with_capacity(ast.threads.len());
        for (i, t) in ast.threads.iter().enumerate() {
            for l in &t.locals {
                local_owner.insert(l.name.clone(), i);
            }
            let cfg = build_cfg(&t.body);
            let blocks = identify_atomic_blocks(i, &cfg);
            let summaries = blocks.iter().map(|b| compute_access_summary(b, &cfg, is_global)).collect();
            let block_at = blocks.iter().enumerate().map(|(k, b)| (b.id.entry, k)).collect();
            threads.push(ThreadInfo { name: t.name.clone(), locals: t.locals.clone(), cfg, blocks, summaries, block_at });
        }
        Program { events: ast.events.clone(), globals, threads, global_names, local_owner, ast }
    }

    pub fn is_global(&self, v: &Var) -> bool {
        self.global_names.contains(&v.name)
    }

    /// Thread owning a local variable (any SSA/shadow version).
    pub fn owner(&self, v: &Var) -> Option<usize> {
        self.local_owner.get(&v.name).copied()
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|t| &*t.name == name)
    }

    pub fn num_threads(&self) -> usize {
        self.threads.len()
    }

    pub fn block(&self, id: BlockId) -> Option<(&AtomicBlock, &AccessSummary)> {
        let t = self.threads.get(id.thread)?;
        let k = t.block_at(id.entry)?;
        Some((&t.blocks[k], &t.summaries[k]))
    }

    pub fn summary(&self, id: BlockId) -> Option<&AccessSummary> {
        self.block(id).map(|(_, s)| s)
    }

    /// All block ids in (thread, entry) order.
    pub fn block_ids(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.threads.iter().flat_map(|t| t.blocks.iter().map(|b| b.id))
    }

    /// Initial value of every global.
    pub fn global_inits(&self) -> impl Iterator<Item = (&Var, i64)> {
        self.ast.globals.iter().map(|(v, k)| (v, *k))
    }
}
