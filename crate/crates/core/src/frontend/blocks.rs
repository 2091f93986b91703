//! Atomic blocks and their syntactic access summaries.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::cfg::{Cfg, Loc};
use crate::ir::{Operation, Prim, Rhs};
use crate::logic::Var;

/// Identity of an atomic block: owning thread index and entry location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId {
    pub thread: usize,
    pub entry: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicBlock {
    pub id: BlockId,
    /// Indices into the owner's `Cfg::edges`.
    pub member_edges: BTreeSet<usize>,
    pub exits: BTreeSet<Loc>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessSummary {
    pub globals_read: BTreeSet<Var>,
    pub globals_written: BTreeSet<Var>,
    pub events_generated: BTreeSet<Arc<str>>,
    pub events_awaited: BTreeSet<Arc<str>>,
    pub threads_joined: BTreeSet<Arc<str>>,
    /// Some path through the block reaches the thread's exit.
    pub terminates: bool,
}

/// Locations where a block starts: the CFG entry and every target of a
/// blocking primitive call.
pub fn block_entries(cfg: &Cfg) -> BTreeSet<Loc> {
    let mut out: BTreeSet<Loc> = cfg.edges.iter().filter(|e| e.op.is_blocking()).map(|e| e.dst).collect();
    out.insert(cfg.entry);
    out
}

pub fn identify_atomic_blocks(thread: usize, cfg: &Cfg) -> Vec<AtomicBlock> {
    block_entries(cfg)
        .into_iter()
        .map(|entry| {
            let mut members = BTreeSet::new();
            let mut exits = BTreeSet::new();
            let mut seen = vec![false; cfg.num_locs as usize];
            let mut stack = vec![entry];
            seen[entry as usize] = true;
            while let Some(l) = stack.pop() {
                if l == cfg.exit || cfg.is_error(l) {
                    exits.insert(l);
                }
                for &k in cfg.outgoing_indices(l) {
                    let e = &cfg.edges[k];
                    members.insert(k);
                    if e.op.is_blocking() {
                        exits.insert(e.dst);
                        continue;
                    }
                    if !seen[e.dst as usize] {
                        seen[e.dst as usize] = true;
                        stack.push(e.dst);
                    }
                }
            }
            AtomicBlock { id: BlockId { thread, entry }, member_edges: members, exits }
        })
        .collect()
}

pub fn compute_access_summary(block: &AtomicBlock, cfg: &Cfg, is_global: impl Fn(&Var) -> bool) -> AccessSummary {
    let mut s = AccessSummary { terminates: block.exits.contains(&cfg.exit), ..Default::default() };
    for &k in &block.member_edges {
        match &cfg.edges[k].op {
            Operation::Assign { target, rhs } => {
                if is_global(target) {
                    s.globals_written.insert(target.clone());
                }
                if let Rhs::Term(t) = rhs {
                    s.globals_read.extend(t.vars().filter(|v| is_global(v)).cloned());
                }
            }
            Operation::Assume(c) => s.globals_read.extend(c.vars().into_iter().filter(|v| is_global(v))),
            Operation::Prim { target, prim, arg } => {
                if let Some(t) = target.as_ref().filter(|t| is_global(t)) {
                    s.globals_written.insert(t.clone());
                }
                if let Some(a) = arg {
                    match prim {
                        Prim::Generate => {
                            s.events_generated.insert(a.clone());
                        }
                        Prim::Await => {
                            s.events_awaited.insert(a.clone());
                        }
                        Prim::Join => {
                            s.threads_joined.insert(a.clone());
                        }
                        Prim::Cooperate => {}
                    }
                }
            }
        }
    }
    s
}
