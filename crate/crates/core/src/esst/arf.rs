use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::frontend::{BlockId, Loc, Program};
use crate::ir::Operation;
use crate::logic::Formula;
use crate::sched::{SchedChoice, SchedulerState};

pub type NodeId = usize;

/// How a node was reached from its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Link {
    Root,
    /// An ART edge: CFG edge `edge` of `thread`, labelled with the operation
    /// actually applied (primitive calls become `x := 0` or `[true]`).
    Edge { thread: usize, edge: usize, label: Operation },
    /// A connector to a new ART rooted at a node where `thread` runs.
    Connector { thread: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    Open,
    Expanded,
    Covered(NodeId),
    /// The conjunction of its regions is unsatisfiable.
    Infeasible,
    Pruned,
}

#[derive(Clone, Debug)]
pub struct ArfNode {
    pub locs: Vec<Loc>,
    pub regions: Vec<Formula>,
    pub global: Formula,
    pub sched: SchedulerState,
    pub sleep: BTreeSet<BlockId>,
    pub parent: Option<NodeId>,
    pub link: Link,
    pub children: Vec<NodeId>,
    pub state: NodeState,
    /// Scheduler choices a persistent set left out at this node.
    pub withheld: Vec<SchedChoice>,
    /// Precision version the regions were computed under.
    pub epoch: usize,
}

impl ArfNode {
    pub fn running(&self) -> Option<usize> {
        self.sched.running()
    }

    pub fn is_error(&self, p: &Program) -> bool {
        self.locs.iter().zip(&p.threads).any(|(l, t)| t.cfg.is_error(*l))
    }

    /// Global region and all thread regions.
    pub fn conjunction(&self) -> Formula {
        Formula::and(core::iter::once(self.global.clone()).chain(self.regions.iter().cloned()))
    }
}

/// The abstract reachability forest. Nodes are never removed; pruned ones
/// keep their slot with state `Pruned`.
#[derive(Clone, Debug, Default)]
pub struct Arf {
    pub nodes: Vec<ArfNode>,
    /// Expanded nodes by (locations, scheduler state), the candidates for
    /// covering.
    pub(crate) index: BTreeMap<(Vec<Loc>, SchedulerState), Vec<NodeId>>,
    /// Nodes covered by each coverer.
    pub(crate) covers: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Arf {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &ArfNode {
        &self.nodes[id]
    }

    /// Nodes that were not pruned.
    pub fn live(&self) -> usize {
        self.nodes.iter().filter(|n| n.state != NodeState::Pruned).count()
    }

    /// Node ids from the root to `id`.
    pub fn path_to(&self, mut id: NodeId) -> Vec<NodeId> {
        let mut out = alloc::vec![id];
        while let Some(p) = self.nodes[id].parent {
            out.push(p);
            id = p;
        }
        out.reverse();
        out
    }

    /// Strict descendants of `id`.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.nodes[id].children.clone();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().copied());
        }
        out
    }

    /// DOT rendering of the live forest: ART edges solid and labelled with
    /// operations, connectors dashed, covering links dotted.
    pub fn to_dot(&self, p: &Program) -> String {
        let mut s = String::from("digraph arf {\n  node [shape=box, fontname=monospace];\n");
        for (id, n) in self.nodes.iter().enumerate() {
            if n.state == NodeState::Pruned {
                continue;
            }
            let locs: Vec<String> =
                n.locs.iter().zip(&p.threads).map(|(l, t)| alloc::format!("{}@{}", t.name, l)).collect();
            let style = match n.state {
                NodeState::Covered(_) => ", style=dashed",
                NodeState::Infeasible => ", color=gray",
                _ if n.is_error(p) => ", color=red",
                _ => "",
            };
            let _ = writeln!(
                s,
                "  n{} [label=\"#{} {}\\n{}\"{}];",
                id,
                id,
                escape(&locs.join(" ")),
                escape(&n.sched.summary()),
                style
            );
            if let Some(parent) = n.parent {
                match &n.link {
                    Link::Edge { label, .. } => {
                        let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"];", parent, id, escape(&alloc::format!("{}", label)));
                    }
                    Link::Connector { thread } => {
                        let _ = writeln!(
                            s,
                            "  n{} -> n{} [style=dashed, label=\"run {}\"];",
                            parent, id, escape(&p.threads[*thread].name)
                        );
                    }
                    Link::Root => {}
                }
            }
            if let NodeState::Covered(by) = n.state {
                let _ = writeln!(s, "  n{} -> n{} [style=dotted, arrowhead=empty];", id, by);
            }
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
