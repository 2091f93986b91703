//! Control-flow graphs, one per thread.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ast::Stmt;
use crate::ir::Operation;
use crate::logic::Formula;

pub type Loc = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: Loc,
    pub op: Operation,
    pub dst: Loc,
}

/// A thread's CFG. Locations are `0..num_locs`; edge order is the order in
/// which statements were lowered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    pub num_locs: u32,
    pub entry: Loc,
    pub exit: Loc,
    pub errors: BTreeSet<Loc>,
    pub edges: Vec<Edge>,
    /// Source line of the assertion behind each error location.
    pub assert_lines: BTreeMap<Loc, u32>,
    out: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn outgoing(&self, l: Loc) -> impl Iterator<Item = &Edge> + '_ {
        self.out[l as usize].iter().map(move |&i| &self.edges[i])
    }

    pub fn outgoing_indices(&self, l: Loc) -> &[usize] {
        &self.out[l as usize]
    }

    pub fn is_error(&self, l: Loc) -> bool {
        self.errors.contains(&l)
    }

    pub fn locations(&self) -> impl Iterator<Item = Loc> {
        0..self.num_locs
    }

    /// Structural well-formedness: nothing enters the entry, error locations
    /// and the exit are sinks, and every location is reachable.
    pub fn check(&self) -> Result<(), String> {
        if self.edges.iter().any(|e| e.dst == self.entry) {
            return Err("an edge targets the entry".into());
        }
        for e in &self.edges {
            if self.errors.contains(&e.src) {
                return Err(alloc::format!("error location {} has a successor", e.src));
            }
            if e.src == self.exit {
                return Err("the exit has a successor".into());
            }
        }
        if self.errors.contains(&self.exit) {
            return Err("the exit is an error location".into());
        }
        let mut seen = vec![false; self.num_locs as usize];
        let mut stack = vec![self.entry];
        seen[self.entry as usize] = true;
        while let Some(l) = stack.pop() {
            for e in self.outgoing(l) {
                if !seen[e.dst as usize] {
                    seen[e.dst as usize] = true;
                    stack.push(e.dst);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(l) => Err(alloc::format!("location {} is unreachable", l)),
            None => Ok(()),
        }
    }
}

struct Builder {
    next: Loc,
    edges: Vec<Edge>,
    errors: BTreeSet<Loc>,
    assert_lines: BTreeMap<Loc, u32>,
}

impl Builder {
    fn fresh(&mut self) -> Loc {
        self.next += 1;
        self.next - 1
    }

    fn edge(&mut self, src: Loc, op: Operation, dst: Loc) {
        self.edges.push(Edge { src, op, dst });
    }

    /// Redirects every edge entering `from` to `to`. `from` must be a
    /// frontier location without successors.
    fn merge(&mut self, from: Loc, to: Loc) {
        if from == to {
            return;
        }
        for e in &mut self.edges {
            if e.dst == from {
                e.dst = to;
            }
        }
    }

    fn seq(&mut self, stmts: &[Stmt], mut cur: Loc) -> Loc {
        for s in stmts {
            cur = self.stmt(s, cur);
        }
        cur
    }

    fn stmt(&mut self, s: &Stmt, cur: Loc) -> Loc {
        match s {
            Stmt::Assign { target, rhs } => {
                let n = self.fresh();
                self.edge(cur, Operation::Assign { target: target.clone(), rhs: rhs.clone() }, n);
                n
            }
            Stmt::Call { target, prim, arg } => {
                let n = self.fresh();
                self.edge(cur, Operation::Prim { target: target.clone(), prim: *prim, arg: arg.clone() }, n);
                n
            }
            Stmt::If { cond, then_branch, else_branch } => {
                let t = self.fresh();
                let e = self.fresh();
                self.edge(cur, Operation::assume(cond.clone()), t);
                self.edge(cur, Operation::assume(Formula::not(cond.clone())), e);
                let t_end = self.seq(then_branch, t);
                let e_end = self.seq(else_branch, e);
                self.merge(e_end, t_end);
                t_end
            }
            Stmt::While { cond, body } => {
                let b = self.fresh();
                let x = self.fresh();
                self.edge(cur, Operation::assume(cond.clone()), b);
                self.edge(cur, Operation::assume(Formula::not(cond.clone())), x);
                let b_end = self.seq(body, b);
                self.merge(b_end, cur);
                x
            }
            Stmt::Assert { cond, line } => {
                let ok = self.fresh();
                let err = self.fresh();
                self.errors.insert(err);
                self.assert_lines.insert(err, *line);
                self.edge(cur, Operation::assume(Formula::not(cond.clone())), err);
                self.edge(cur, Operation::assume(cond.clone()), ok);
                ok
            }
        }
    }
}

/// Lowers a thread body. Conditions become pairs of assume edges; an
/// assertion branches into a fresh error location.
pub fn build_cfg(body: &[Stmt]) -> Cfg {
    let mut b = Builder { next: 0, edges: Vec::new(), errors: BTreeSet::new(), assert_lines: BTreeMap::new() };
    let mut entry = b.fresh();
    let exit = b.seq(body, entry);
    if b.edges.iter().any(|e| e.dst == entry) {
        let fresh = b.fresh();
        b.edges.insert(0, Edge { src: fresh, op: Operation::assume(Formula::True), dst: entry });
        entry = fresh;
    }

    // Renumber the surviving locations in order of first appearance.
    let mut map: BTreeMap<Loc, Loc> = BTreeMap::new();
    let number = |l: Loc, map: &mut BTreeMap<Loc, Loc>| {
        let n = map.len() as Loc;
        *map.entry(l).or_insert(n)
    };
    number(entry, &mut map);
    let mut order = vec![entry];
    let mut i = 0;
    while i < order.len() {
        let l = order[i];
        for e in b.edges.iter().filter(|e| e.src == l) {
            if !map.contains_key(&e.dst) {
                number(e.dst, &mut map);
                order.push(e.dst);
            }
        }
        i += 1;
    }
    if !map.contains_key(&exit) {
        number(exit, &mut map);
    }
    let edges: Vec<Edge> = b
        .edges
        .into_iter()
        .filter(|e| map.contains_key(&e.src))
        .map(|e| Edge { src: map[&e.src], op: e.op, dst: map[&e.dst] })
        .collect();
    let num_locs = map.len() as u32;
    let mut out = vec![Vec::new(); num_locs as usize];
    for (k, e) in edges.iter().enumerate() {
        out[e.src as usize].push(k);
    }
    Cfg {
        num_locs,
        entry: map[&entry],
        exit: map[&exit],
        errors: b.errors.iter().filter_map(|l| map.get(l).copied()).collect(),
        assert_lines: b.assert_lines.iter().filter_map(|(l, n)| map.get(l).map(|m| (*m, *n))).collect(),
        edges,
        out,
    }
}
