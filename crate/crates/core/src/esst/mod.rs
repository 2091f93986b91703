//! The ESST loop: an abstract reachability forest built with an explicit
//! scheduler and symbolic (predicate-abstracted) threads, refined from
//! spurious counterexamples by interpolation.

mod arf;
mod ledger;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

pub use arf::{Arf, ArfNode, Link, NodeId, NodeState};
pub use ledger::PrecisionLedger;

use crate::concrete::{replay, settle_exit, ConcreteError, PathStep, Trace};
use crate::frontend::{AccessSummary, BlockId, Loc, Program};
use crate::ir::Operation;
use crate::logic::{
    abstract_post, havoc_of, interpolate_sequence, path_formula, Atom, AtomOrConst, Formula, LinTerm, LogicError, Model,
    Precision, Rel, Solver, DEFAULT_MAX_PREDS,
};
use crate::por::{all_summaries, reduce, valid_dependence, DependenceRelation, PorMode, PorView, Reduction};
use crate::sched::{on_thread_exit, sched, sexec, SchedError, SchedulerState, Status};

/// Where refinement puts predicates that mention only one thread's locals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Placement {
    /// At the target location of the pivot edge.
    #[default]
    Location,
    /// At every location of the pivot thread.
    Thread,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EsstOptions {
    pub por: PorMode,
    pub max_preds: usize,
    pub max_nodes: usize,
    pub max_refinements: usize,
    pub placement: Placement,
    /// Blocks of two threads whose round-robin position is still open are
    /// treated as dependent.
    pub order_sensitive: bool,
    /// Try every enabled block as the persistent-set seed.
    pub all_seeds: bool,
    pub solver: Solver,
    /// Fallback values for `*` when replaying a counterexample.
    pub replay_values: Vec<i64>,
    /// Turn `t <= 0` and `-t <= 0` from one interpolant into `t = 0`.
    pub merge_bounds: bool,
}

impl Default for EsstOptions {
    fn default() -> Self {
        EsstOptions {
            por: PorMode::Both,
            max_preds: DEFAULT_MAX_PREDS,
            max_nodes: 2_000_000,
            max_refinements: 1_000,
            placement: Placement::Location,
            order_sensitive: false,
            all_seeds: false,
            solver: Solver::default(),
            replay_values: alloc::vec![-1, 0, 1, 2],
            merge_bounds: true,
        }
    }
}

impl EsstOptions {
    pub fn with_por(mut self, por: PorMode) -> Self {
        self.por = por;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// ARF nodes created, including ones later pruned by refinement.
    pub arf_nodes: usize,
    pub live_nodes: usize,
    pub covered: usize,
    pub refinements: usize,
    /// Refinements that had to promote predicates to the global precision.
    pub escalations: usize,
    pub predicates_total: usize,
    pub abstract_posts: usize,
    pub coverage_checks: usize,
    pub deadlocks: usize,
    /// Scheduling points where the persistent set was a strict subset.
    pub persistent_reductions: usize,
    /// Size of the persistent set at each reduced point.
    pub persistent_sizes: BTreeMap<usize, usize>,
    /// Scheduler choices dropped because their block was asleep.
    pub sleep_hits: usize,
    /// Withheld choices re-expanded to close a cycle.
    pub cycle_reexpansions: usize,
}

/// An abstract path from the root to an error node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub nodes: Vec<NodeId>,
    pub steps: Vec<PathStep>,
    /// The suppressed path: edge labels only, connectors dropped.
    pub ops: Vec<Operation>,
    /// Node reached by each operation.
    pub op_nodes: Vec<NodeId>,
    pub trace: Option<Trace>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Trace),
    /// Satisfiable, but no concrete replay was found.
    Unconfirmed(Model),
    Spurious,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Unsafe(Counterexample),
    Unknown(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Safe => "SAFE",
            Verdict::Unsafe(_) => "UNSAFE",
            Verdict::Unknown(_) => "UNKNOWN",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EsstResult {
    pub verdict: Verdict,
    pub stats: Stats,
    pub arf: Arf,
    pub ledger: PrecisionLedger,
    /// The most recent spurious counterexample, if any.
    pub last_spurious: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EsstError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error(transparent)]
    Concrete(#[from] ConcreteError),
    #[error("refinement found no new predicate")]
    Divergence,
    #[error("limit reached: {0}")]
    Limit(&'static str),
    #[error("interrupted")]
    Interrupted,
}

/// Runs the checker to completion.
pub fn run_esst(p: &Program, opts: &EsstOptions) -> EsstResult {
    Checker::new(p, opts.clone()).run(&mut || false)
}

/// Like [`run_esst`], polling `stop` between expansions.
pub fn run_esst_until(p: &Program, opts: &EsstOptions, stop: &mut dyn FnMut() -> bool) -> EsstResult {
    Checker::new(p, opts.clone()).run(stop)
}

/// The root: every thread at its entry, all regions `true`.
pub fn initial_node(p: &Program) -> ArfNode {
    let locs: Vec<Loc> = p.threads.iter().map(|t| t.cfg.entry).collect();
    let sched = settle_exit(p, &locs, SchedulerState::initial(p.num_threads())).expect("fresh scheduler state");
    ArfNode {
        regions: alloc::vec![Formula::True; locs.len()],
        locs,
        global: Formula::True,
        sched,
        sleep: BTreeSet::new(),
        parent: None,
        link: Link::Root,
        children: Vec::new(),
        state: NodeState::Open,
        withheld: Vec::new(),
        epoch: 0,
    }
}

type PostKey = (Formula, Operation, Precision);

/// Pairs of opposite bounds `t <= 0`, `-t <= 0` at the same cut become the
/// single predicate `t = 0`; other predicates are kept.
pub fn merge_bounds(preds: &[(usize, Formula)]) -> Vec<(usize, Formula)> {
    let opposite = |a: &Atom| Atom::build(a.term().neg(), Rel::Le);
    let mut out: Vec<(usize, Formula)> = Vec::new();
    for (k, f) in preds {
        let merged = match f {
            Formula::Atom(a) if a.rel() == Rel::Le => match opposite(a) {
                AtomOrConst::Atom(b) if preds.iter().any(|(j, g)| j == k && *g == Formula::Atom(b.clone())) => {
                    Formula::constraint(a.term().clone(), Rel::Eq)
                }
                _ => f.clone(),
            },
            _ => f.clone(),
        };
        if !out.iter().any(|(j, g)| j == k && *g == merged) {
            out.push((*k, merged));
        }
    }
    out
}

pub struct Checker<'p> {
    p: &'p Program,
    opts: EsstOptions,
    pub arf: Arf,
    pub ledger: PrecisionLedger,
    pub stats: Stats,
    dep: DependenceRelation,
    summaries: BTreeMap<BlockId, AccessSummary>,
    post_memo: BTreeMap<PostKey, Formula>,
    sat_memo: BTreeMap<Formula, bool>,
    entail_memo: BTreeMap<(Formula, Formula), bool>,
    worklist: Vec<NodeId>,
    last_spurious: Option<Counterexample>,
}

impl<'p> Checker<'p> {
    pub fn new(p: &'p Program, opts: EsstOptions) -> Self {
        Checker {
            p,
            ledger: PrecisionLedger::new(p.num_threads()),
            opts,
            arf: Arf::default(),
            stats: Stats::default(),
            dep: valid_dependence(p),
            summaries: all_summaries(p),
            post_memo: BTreeMap::new(),
            sat_memo: BTreeMap::new(),
            entail_memo: BTreeMap::new(),
            worklist: Vec::new(),
            last_spurious: None,
        }
    }

    pub fn dependence(&self) -> &DependenceRelation {
        &self.dep
    }

    fn post(&mut self, phi: &Formula, op: &Operation, prec: &Precision) -> Result<Formula, LogicError> {
        let key = (phi.clone(), op.clone(), prec.clone());
        if let Some(f) = self.post_memo.get(&key) {
            return Ok(f.clone());
        }
        self.stats.abstract_posts += 1;
        let f = abstract_post(&self.opts.solver, phi, op, prec, self.opts.max_preds)?;
        self.post_memo.insert(key, f.clone());
        Ok(f)
    }

    fn sat(&mut self, f: &Formula) -> Result<bool, LogicError> {
        if let Some(&b) = self.sat_memo.get(f) {
            return Ok(b);
        }
        let b = self.opts.solver.is_sat(f)?;
        self.sat_memo.insert(f.clone(), b);
        Ok(b)
    }

    fn entails(&mut self, a: &Formula, b: &Formula) -> Result<bool, LogicError> {
        if b.is_true() || a.is_false() || a == b {
            return Ok(true);
        }
        let key = (a.clone(), b.clone());
        if let Some(&r) = self.entail_memo.get(&key) {
            return Ok(r);
        }
        let r = self.opts.solver.entails(a, b)?;
        self.entail_memo.insert(key, r);
        Ok(r)
    }

    /// Rule E1: one child per outgoing CFG edge of the running thread.
    pub fn expand_e1(&mut self, id: NodeId) -> Result<Vec<ArfNode>, EsstError> {
        let n = self.arf.nodes[id].clone();
        let i = n.running().ok_or(SchedError::NotRunning(0))?;
        let cfg = &self.p.threads[i].cfg;
        let mut out = Vec::new();
        for &k in cfg.outgoing_indices(n.locs[i]) {
            let e = &cfg.edges[k];
            let (label, mut s) = match &e.op {
                Operation::Prim { target, prim, arg } => {
                    let (v, s) = sexec(&n.sched, *prim, arg.as_ref(), i, |name| self.p.thread_index(name))?;
                    let label = match target {
                        Some(x) => Operation::assign(x.clone(), LinTerm::int(v)),
                        None => Operation::assume(Formula::True),
                    };
                    (label, s)
                }
                op => (op.clone(), n.sched.clone()),
            };
            if e.dst == cfg.exit && s.status[i] == Status::Running {
                s = on_thread_exit(&s, i)?;
            }
            let mut locs = n.locs.clone();
            locs[i] = e.dst;
            let mut regions = n.regions.clone();
            let own = Formula::and([n.regions[i].clone(), n.global.clone()]);
            let prec = self.thread_precision(i, e.dst);
            regions[i] = self.post(&own, &label, &prec)?;
            if !regions[i].is_false() {
                if let Some(h) = havoc_of(&label, |v| self.p.is_global(v)) {
                    for j in (0..regions.len()).filter(|&j| j != i) {
                        let phi = Formula::and([n.regions[j].clone(), n.global.clone()]);
                        let prec = self.thread_precision(j, n.locs[j]);
                        regions[j] = self.post(&phi, &h, &prec)?;
                    }
                }
            }
            let pi = self.ledger.global.clone();
            let global = if regions[i].is_false() { Formula::False } else { self.post(&n.global, &label, &pi)? };
            out.push(ArfNode {
                locs,
                regions,
                global,
                sched: s,
                sleep: n.sleep.clone(),
                parent: Some(id),
                link: Link::Edge { thread: i, edge: k, label },
                children: Vec::new(),
                state: NodeState::Open,
                withheld: Vec::new(),
                epoch: self.ledger.version(),
            });
        }
        Ok(out)
    }

    fn connector(&self, id: NodeId, thread: usize, s: SchedulerState, sleep: BTreeSet<BlockId>) -> Result<ArfNode, EsstError> {
        let n = &self.arf.nodes[id];
        Ok(ArfNode {
            locs: n.locs.clone(),
            regions: n.regions.clone(),
            global: n.global.clone(),
            sched: settle_exit(self.p, &n.locs, s)?,
            sleep,
            parent: Some(id),
            link: Link::Connector { thread },
            children: Vec::new(),
            state: NodeState::Open,
            withheld: Vec::new(),
            epoch: n.epoch,
        })
    }

    /// Rule E2 under the configured reduction: one new ART root per explored
    /// scheduler choice. End-of-instant steps are never reduced.
    pub fn expand_e2(&mut self, id: NodeId) -> Result<Vec<ArfNode>, EsstError> {
        let n = &self.arf.nodes[id];
        let outcome = sched(&n.sched)?;
        if outcome.choices.is_empty() {
            if n.sched.is_deadlocked() {
                self.stats.deadlocks += 1;
            }
            return Ok(Vec::new());
        }
        let mode = if outcome.end_of_instant { PorMode::None } else { self.opts.por };
        let red: Reduction = {
            let mut view = PorView::for_program(self.p, &self.dep, &self.summaries, &n.locs, &n.sched);
            view.order_sensitive = self.opts.order_sensitive;
            reduce(&view, mode, &outcome.choices, &n.sleep, self.opts.all_seeds)
        };
        if !red.withheld.is_empty() {
            self.stats.persistent_reductions += 1;
            *self.stats.persistent_sizes.entry(outcome.choices.len() - red.withheld.len()).or_insert(0) += 1;
        }
        self.stats.sleep_hits += red.slept;
        self.arf.nodes[id].withheld = red.withheld;
        red.explore.into_iter().map(|(ch, z)| self.connector(id, ch.thread, ch.state, z)).collect()
    }

    fn add_child(&mut self, parent: NodeId, node: ArfNode) -> NodeId {
        let id = self.arf.nodes.len();
        self.arf.nodes.push(node);
        self.arf.nodes[parent].children.push(id);
        self.stats.arf_nodes += 1;
        id
    }

    fn same_key(&self, a: NodeId, b: NodeId) -> bool {
        let (x, y) = (&self.arf.nodes[a], &self.arf.nodes[b]);
        x.locs == y.locs && x.sched == y.sched
    }

    /// Whether node `by` covers node `id`: same locations, same scheduler
    /// state, and every region of `id` entails the matching one of `by`.
    pub fn covers(&mut self, by: NodeId, id: NodeId) -> Result<bool, LogicError> {
        if by == id || !self.same_key(by, id) {
            return Ok(false);
        }
        self.stats.coverage_checks += 1;
        let (a, b) = (self.arf.nodes[id].clone(), self.arf.nodes[by].clone());
        if !self.entails(&a.global, &b.global)? {
            return Ok(false);
        }
        for (x, y) in a.regions.iter().zip(&b.regions) {
            if !self.entails(x, y)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn find_cover(&mut self, id: NodeId) -> Result<Option<NodeId>, LogicError> {
        let n = &self.arf.nodes[id];
        let Some(cands) = self.arf.index.get(&(n.locs.clone(), n.sched.clone())).cloned() else {
            return Ok(None);
        };
        for m in cands {
            if self.covers(m, id)? {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }

    fn mark_covered(&mut self, id: NodeId, by: NodeId) {
        self.arf.nodes[id].state = NodeState::Covered(by);
        self.arf.covers.entry(by).or_default().push(id);
        self.stats.covered += 1;
    }

    fn mark_expanded(&mut self, id: NodeId) {
        let n = &mut self.arf.nodes[id];
        n.state = NodeState::Expanded;
        let key = (n.locs.clone(), n.sched.clone());
        self.arf.index.entry(key).or_default().push(id);
    }

    /// The path from the root to `id` as operations and replay steps.
    pub fn counterexample(&self, id: NodeId) -> Counterexample {
        let nodes = self.arf.path_to(id);
        let mut steps = Vec::new();
        let mut ops = Vec::new();
        let mut op_nodes = Vec::new();
        for &n in &nodes[1..] {
            match &self.arf.nodes[n].link {
                Link::Edge { thread, edge, label } => {
                    steps.push(PathStep::Edge { thread: *thread, edge: *edge });
                    ops.push(label.clone());
                    op_nodes.push(n);
                }
                Link::Connector { thread } => steps.push(PathStep::Schedule { thread: *thread }),
                Link::Root => {}
            }
        }
        Counterexample { nodes, steps, ops, op_nodes, trace: None }
    }

    /// Feasibility of the suppressed path, confirmed by concrete replay.
    pub fn check_counterexample(&self, cex: &Counterexample) -> Result<Feasibility, EsstError> {
        let pf = path_formula(&cex.ops);
        let Some(model) = self.opts.solver.model(&pf.formula())? else { return Ok(Feasibility::Spurious) };
        match replay(self.p, &cex.steps, &model, &self.opts.replay_values)? {
            Some(t) => Ok(Feasibility::Feasible(t)),
            None => Ok(Feasibility::Unconfirmed(model)),
        }
    }

    /// Precision for a thread region at `l`. Predicates of the global
    /// precision are left out: the global region already tracks them.
    fn thread_precision(&self, t: usize, l: Loc) -> Precision {
        self.ledger.location(t, l).difference(&self.ledger.global)
    }

    fn place(&mut self, t: usize, l: Loc, pred: Formula) -> bool {
        if self.ledger.global.contains(&pred) {
            return false;
        }
        let p = self.p;
        let thread_local = pred.vars().iter().all(|v| p.is_global(v) || p.owner(v) == Some(t));
        if !thread_local {
            return self.ledger.add_global(pred);
        }
        match self.opts.placement {
            Placement::Location => self.ledger.add_location(t, l, pred),
            Placement::Thread => self.ledger.add_thread(t, pred),
        }
    }

    /// Predicates from the interpolants of a spurious path, each tagged with
    /// the index of the operation after which it holds.
    pub fn path_predicates(&self, cex: &Counterexample) -> Result<Vec<(usize, Formula)>, EsstError> {
        let pf = path_formula(&cex.ops);
        let itps = interpolate_sequence(&self.opts.solver, &pf.conjuncts)?;
        let mut out = Vec::new();
        for (k, psi) in itps.iter().enumerate() {
            for atom in psi.atoms() {
                if let AtomOrConst::Atom(a) = atom.rename(&mut |v| v.base()) {
                    let f = Formula::Atom(a);
                    if !out.iter().any(|(j, g)| *j == k && *g == f) {
                        out.push((k, f));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Places each predicate and returns the earliest operation index whose
    /// precision changed.
    fn place_all(&mut self, cex: &Counterexample, preds: &[(usize, Formula)], global: bool) -> Option<usize> {
        let mut earliest: Option<usize> = None;
        for (k, f) in preds {
            let added = if global {
                self.ledger.add_global(f.clone())
            } else {
                let Link::Edge { thread, edge, .. } = self.arf.nodes[cex.op_nodes[*k]].link.clone() else { continue };
                let dst = self.p.threads[thread].cfg.edges[edge].dst;
                self.place(thread, dst, f.clone())
            };
            if added {
                earliest = Some(earliest.map_or(*k, |e| e.min(*k)));
            }
        }
        earliest
    }

    /// Adds the predicates of a spurious counterexample and prunes the ARF
    /// below the parent of the earliest node whose precision changed.
    ///
    /// Stages, each tried only if the previous one changed nothing: merged
    /// predicates in place; recomputing stale regions on the path; raw
    /// interpolant atoms in place; merged, then raw, predicates in the
    /// global precision.
    pub fn refine(&mut self, cex: &Counterexample) -> Result<(), EsstError> {
        self.stats.refinements += 1;
        let raw = self.path_predicates(cex)?;
        let merged = if self.opts.merge_bounds { merge_bounds(&raw) } else { raw.clone() };
        let mut earliest = self.place_all(cex, &merged, false);
        if earliest.is_none() {
            // Nothing new, but the path may run through regions computed
            // before the current predicates existed: recompute from there.
            let v = self.ledger.version();
            earliest = cex.op_nodes.iter().position(|&n| self.arf.nodes[n].epoch < v);
        }
        if earliest.is_none() && merged != raw {
            earliest = self.place_all(cex, &raw, false);
        }
        if earliest.is_none() {
            // Known predicates did not rule the path out: the facts are lost
            // through other threads' havoc, so track them globally.
            earliest = self.place_all(cex, &merged, true);
            if earliest.is_none() && merged != raw {
                earliest = self.place_all(cex, &raw, true);
            }
            if earliest.is_some() {
                self.stats.escalations += 1;
            }
        }
        let k = earliest.ok_or(EsstError::Divergence)?;
        let pivot = cex.op_nodes[k];
        let parent = self.arf.nodes[pivot].parent.expect("pivot below the root");
        self.reopen(parent);
        self.stats.predicates_total = self.ledger.predicates_total();
        Ok(())
    }

    fn unindex(&mut self, id: NodeId) {
        let n = &self.arf.nodes[id];
        let key = (n.locs.clone(), n.sched.clone());
        if let Some(v) = self.arf.index.get_mut(&key) {
            v.retain(|&m| m != id);
        }
    }

    fn uncover_by(&mut self, id: NodeId) {
        for c in self.arf.covers.remove(&id).unwrap_or_default() {
            if self.arf.nodes[c].state == NodeState::Covered(id) {
                self.arf.nodes[c].state = NodeState::Open;
                self.worklist.push(c);
            }
        }
    }

    /// Drops everything below `id` and puts `id` back on the worklist.
    fn reopen(&mut self, id: NodeId) {
        for d in self.arf.descendants(id) {
            self.unindex(d);
            self.arf.nodes[d].state = NodeState::Pruned;
            self.arf.nodes[d].children.clear();
        }
        // Nodes covered by pruned nodes, or by the reopened node, are
        // reconsidered.
        let pruned: Vec<NodeId> = self.arf.covers.keys().copied().filter(|&c| self.arf.nodes[c].state == NodeState::Pruned).collect();
        for c in pruned {
            self.uncover_by(c);
        }
        self.uncover_by(id);
        self.unindex(id);
        let n = &mut self.arf.nodes[id];
        n.children.clear();
        n.withheld.clear();
        n.state = NodeState::Open;
        self.worklist.push(id);
    }

    /// The cycle condition for reduced expansions: if a non-running ancestor
    /// covers `id`, the closest non-running ancestor gets its withheld
    /// choices. Returns the covering ancestor.
    fn close_cycle(&mut self, id: NodeId) -> Result<Option<NodeId>, EsstError> {
        let mut ancestors = Vec::new();
        let mut cur = self.arf.nodes[id].parent;
        while let Some(a) = cur {
            if self.arf.nodes[a].running().is_none() {
                ancestors.push(a);
            }
            cur = self.arf.nodes[a].parent;
        }
        let Some(&pred) = ancestors.first() else { return Ok(None) };
        let mut coverer = None;
        for &a in &ancestors {
            if self.covers(a, id)? {
                coverer = Some(a);
                break;
            }
        }
        let Some(c) = coverer else { return Ok(None) };
        let withheld = core::mem::take(&mut self.arf.nodes[pred].withheld);
        if !withheld.is_empty() {
            self.stats.cycle_reexpansions += 1;
            let mut fresh = Vec::new();
            for ch in withheld {
                let node = self.connector(pred, ch.thread, ch.state, BTreeSet::new())?;
                fresh.push(node);
            }
            self.push_children(pred, fresh)?;
        }
        Ok(Some(c))
    }

    fn push_children(&mut self, parent: NodeId, children: Vec<ArfNode>) -> Result<(), EsstError> {
        let mut ids = Vec::with_capacity(children.len());
        for mut c in children {
            let feasible = !c.global.is_false() && !c.regions.iter().any(Formula::is_false) && self.sat(&c.conjunction())?;
            if !feasible {
                c.state = NodeState::Infeasible;
            }
            let cid = self.add_child(parent, c);
            if feasible {
                ids.push(cid);
            }
        }
        self.worklist.extend(ids.into_iter().rev());
        Ok(())
    }

    fn step(&mut self, id: NodeId) -> Result<Option<Verdict>, EsstError> {
        if self.arf.nodes[id].is_error(self.p) {
            let mut cex = self.counterexample(id);
            match self.check_counterexample(&cex)? {
                Feasibility::Feasible(t) => {
                    cex.trace = Some(t);
                    return Ok(Some(Verdict::Unsafe(cex)));
                }
                Feasibility::Unconfirmed(_) => {
                    return Ok(Some(Verdict::Unknown("feasible counterexample could not be replayed concretely".into())));
                }
                Feasibility::Spurious => {
                    if self.stats.refinements >= self.opts.max_refinements {
                        return Err(EsstError::Limit("refinements"));
                    }
                    let r = self.refine(&cex);
                    self.last_spurious = Some(cex);
                    r?;
                    return Ok(None);
                }
            }
        }
        let running = self.arf.nodes[id].running().is_some();
        if !running && self.opts.por.persistent() {
            if let Some(c) = self.close_cycle(id)? {
                self.mark_covered(id, c);
                return Ok(None);
            }
        }
        if let Some(c) = self.find_cover(id)? {
            self.mark_covered(id, c);
            return Ok(None);
        }
        let children = if running { self.expand_e1(id)? } else { self.expand_e2(id)? };
        self.mark_expanded(id);
        self.push_children(id, children)?;
        Ok(None)
    }

    pub fn run(mut self, stop: &mut dyn FnMut() -> bool) -> EsstResult {
        let root = initial_node(self.p);
        self.arf.nodes.push(root);
        self.stats.arf_nodes = 1;
        self.worklist.push(0);
        let verdict = loop {
            let Some(id) = self.worklist.pop() else { break Verdict::Safe };
            if self.arf.nodes[id].state != NodeState::Open {
                continue;
            }
            if stop() {
                break Verdict::Unknown(alloc::format!("{}", EsstError::Interrupted));
            }
            if self.stats.arf_nodes >= self.opts.max_nodes {
                break Verdict::Unknown(alloc::format!("{}", EsstError::Limit("ARF nodes")));
            }
            match self.step(id) {
                Ok(Some(v)) => break v,
                Ok(None) => {}
                Err(e) => break Verdict::Unknown(alloc::format!("{}", e)),
            }
        };
        self.stats.live_nodes = self.arf.live();
        self.stats.predicates_total = self.ledger.predicates_total();
        EsstResult { verdict, stats: self.stats, arf: self.arf, ledger: self.ledger, last_spurious: self.last_spurious }
    }
}
