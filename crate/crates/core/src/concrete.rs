//! Explicit-state reference semantics and a bounded reachability oracle.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_traits::ToPrimitive;

use crate::frontend::{Loc, Program};
use crate::ir::{Operation, Prim, Rhs};
use crate::logic::{rat, Formula, LinTerm, Model, Rational, Var};
use crate::sched::{on_thread_exit, sched, sexec, SchedError, SchedulerState, Status};

/// One global state of the program. Variables never assigned read as 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub locs: Vec<Loc>,
    pub vals: BTreeMap<Var, i64>,
    pub sched: SchedulerState,
}

impl Configuration {
    pub fn initial(p: &Program) -> Self {
        let mut vals = BTreeMap::new();
        for g in &p.globals {
            vals.insert(g.clone(), 0);
        }
        for t in &p.threads {
            for l in &t.locals {
                vals.insert(l.clone(), 0);
            }
        }
        let locs: Vec<Loc> = p.threads.iter().map(|t| t.cfg.entry).collect();
        let sched = settle_exit(p, &locs, SchedulerState::initial(p.num_threads())).expect("fresh state");
        Configuration { locs, vals, sched }
    }

    pub fn value(&self, v: &Var) -> i64 {
        self.vals.get(&v.base()).copied().unwrap_or(0)
    }

    pub fn is_error(&self, p: &Program) -> bool {
        self.locs.iter().zip(&p.threads).any(|(l, t)| t.cfg.is_error(*l))
    }

    fn lookup(&self) -> impl Fn(&Var) -> Option<Rational> + '_ {
        move |v: &Var| Some(rat(self.value(v)))
    }

    pub fn eval_term(&self, t: &LinTerm) -> i64 {
        let r = t.eval(&self.lookup());
        r.to_integer().to_i64().expect("integer overflow in concrete evaluation")
    }

    pub fn holds(&self, f: &Formula) -> bool {
        f.eval(&self.lookup())
    }
}

/// A right-hand side as evaluated by the interpreter.
#[derive(Clone, Copy, Debug)]
pub enum Expr<'a> {
    Term(&'a LinTerm),
    Prim(Prim, Option<&'a Arc<str>>),
}

/// Value of an expression for thread `caller`, with the scheduler state after
/// evaluation. Only primitive calls change the scheduler state.
pub fn eval_expr(p: &Program, c: &Configuration, e: Expr<'_>, caller: usize) -> Result<(i64, SchedulerState), ConcreteError> {
    match e {
        Expr::Term(t) => Ok((c.eval_term(t), c.sched.clone())),
        Expr::Prim(prim, arg) => Ok(sexec(&c.sched, prim, arg, caller, |name| p.thread_index(name))?),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepLabel {
    /// Thread `thread` took CFG edge `edge`.
    Thread { thread: usize, edge: usize, src: Loc, dst: Loc },
    /// The scheduler picked `thread` to run.
    Schedule { thread: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<(StepLabel, Configuration)>,
}

impl Trace {
    pub fn last(&self) -> &Configuration {
        self.steps.last().map(|(_, c)| c).unwrap_or(&self.initial)
    }

    /// Numbered human-readable rendering.
    pub fn render(&self, p: &Program) -> String {
        let mut s = String::new();
        for (k, (label, _)) in self.steps.iter().enumerate() {
            match label {
                StepLabel::Thread { thread, edge, src, dst } => {
                    let op = &p.threads[*thread].cfg.edges[*edge].op;
                    let _ = writeln!(
                        s,
                        "#{} [thread {}] l{} --{}--> l{}",
                        k + 1,
                        p.threads[*thread].name,
                        src,
                        op,
                        dst
                    );
                }
                StepLabel::Schedule { thread } => {
                    let _ = writeln!(s, "#{} [scheduler] -> running={}", k + 1, p.threads[*thread].name);
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConcreteError {
    #[error("state budget exhausted after {0} configurations")]
    Capacity(usize),
    #[error(transparent)]
    Sched(#[from] SchedError),
}

/// Applies the effect of CFG edge `edge` of the running thread `t`, with
/// `nondet` supplying the value of `*`. `None` if the edge is disabled.
pub fn apply_edge(
    p: &Program,
    c: &Configuration,
    t: usize,
    edge: usize,
    nondet: i64,
) -> Result<Option<Configuration>, ConcreteError> {
    let cfg = &p.threads[t].cfg;
    let e = &cfg.edges[edge];
    let mut n = c.clone();
    match &e.op {
        Operation::Assume(f) => {
            if !c.holds(f) {
                return Ok(None);
            }
        }
        Operation::Assign { target, rhs } => {
            let v = match rhs {
                Rhs::Term(term) => c.eval_term(term),
                Rhs::Nondet => nondet,
            };
            n.vals.insert(target.clone(), v);
        }
        Operation::Prim { target, prim, arg } => {
            let (v, s) = eval_expr(p, c, Expr::Prim(*prim, arg.as_ref()), t)?;
            n.sched = s;
            if let Some(x) = target {
                n.vals.insert(x.clone(), v);
            }
        }
    }
    n.locs[t] = e.dst;
    if e.dst == cfg.exit && n.sched.status[t] == Status::Running {
        n.sched = on_thread_exit(&n.sched, t)?;
    }
    Ok(Some(n))
}

/// A thread that is given the processor while sitting at its exit (an empty
/// body, or a blocking call as the last statement) terminates at once.
pub fn settle_exit(p: &Program, locs: &[Loc], s: SchedulerState) -> Result<SchedulerState, SchedError> {
    match s.running() {
        Some(t) if locs[t] == p.threads[t].cfg.exit => on_thread_exit(&s, t),
        _ => Ok(s),
    }
}

/// All successors of `c` in canonical order: edges in CFG order and `*`
/// values in `value_set` order, or scheduler choices in the order `sched`
/// returns them.
pub fn step(p: &Program, c: &Configuration, value_set: &[i64]) -> Result<Vec<(StepLabel, Configuration)>, ConcreteError> {
    let mut out = Vec::new();
    if c.is_error(p) {
        return Ok(out);
    }
    match c.sched.running() {
        Some(t) => {
            let cfg = &p.threads[t].cfg;
            for &k in cfg.outgoing_indices(c.locs[t]) {
                let e = &cfg.edges[k];
                let nondet = matches!(e.op, Operation::Assign { rhs: Rhs::Nondet, .. });
                let values: &[i64] = if nondet { value_set } else { &[0] };
                for &v in values {
                    if let Some(n) = apply_edge(p, c, t, k, v)? {
                        out.push((StepLabel::Thread { thread: t, edge: k, src: e.src, dst: e.dst }, n));
                    }
                }
            }
        }
        None => {
            for ch in sched(&c.sched)?.choices {
                let mut n = c.clone();
                n.sched = settle_exit(p, &n.locs, ch.state)?;
                out.push((StepLabel::Schedule { thread: ch.thread }, n));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachResult {
    Unsafe(Trace),
    NoErrorFound { states: usize, deadlocks: usize, depth_reached: bool },
}

impl ReachResult {
    pub fn is_unsafe(&self) -> bool {
        matches!(self, ReachResult::Unsafe(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub value_set: Vec<i64>,
    pub depth: usize,
    pub max_states: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { value_set: alloc::vec![-1, 0, 1, 2], depth: 500, max_states: 2_000_000 }
    }
}

/// Breadth-first search for an error configuration within `depth` steps.
/// Finding nothing is not a proof of safety.
pub fn bounded_reach(p: &Program, cfg: &OracleConfig) -> Result<ReachResult, ConcreteError> {
    let init = Configuration::initial(p);
    let mut index: BTreeMap<Configuration, usize> = BTreeMap::new();
    let mut nodes: Vec<(Configuration, Option<(usize, StepLabel)>)> = Vec::new();
    index.insert(init.clone(), 0);
    nodes.push((init, None));
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    queue.push_back((0, 0));
    let mut deadlocks = 0;
    let mut depth_reached = false;
    while let Some((id, d)) = queue.pop_front() {
        let c = nodes[id].0.clone();
        if c.is_error(p) {
            return Ok(ReachResult::Unsafe(rebuild(&nodes, id)));
        }
        if d >= cfg.depth {
            depth_reached = true;
            continue;
        }
        let succ = step(p, &c, &cfg.value_set)?;
        if succ.is_empty() && c.sched.is_deadlocked() {
            deadlocks += 1;
        }
        for (label, n) in succ {
            if index.contains_key(&n) {
                continue;
            }
            if nodes.len() >= cfg.max_states {
                return Err(ConcreteError::Capacity(cfg.max_states));
            }
            let nid = nodes.len();
            index.insert(n.clone(), nid);
            let err = n.is_error(p);
            nodes.push((n, Some((id, label))));
            if err {
                return Ok(ReachResult::Unsafe(rebuild(&nodes, nid)));
            }
            queue.push_back((nid, d + 1));
        }
    }
    Ok(ReachResult::NoErrorFound { states: nodes.len(), deadlocks, depth_reached })
}

fn rebuild(nodes: &[(Configuration, Option<(usize, StepLabel)>)], mut id: usize) -> Trace {
    let mut steps = Vec::new();
    while let Some((parent, label)) = &nodes[id].1 {
        steps.push((label.clone(), nodes[id].0.clone()));
        id = *parent;
    }
    steps.reverse();
    Trace { initial: nodes[0].0.clone(), steps }
}

/// A step of an abstract path to be replayed concretely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathStep {
    Edge { thread: usize, edge: usize },
    Schedule { thread: usize },
}

/// Replays a fixed path. Values of `*` are taken from `model` (keyed by the
/// SSA symbol the path formula gives the assigned variable) when integral,
/// then from `value_set`; the first full replay reaching an error wins.
pub fn replay(
    p: &Program,
    path: &[PathStep],
    model: &Model,
    value_set: &[i64],
) -> Result<Option<Trace>, ConcreteError> {
    let init = Configuration::initial(p);
    let mut steps = Vec::with_capacity(path.len());
    let index: BTreeMap<Arc<str>, u32> = BTreeMap::new();
    let mut budget = 100_000usize;
    if replay_from(p, path, model, value_set, &init, index, &mut steps, &mut budget)? {
        Ok(Some(Trace { initial: init, steps }))
    } else {
        Ok(None)
    }
}

#[allow(clippy::too_many_arguments)]
fn replay_from(
    p: &Program,
    path: &[PathStep],
    model: &Model,
    value_set: &[i64],
    c: &Configuration,
    mut index: BTreeMap<Arc<str>, u32>,
    steps: &mut Vec<(StepLabel, Configuration)>,
    budget: &mut usize,
) -> Result<bool, ConcreteError> {
    if *budget == 0 {
        return Ok(false);
    }
    *budget -= 1;
    let Some((first, rest)) = path.split_first() else { return Ok(c.is_error(p)) };
    match first {
        PathStep::Schedule { thread } => {
            if c.sched.running().is_some() {
                return Ok(false);
            }
            let Some(ch) = sched(&c.sched)?.choices.into_iter().find(|ch| ch.thread == *thread) else {
                return Ok(false);
            };
            let mut n = c.clone();
            n.sched = settle_exit(p, &n.locs, ch.state)?;
            steps.push((StepLabel::Schedule { thread: *thread }, n.clone()));
            if replay_from(p, rest, model, value_set, &n, index, steps, budget)? {
                return Ok(true);
            }
            steps.pop();
            Ok(false)
        }
        PathStep::Edge { thread, edge } => {
            if c.sched.running() != Some(*thread) {
                return Ok(false);
            }
            let e = &p.threads[*thread].cfg.edges[*edge];
            if e.src != c.locs[*thread] {
                return Ok(false);
            }
            let mut candidates: Vec<i64> = Vec::new();
            if let Some(x) = e.op.written() {
                let k = index.entry(x.name.clone()).or_insert(0);
                *k += 1;
                if matches!(e.op, Operation::Assign { rhs: Rhs::Nondet, .. }) {
                    if let Some(v) = model.get(&Var::ssa(&x.name, *k)) {
                        if v.is_integer() {
                            if let Some(i) = v.to_integer().to_i64() {
                                candidates.push(i);
                            }
                        }
                    }
                    for &v in value_set {
                        if !candidates.contains(&v) {
                            candidates.push(v);
                        }
                    }
                }
            }
            if candidates.is_empty() {
                candidates.push(0);
            }
            for v in candidates {
                if let Some(n) = apply_edge(p, c, *thread, *edge, v)? {
                    steps.push((StepLabel::Thread { thread: *thread, edge: *edge, src: e.src, dst: e.dst }, n.clone()));
                    if replay_from(p, rest, model, value_set, &n, index.clone(), steps, budget)? {
                        return Ok(true);
                    }
                    steps.pop();
                }
            }
            Ok(false)
        }
    }
}

/// Checks that every step of `t` is a legal transition of the semantics
/// (any integer is a legal value of `*`).
pub fn validate_trace(p: &Program, t: &Trace) -> Result<bool, ConcreteError> {
    if t.initial != Configuration::initial(p) {
        return Ok(false);
    }
    let mut cur = &t.initial;
    for (label, next) in &t.steps {
        let ok = match label {
            StepLabel::Schedule { thread } => {
                cur.sched.running().is_none()
                    && sched(&cur.sched)?
                        .choices
                        .into_iter()
                        .any(|ch| {
                            ch.thread == *thread
                                && settle_exit(p, &cur.locs, ch.state).ok().as_ref() == Some(&next.sched)
                                && next.locs == cur.locs
                                && next.vals == cur.vals
                        })
            }
            StepLabel::Thread { thread, edge, .. } => {
                let e = &p.threads[*thread].cfg.edges[*edge];
                let nondet = match &e.op {
                    Operation::Assign { target, rhs: Rhs::Nondet } => next.value(target),
                    _ => 0,
                };
                cur.sched.running() == Some(*thread)
                    && e.src == cur.locs[*thread]
                    && apply_edge(p, cur, *thread, *edge, nondet)?.as_ref() == Some(next)
            }
        };
        if !ok {
            return Ok(false);
        }
        cur = next;
    }
    Ok(true)
}
