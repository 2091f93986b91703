//! Trace rendering: numbered text lines, or structured step records that can
//! be parsed back and replayed against the interpreter.

use esst_core::concrete::{apply_edge, settle_exit, validate_trace, Configuration, ConcreteError, StepLabel, Trace};
use esst_core::frontend::Program;
use esst_core::ir::{Operation, Rhs};
use esst_core::sched::sched;
use thiserror::Error;

use crate::kv::{KvError, Record};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceFormat {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("step record {line}: {source}")]
    Record { line: usize, source: KvError },
    #[error("step {0}: unknown thread `{1}`")]
    UnknownThread(usize, String),
    #[error("step {0}: unknown step kind `{1}`")]
    UnknownKind(usize, String),
    #[error("step {0}: transition not enabled")]
    Illegal(usize),
    #[error("steps out of order at step {0}")]
    Order(usize),
    #[error("trace does not satisfy the semantics")]
    Invalid,
    #[error(transparent)]
    Concrete(#[from] ConcreteError),
}

pub fn emit_trace(p: &Program, t: &Trace, format: TraceFormat) -> String {
    match format {
        TraceFormat::Text => t.render(p),
        TraceFormat::Structured => {
            let mut s = String::new();
            for r in step_records(p, t) {
                s.push_str(&r.render());
                s.push('\n');
            }
            s
        }
    }
}

/// One `record=step` per trace step. `sched` is present only when the step
/// changed the scheduler state; `value` only on `x := *` steps.
pub fn step_records(p: &Program, t: &Trace) -> Vec<Record> {
    let mut out = Vec::with_capacity(t.steps.len());
    let mut prev = &t.initial;
    for (k, (label, next)) in t.steps.iter().enumerate() {
        let mut r = Record::new();
        r.push("record", "step").push("step", k + 1);
        match label {
            StepLabel::Thread { thread, edge, src, dst } => {
                let op = &p.threads[*thread].cfg.edges[*edge].op;
                r.push("kind", "thread")
                    .push("thread", &p.threads[*thread].name)
                    .push("edge", edge)
                    .push("src", src)
                    .push("dst", dst)
                    .push("op", op);
                if let Operation::Assign { target, rhs: Rhs::Nondet } = op {
                    r.push("value", next.value(target));
                }
            }
            StepLabel::Schedule { thread } => {
                r.push("kind", "schedule").push("thread", &p.threads[*thread].name);
            }
        }
        if next.sched != prev.sched {
            r.push("sched", next.sched.summary());
        }
        out.push(r);
        prev = next;
    }
    out
}

/// Rebuilds a trace from its `record=step` lines (other records are
/// skipped) and checks it against the semantics.
pub fn parse_structured(p: &Program, text: &str) -> Result<Trace, TraceError> {
    let mut cur = Configuration::initial(p);
    let initial = cur.clone();
    let mut steps = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r = Record::parse(line).map_err(|source| TraceError::Record { line: n + 1, source })?;
        if r.get("record") != Some("step") {
            continue;
        }
        let rec = |source| TraceError::Record { line: n + 1, source };
        let k: usize = r.parse_field("step").map_err(rec)?;
        if k != steps.len() + 1 {
            return Err(TraceError::Order(k));
        }
        let name = r.require("thread").map_err(rec)?;
        let thread = p.thread_index(name).ok_or_else(|| TraceError::UnknownThread(k, name.to_string()))?;
        let (label, next) = match r.require("kind").map_err(rec)? {
            "thread" => {
                let edge: usize = r.parse_field("edge").map_err(rec)?;
                let value: i64 = if r.get("value").is_some() { r.parse_field("value").map_err(rec)? } else { 0 };
                let cfg = &p.threads[thread].cfg;
                let e = cfg.edges.get(edge).ok_or(TraceError::Illegal(k))?;
                if cur.sched.running() != Some(thread) || cur.locs[thread] != e.src {
                    return Err(TraceError::Illegal(k));
                }
                let next = apply_edge(p, &cur, thread, edge, value)?.ok_or(TraceError::Illegal(k))?;
                (StepLabel::Thread { thread, edge, src: e.src, dst: e.dst }, next)
            }
            "schedule" => {
                if cur.sched.running().is_some() {
                    return Err(TraceError::Illegal(k));
                }
                let choice = sched(&cur.sched)
                    .map_err(ConcreteError::from)?
                    .choices
                    .into_iter()
                    .find(|c| c.thread == thread)
                    .ok_or(TraceError::Illegal(k))?;
                let mut next = cur.clone();
                next.sched = settle_exit(p, &next.locs, choice.state).map_err(ConcreteError::from)?;
                (StepLabel::Schedule { thread }, next)
            }
            other => return Err(TraceError::UnknownKind(k, other.to_string())),
        };
        cur = next.clone();
        steps.push((label, next));
    }
    let t = Trace { initial, steps };
    if !validate_trace(p, &t)? {
        return Err(TraceError::Invalid);
    }
    Ok(t)
}
