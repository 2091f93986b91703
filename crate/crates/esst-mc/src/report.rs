//! Run reports: a human summary on stdout and key/value records on disk.

use std::fmt::Write as _;

use esst_core::concrete::{ReachResult, Trace};
use esst_core::esst::{EsstResult, Placement, Stats, Verdict};
use esst_core::frontend::Program;
use esst_core::por::PorMode;

use crate::kv::Record;
use crate::trace::step_records;

pub const TOOL: &str = "esst-mc";

/// Outcome of the optional bounded oracle run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Unsafe(usize),
    NoErrorFound { states: usize, depth_reached: bool },
    Failed(String),
}

impl OracleOutcome {
    pub fn from_result(r: &Result<ReachResult, esst_core::concrete::ConcreteError>) -> Self {
        match r {
            Ok(ReachResult::Unsafe(t)) => OracleOutcome::Unsafe(t.steps.len()),
            Ok(ReachResult::NoErrorFound { states, depth_reached, .. }) => {
                OracleOutcome::NoErrorFound { states: *states, depth_reached: *depth_reached }
            }
            Err(e) => OracleOutcome::Failed(e.to_string()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OracleOutcome::Unsafe(_) => "UNSAFE",
            OracleOutcome::NoErrorFound { .. } => "NO_ERROR_FOUND",
            OracleOutcome::Failed(_) => "ERROR",
        }
    }

    /// Whether the oracle contradicts a checker verdict.
    pub fn disagrees_with(&self, verdict: &str) -> bool {
        matches!((self, verdict), (OracleOutcome::Unsafe(_), "SAFE") | (OracleOutcome::NoErrorFound { .. }, "UNSAFE"))
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub program: String,
    pub mode: PorMode,
    pub max_preds: usize,
    pub placement: Placement,
    pub verdict: &'static str,
    /// Why the run ended UNKNOWN.
    pub reason: Option<String>,
    pub stats: Stats,
    pub wall_ms: u128,
    pub trace: Option<Trace>,
    pub oracle: Option<OracleOutcome>,
    pub oracle_config: Option<String>,
}

impl Report {
    pub fn new(program: &str, mode: PorMode, max_preds: usize, placement: Placement, r: &EsstResult, wall_ms: u128) -> Self {
        let (reason, trace) = match &r.verdict {
            Verdict::Safe => (None, None),
            Verdict::Unsafe(cex) => (None, cex.trace.clone()),
            Verdict::Unknown(why) => (Some(why.clone()), None),
        };
        Report {
            program: program.to_string(),
            mode,
            max_preds,
            placement,
            verdict: r.verdict.name(),
            reason,
            stats: r.stats.clone(),
            wall_ms,
            trace,
            oracle: None,
            oracle_config: None,
        }
    }

    /// The `record=run` summary line.
    pub fn run_record(&self) -> Record {
        let s = &self.stats;
        let mut r = Record::new();
        r.push("record", "run")
            .push("tool", TOOL)
            .push("version", env!("CARGO_PKG_VERSION"))
            .push("program", &self.program)
            .push("mode", self.mode.name())
            .push("max_preds", self.max_preds)
            .push("placement", placement_name(self.placement))
            .push("verdict", self.verdict)
            .push("arf_nodes", s.arf_nodes)
            .push("live_nodes", s.live_nodes)
            .push("covered", s.covered)
            .push("refinements", s.refinements)
            .push("escalations", s.escalations)
            .push("predicates_total", s.predicates_total)
            .push("abstract_posts", s.abstract_posts)
            .push("deadlocks", s.deadlocks)
            .push("persistent_reductions", s.persistent_reductions)
            .push("persistent_sizes", histogram(s))
            .push("sleep_hits", s.sleep_hits)
            .push("cycle_reexpansions", s.cycle_reexpansions)
            .push("wall_ms", self.wall_ms);
        if let Some(why) = &self.reason {
            r.push("reason", why);
        }
        if let Some(t) = &self.trace {
            r.push("trace_steps", t.steps.len());
        }
        match (&self.oracle, &self.oracle_config) {
            (Some(o), Some(cfg)) => {
                r.push("oracle", cfg).push("oracle_verdict", o.name());
            }
            _ => {
                r.push("oracle", "off");
            }
        }
        r
    }

    /// The run record followed by the step records of the trace, if any.
    pub fn records(&self, p: &Program) -> Vec<Record> {
        let mut out = vec![self.run_record()];
        if let Some(t) = &self.trace {
            out.extend(step_records(p, t));
        }
        out
    }

    pub fn render_records(&self, p: &Program) -> String {
        let mut s = String::new();
        for r in self.records(p) {
            s.push_str(&r.render());
            s.push('\n');
        }
        s
    }

    pub fn render_human(&self, p: &Program) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "program:     {}", self.program);
        let _ = writeln!(out, "mode:        {}", self.mode.name());
        let _ = write!(out, "verdict:     {}", self.verdict);
        match &self.reason {
            Some(why) => {
                let _ = writeln!(out, " ({})", why);
            }
            None => out.push('\n'),
        }
        let _ = writeln!(out, "arf nodes:   {} ({} live, {} covered)", s.arf_nodes, s.live_nodes, s.covered);
        let _ = writeln!(out, "refinements: {} ({} escalated)", s.refinements, s.escalations);
        let _ = writeln!(out, "predicates:  {}", s.predicates_total);
        let _ = writeln!(
            out,
            "por:         {} persistent reductions, {} sleep hits, {} cycle re-expansions",
            s.persistent_reductions, s.sleep_hits, s.cycle_reexpansions
        );
        let _ = writeln!(out, "time:        {} ms", self.wall_ms);
        if let Some(o) = &self.oracle {
            let detail = match o {
                OracleOutcome::Unsafe(n) => format!("error reached in {} steps", n),
                OracleOutcome::NoErrorFound { states, depth_reached } => {
                    format!("{} states{}", states, if *depth_reached { ", depth bound hit" } else { "" })
                }
                OracleOutcome::Failed(e) => e.clone(),
            };
            let _ = writeln!(out, "oracle:      {} ({})", o.name(), detail);
            if o.disagrees_with(self.verdict) {
                let _ = writeln!(out, "warning:     oracle disagrees with the checker verdict");
            }
        }
        if let Some(t) = &self.trace {
            let _ = writeln!(out, "counterexample:");
            out.push_str(&t.render(p));
        }
        out
    }
}

pub fn placement_name(p: Placement) -> &'static str {
    match p {
        Placement::Location => "location",
        Placement::Thread => "thread",
    }
}

/// `size:count` pairs, e.g. `1:40,2:3`; `-` when empty.
fn histogram(s: &Stats) -> String {
    if s.persistent_sizes.is_empty() {
        return "-".to_string();
    }
    s.persistent_sizes.iter().map(|(k, v)| format!("{}:{}", k, v)).collect::<Vec<_>>().join(",")
}
