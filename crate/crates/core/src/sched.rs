//! FairThreads cooperative scheduler: primitive execution and the
//! scheduling function.
//!
//! Threads run in a round-robin order that is fixed the first time each
//! thread is scheduled. An instant ends when nothing is runnable; then every
//! cooperated thread wakes up and event notifications are cleared.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::ir::Prim;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Running,
    Runnable,
    Waiting(Arc<str>),
    Cooperated,
    /// Waiting for the given thread index to terminate.
    Joining(usize),
    Terminated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => write!(f, "run"),
            Status::Runnable => write!(f, "rdy"),
            Status::Waiting(e) => write!(f, "wait({})", e),
            Status::Cooperated => write!(f, "coop"),
            Status::Joining(t) => write!(f, "join({})", t),
            Status::Terminated => write!(f, "done"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchedulerState {
    pub status: Vec<Status>,
    pub notified: BTreeSet<Arc<str>>,
    pub committed_order: Vec<usize>,
    pub ran_this_round: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedChoice {
    pub thread: usize,
    pub state: SchedulerState,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedOutcome {
    pub choices: Vec<SchedChoice>,
    /// The choices were computed after closing the instant.
    pub end_of_instant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchedError {
    #[error("thread {0} is not running")]
    NotRunning(usize),
    #[error("scheduler invoked while thread {0} is running")]
    AlreadyRunning(usize),
    #[error("thread {0} already terminated")]
    AlreadyTerminated(usize),
    #[error("primitive `{0}` requires an argument")]
    MissingArgument(&'static str),
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
}

impl SchedulerState {
    /// `main` (thread 0) running, everything else runnable and uncommitted.
    pub fn initial(num_threads: usize) -> Self {
        let mut status = alloc::vec![Status::Runnable; num_threads];
        if let Some(s) = status.first_mut() {
            *s = Status::Running;
        }
        SchedulerState {
            status,
            notified: BTreeSet::new(),
            committed_order: alloc::vec![0],
            ran_this_round: [0].into_iter().collect(),
        }
    }

    pub fn running(&self) -> Option<usize> {
        self.status.iter().position(|s| *s == Status::Running)
    }

    pub fn is_committed(&self, t: usize) -> bool {
        self.committed_order.contains(&t)
    }

    /// Threads that would be offered to run right now, without closing a
    /// round or an instant.
    pub fn candidates(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(&t) = self
            .committed_order
            .iter()
            .find(|&&t| self.status[t] == Status::Runnable && !self.ran_this_round.contains(&t))
        {
            out.push(t);
        }
        for (t, s) in self.status.iter().enumerate() {
            if *s == Status::Runnable && !self.is_committed(t) {
                out.push(t);
            }
        }
        out
    }

    /// No thread can ever run again, yet some did not terminate.
    pub fn is_deadlocked(&self) -> bool {
        self.status.iter().all(|s| matches!(s, Status::Waiting(_) | Status::Joining(_) | Status::Terminated))
            && self.status.iter().any(|s| *s != Status::Terminated)
    }

    /// Compact rendering, e.g. `[run rdy wait(e)] n={e} o=[0,2]`.
    pub fn summary(&self) -> String {
        let mut s = String::from("[");
        for (i, st) in self.status.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&alloc::format!("{}", st));
        }
        s.push(']');
        if !self.notified.is_empty() {
            let n: Vec<&str> = self.notified.iter().map(|e| &**e).collect();
            s.push_str(&alloc::format!(" n={{{}}}", n.join(",")));
        }
        let o: Vec<String> = self.committed_order.iter().map(|t| alloc::format!("{}", t)).collect();
        s.push_str(&alloc::format!(" o=[{}]", o.join(",")));
        s
    }
}

pub fn initial_state(num_threads: usize) -> SchedulerState {
    SchedulerState::initial(num_threads)
}

/// Executes a primitive call of the running thread `caller`. `arg_thread`
/// resolves a thread name for `join`. Every primitive returns 0.
pub fn sexec(
    s: &SchedulerState,
    prim: Prim,
    arg: Option<&Arc<str>>,
    caller: usize,
    arg_thread: impl Fn(&str) -> Option<usize>,
) -> Result<(i64, SchedulerState), SchedError> {
    if s.status.get(caller) != Some(&Status::Running) {
        return Err(SchedError::NotRunning(caller));
    }
    let mut n = s.clone();
    match prim {
        Prim::Await => {
            let e = arg.ok_or(SchedError::MissingArgument("await"))?;
            if !n.notified.contains(e) {
                n.status[caller] = Status::Waiting(e.clone());
            }
        }
        Prim::Generate => {
            let e = arg.ok_or(SchedError::MissingArgument("generate"))?;
            n.notified.insert(e.clone());
            for st in n.status.iter_mut() {
                if matches!(st, Status::Waiting(w) if w == e) {
                    *st = Status::Runnable;
                }
            }
        }
        Prim::Cooperate => n.status[caller] = Status::Cooperated,
        Prim::Join => {
            let name = arg.ok_or(SchedError::MissingArgument("join"))?;
            let t = arg_thread(name).ok_or_else(|| SchedError::UnknownThread(String::from(&**name)))?;
            if n.status[t] != Status::Terminated {
                n.status[caller] = Status::Joining(t);
            }
        }
    }
    Ok((0, n))
}

/// Marks `t` terminated and releases its joiners.
pub fn on_thread_exit(s: &SchedulerState, t: usize) -> Result<SchedulerState, SchedError> {
    if s.status[t] == Status::Terminated {
        return Err(SchedError::AlreadyTerminated(t));
    }
    let mut n = s.clone();
    n.status[t] = Status::Terminated;
    for st in n.status.iter_mut() {
        if *st == Status::Joining(t) {
            *st = Status::Runnable;
        }
    }
    Ok(n)
}

fn end_of_instant(s: &mut SchedulerState) {
    for st in s.status.iter_mut() {
        if *st == Status::Cooperated {
            *st = Status::Runnable;
        }
    }
    s.notified.clear();
    s.ran_this_round.clear();
}

/// All ways to pick the next running thread.
pub fn sched(s: &SchedulerState) -> Result<SchedOutcome, SchedError> {
    if let Some(t) = s.running() {
        return Err(SchedError::AlreadyRunning(t));
    }
    let mut base = s.clone();
    let mut eoi = false;
    let mut cands = base.candidates();
    if cands.is_empty() && base.status.contains(&Status::Runnable) {
        // Every committed runnable thread already ran: next round.
        base.ran_this_round.clear();
        cands = base.candidates();
    }
    if cands.is_empty() && base.status.contains(&Status::Cooperated) {
        end_of_instant(&mut base);
        eoi = true;
        cands = base.candidates();
    }
    let choices = cands
        .into_iter()
        .map(|t| {
            let mut n = base.clone();
            n.status[t] = Status::Running;
            n.ran_this_round.insert(t);
            if !n.is_committed(t) {
                n.committed_order.push(t);
            }
            SchedChoice { thread: t, state: n }
        })
        .collect();
    Ok(SchedOutcome { choices, end_of_instant: eoi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> Arc<str> {
        Arc::from(s)
    }

    fn none(_: &str) -> Option<usize> {
        None
    }

    #[test]
    fn lazy_order_offers_every_uncommitted_thread() {
        let mut s = SchedulerState::initial(3);
        s.status[0] = Status::Cooperated;
        let out = sched(&s).unwrap();
        assert_eq!(out.choices.iter().map(|c| c.thread).collect::<Vec<_>>(), alloc::vec![1, 2]);
        assert!(!out.end_of_instant);
        assert_eq!(out.choices[1].state.committed_order, alloc::vec![0, 2]);
    }

    #[test]
    fn committed_round_robin_is_deterministic() {
        let mut s = SchedulerState::initial(3);
        s.committed_order = alloc::vec![0, 2, 1];
        s.status = alloc::vec![Status::Cooperated, Status::Runnable, Status::Runnable];
        let out = sched(&s).unwrap();
        assert_eq!(out.choices.len(), 1);
        assert_eq!(out.choices[0].thread, 2);
    }

    #[test]
    fn end_of_instant_wakes_cooperated_and_clears_events() {
        let mut s = SchedulerState::initial(2);
        s.committed_order = alloc::vec![0, 1];
        s.status = alloc::vec![Status::Cooperated, Status::Waiting(ev("e"))];
        s.notified.insert(ev("f"));
        let out = sched(&s).unwrap();
        assert!(out.end_of_instant);
        assert_eq!(out.choices.len(), 1);
        let n = &out.choices[0].state;
        assert!(n.notified.is_empty());
        assert_eq!(n.status[1], Status::Waiting(ev("e")));
    }

    #[test]
    fn await_and_generate() {
        let s = SchedulerState::initial(2);
        let (v, w) = sexec(&s, Prim::Await, Some(&ev("e")), 0, none).unwrap();
        assert_eq!(v, 0);
        assert_eq!(w.status[0], Status::Waiting(ev("e")));

        let mut s2 = SchedulerState::initial(2);
        s2.status[1] = Status::Waiting(ev("e"));
        let (_, g) = sexec(&s2, Prim::Generate, Some(&ev("e")), 0, none).unwrap();
        assert_eq!(g.status[1], Status::Runnable);
        assert!(g.notified.contains("e"));
        let (_, a) = sexec(&g, Prim::Await, Some(&ev("e")), 0, none).unwrap();
        assert_eq!(a.status[0], Status::Running);
    }

    #[test]
    fn join_and_exit() {
        let s = SchedulerState::initial(2);
        let (_, j) = sexec(&s, Prim::Join, Some(&ev("t")), 0, |_| Some(1)).unwrap();
        assert_eq!(j.status[0], Status::Joining(1));
        let mut k = j.clone();
        k.status[1] = Status::Running;
        let done = on_thread_exit(&k, 1).unwrap();
        assert_eq!(done.status, alloc::vec![Status::Runnable, Status::Terminated]);
        assert!(on_thread_exit(&done, 1).is_err());
        assert!(sexec(&s, Prim::Cooperate, None, 1, none).is_err());
    }
}
