//! Partial-order reduction over atomic blocks: a static dependence relation,
//! necessary enabling sets, persistent sets and sleep sets.
//!
//! Everything here works on block identities plus access summaries, so it
//! can be exercised on synthetic inputs as well as on a parsed program.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::frontend::{AccessSummary, BlockId, Loc, Program};
use crate::sched::{SchedChoice, SchedulerState, Status};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PorMode {
    None,
    Persistent,
    Sleep,
    #[default]
    Both,
}

impl PorMode {
    pub const ALL: [PorMode; 4] = [PorMode::None, PorMode::Persistent, PorMode::Sleep, PorMode::Both];

    pub fn name(self) -> &'static str {
        match self {
            PorMode::None => "none",
            PorMode::Persistent => "persistent",
            PorMode::Sleep => "sleep",
            PorMode::Both => "both",
        }
    }

    pub fn from_name(s: &str) -> Option<PorMode> {
        PorMode::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn persistent(self) -> bool {
        matches!(self, PorMode::Persistent | PorMode::Both)
    }

    pub fn sleep(self) -> bool {
        matches!(self, PorMode::Sleep | PorMode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PorError {
    #[error("block {0:?} is enabled; a necessary enabling set is only defined for disabled blocks")]
    BlockEnabled(BlockId),
    #[error("unknown block {0:?}")]
    UnknownBlock(BlockId),
}

/// Whether two summaries conflict: a write against a read or write of the
/// same global, a notification against a wait on the same event, or a join
/// against a block through which the joined thread terminates.
pub fn summaries_dependent(
    a: (BlockId, &AccessSummary),
    b: (BlockId, &AccessSummary),
    thread_name: &impl Fn(usize) -> Arc<str>,
) -> bool {
    let ((ia, sa), (ib, sb)) = (a, b);
    if ia == ib {
        return true;
    }
    let writes_conflict = |x: &AccessSummary, y: &AccessSummary| {
        x.globals_written.iter().any(|g| y.globals_read.contains(g) || y.globals_written.contains(g))
    };
    let events_conflict = |x: &AccessSummary, y: &AccessSummary| {
        x.events_generated.iter().any(|e| y.events_awaited.contains(e))
    };
    let join_conflict = |x: &AccessSummary, y_id: BlockId, y: &AccessSummary| {
        y.terminates && x.threads_joined.contains(&thread_name(y_id.thread))
    };
    writes_conflict(sa, sb)
        || writes_conflict(sb, sa)
        || events_conflict(sa, sb)
        || events_conflict(sb, sa)
        || join_conflict(sa, ib, sb)
        || join_conflict(sb, ia, sa)
}

/// A symmetric, reflexive relation over the blocks of a program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependenceRelation {
    blocks: BTreeSet<BlockId>,
    pairs: BTreeSet<(BlockId, BlockId)>,
}

impl DependenceRelation {
    pub fn from_summaries(summaries: &BTreeMap<BlockId, AccessSummary>, thread_name: impl Fn(usize) -> Arc<str>) -> Self {
        let items: Vec<(&BlockId, &AccessSummary)> = summaries.iter().collect();
        let mut pairs = BTreeSet::new();
        for (i, (a, sa)) in items.iter().enumerate() {
            for (b, sb) in &items[i + 1..] {
                if summaries_dependent((**a, sa), (**b, sb), &thread_name) {
                    pairs.insert((**a, **b));
                }
            }
        }
        DependenceRelation { blocks: summaries.keys().copied().collect(), pairs }
    }

    pub fn dependent(&self, a: BlockId, b: BlockId) -> bool {
        a == b || self.pairs.contains(&(a.min(b), a.max(b)))
    }

    pub fn blocks(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.blocks.iter().copied()
    }

    /// Blocks dependent on `a`, including `a` itself.
    pub fn related(&self, a: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.blocks.iter().copied().filter(move |&b| self.dependent(a, b))
    }

    /// Number of unordered dependent pairs of distinct blocks.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Dependence relation of a parsed program.
pub fn valid_dependence(p: &Program) -> DependenceRelation {
    DependenceRelation::from_summaries(&all_summaries(p), |t| p.threads[t].name.clone())
}

pub fn all_summaries(p: &Program) -> BTreeMap<BlockId, AccessSummary> {
    p.threads
        .iter()
        .flat_map(|t| t.blocks.iter().zip(&t.summaries).map(|(b, s)| (b.id, s.clone())))
        .collect()
}

/// The POR-relevant view of one non-running node.
#[derive(Clone, Debug)]
pub struct PorView<'a> {
    pub dep: &'a DependenceRelation,
    pub summaries: &'a BTreeMap<BlockId, AccessSummary>,
    /// Block whose entry is each thread's current location.
    pub current: Vec<Option<BlockId>>,
    pub sched: &'a SchedulerState,
    /// Treat blocks of two not-yet-ordered threads as dependent, since
    /// scheduling them fixes the round-robin order differently.
    pub order_sensitive: bool,
}

impl<'a> PorView<'a> {
    pub fn for_program(
        p: &Program,
        dep: &'a DependenceRelation,
        summaries: &'a BTreeMap<BlockId, AccessSummary>,
        locs: &[Loc],
        sched: &'a SchedulerState,
    ) -> Self {
        let current = locs
            .iter()
            .enumerate()
            .map(|(t, &l)| p.threads[t].block_at(l).map(|_| BlockId { thread: t, entry: l }))
            .collect();
        PorView { dep, summaries, current, sched, order_sensitive: false }
    }

    pub fn dependent(&self, a: BlockId, b: BlockId) -> bool {
        self.dep.dependent(a, b)
            || (self.order_sensitive
                && a.thread != b.thread
                && !self.sched.is_committed(a.thread)
                && !self.sched.is_committed(b.thread))
    }

    /// The block each choice would start executing, in choice order.
    pub fn enabled(&self, choices: &[SchedChoice]) -> Option<Vec<BlockId>> {
        choices.iter().map(|c| self.current.get(c.thread).copied().flatten()).collect()
    }

    fn generates(&self, b: BlockId, e: &str) -> bool {
        self.summaries.get(&b).is_some_and(|s| s.events_generated.iter().any(|x| &**x == e))
    }

    fn terminates(&self, b: BlockId) -> bool {
        self.summaries.get(&b).is_some_and(|s| s.terminates)
    }
}

/// Blocks one of which must run before the disabled block `b` can become
/// enabled, computed from its owner's status.
pub fn necessary_enabling_set(view: &PorView<'_>, b: BlockId, enabled: &[BlockId]) -> Result<BTreeSet<BlockId>, PorError> {
    if enabled.contains(&b) {
        return Err(PorError::BlockEnabled(b));
    }
    if !view.summaries.contains_key(&b) {
        return Err(PorError::UnknownBlock(b));
    }
    let owner = b.thread;
    // The owner sits elsewhere and can move: its current block comes first.
    if let Some(cur) = view.current.get(owner).copied().flatten() {
        if cur != b && enabled.contains(&cur) {
            return Ok([cur].into_iter().collect());
        }
    }
    let out = match view.sched.status.get(owner) {
        Some(Status::Waiting(e)) => enabled.iter().copied().filter(|&x| view.generates(x, e)).collect(),
        Some(Status::Joining(t)) => enabled.iter().copied().filter(|x| x.thread == *t && view.terminates(*x)).collect(),
        _ => BTreeSet::new(),
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PersistentChoice {
    pub choices: Vec<SchedChoice>,
    /// `P`: the enabled blocks of the saturated set.
    pub blocks: BTreeSet<BlockId>,
}

/// Saturates `{seed}` under the persistent-set closure and returns it
/// restricted to enabled blocks.
pub fn persistent_closure(view: &PorView<'_>, seed: BlockId, enabled: &[BlockId]) -> BTreeSet<BlockId> {
    let mut set: BTreeSet<BlockId> = [seed].into_iter().collect();
    let mut queue = alloc::vec![seed];
    while let Some(t) = queue.pop() {
        let next: Vec<BlockId> = if enabled.contains(&t) {
            view.dep.blocks().filter(|&b| view.dependent(t, b)).collect()
        } else {
            necessary_enabling_set(view, t, enabled).map(|s| s.into_iter().collect()).unwrap_or_default()
        };
        for b in next {
            if set.insert(b) {
                queue.push(b);
            }
        }
    }
    set.into_iter().filter(|b| enabled.contains(b)).collect()
}

/// Seed: the enabled block of the first thread in the committed order, else
/// of the lowest-indexed thread.
pub fn default_seed(view: &PorView<'_>, enabled: &[BlockId]) -> Option<BlockId> {
    view.sched
        .committed_order
        .iter()
        .find_map(|&t| enabled.iter().copied().find(|b| b.thread == t))
        .or_else(|| enabled.iter().copied().min_by_key(|b| b.thread))
}

/// A persistent subset of `choices`. With `all_seeds`, every enabled block
/// is tried as the seed and the smallest result kept.
pub fn persistent(view: &PorView<'_>, choices: &[SchedChoice], all_seeds: bool) -> PersistentChoice {
    let Some(enabled) = view.enabled(choices) else {
        return PersistentChoice { choices: choices.to_vec(), blocks: BTreeSet::new() };
    };
    let Some(seed) = default_seed(view, &enabled) else {
        return PersistentChoice { choices: Vec::new(), blocks: BTreeSet::new() };
    };
    let mut best = persistent_closure(view, seed, &enabled);
    if all_seeds {
        for &s in &enabled {
            let p = persistent_closure(view, s, &enabled);
            if p.len() < best.len() {
                best = p;
            }
        }
    }
    let kept = choices.iter().zip(&enabled).filter(|(_, b)| best.contains(b)).map(|(c, _)| c.clone()).collect();
    PersistentChoice { choices: kept, blocks: best }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SleepResult {
    /// `B_red`, in the order of the input.
    pub reduced: Vec<BlockId>,
    /// Sleep set handed to the successor reached through each block.
    pub successor_sleep: BTreeMap<BlockId, BTreeSet<BlockId>>,
}

/// Sleep-set filtering of `enabled` under the sleep set `z`.
pub fn sleep(view: &PorView<'_>, z: &BTreeSet<BlockId>, enabled: &[BlockId]) -> SleepResult {
    let mut z = z.clone();
    let reduced: Vec<BlockId> = enabled.iter().copied().filter(|b| !z.contains(b)).collect();
    let mut successor_sleep = BTreeMap::new();
    for &a in &reduced {
        let keep = z.iter().copied().filter(|&b| !view.dependent(a, b)).collect();
        successor_sleep.insert(a, keep);
        z.insert(a);
    }
    SleepResult { reduced, successor_sleep }
}

/// The outcome of reducing one scheduling point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    /// Choices to explore, each with the sleep set of its successor.
    pub explore: Vec<(SchedChoice, BTreeSet<BlockId>)>,
    /// Choices left out by the persistent set (candidates for re-expansion
    /// when a cycle is closed).
    pub withheld: Vec<SchedChoice>,
    /// Choices dropped because their block was asleep.
    pub slept: usize,
}

/// Applies the mode to one scheduling point: `Sleep(Persistent(choices))`
/// for `both`.
pub fn reduce(
    view: &PorView<'_>,
    mode: PorMode,
    choices: &[SchedChoice],
    sleep_set: &BTreeSet<BlockId>,
    all_seeds: bool,
) -> Reduction {
    let full = || Reduction {
        explore: choices.iter().map(|c| (c.clone(), BTreeSet::new())).collect(),
        withheld: Vec::new(),
        slept: 0,
    };
    if mode == PorMode::None {
        return full();
    }
    let Some(enabled) = view.enabled(choices) else { return full() };
    let (kept, withheld) = if mode.persistent() {
        let pc = persistent(view, choices, all_seeds);
        let withheld = choices.iter().zip(&enabled).filter(|(_, b)| !pc.blocks.contains(b)).map(|(c, _)| c.clone()).collect();
        (pc.choices, withheld)
    } else {
        (choices.to_vec(), Vec::new())
    };
    if !mode.sleep() {
        return Reduction { explore: kept.into_iter().map(|c| (c, BTreeSet::new())).collect(), withheld, slept: 0 };
    }
    let kept_blocks: Vec<BlockId> = kept.iter().map(|c| view.current[c.thread].expect("enabled block")).collect();
    let sr = sleep(view, sleep_set, &kept_blocks);
    let before = kept.len();
    let explore: Vec<(SchedChoice, BTreeSet<BlockId>)> = kept
        .into_iter()
        .zip(kept_blocks)
        .filter_map(|(c, b)| sr.successor_sleep.get(&b).map(|z| (c, z.clone())))
        .collect();
    let slept = before - explore.len();
    Reduction { explore, withheld, slept }
}
