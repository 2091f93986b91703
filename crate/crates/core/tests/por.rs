use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use esst_core::concrete::{step, Configuration};
use esst_core::frontend::{AccessSummary, BlockId, Program};
use esst_core::logic::Var;
use esst_core::por::{
    all_summaries, necessary_enabling_set, persistent, reduce, sleep, summaries_dependent, valid_dependence,
    DependenceRelation, PorError, PorMode, PorView,
};
use esst_core::sched::{sched, SchedulerState, Status};
use proptest::prelude::*;

fn b(thread: usize) -> BlockId {
    BlockId { thread, entry: 0 }
}

fn name(t: usize) -> Arc<str> {
    Arc::from(format!("t{}", t).as_str())
}

fn summary(read: &[&str], written: &[&str], gen: &[&str], awaited: &[&str]) -> AccessSummary {
    AccessSummary {
        globals_read: read.iter().map(|g| Var::new(g)).collect(),
        globals_written: written.iter().map(|g| Var::new(g)).collect(),
        events_generated: gen.iter().map(|e| Arc::from(*e)).collect(),
        events_awaited: awaited.iter().map(|e| Arc::from(*e)).collect(),
        ..AccessSummary::default()
    }
}

#[test]
fn dependence_criteria() {
    let dep = |x: &AccessSummary, y: &AccessSummary| summaries_dependent((b(0), x), (b(1), y), &name);
    assert!(dep(&summary(&[], &["g"], &[], &[]), &summary(&["g"], &[], &[], &[])));
    assert!(dep(&summary(&[], &[], &["e"], &[]), &summary(&[], &[], &[], &["e"])));
    assert!(!dep(&summary(&["g"], &["h"], &["e"], &[]), &summary(&["g"], &["k"], &[], &["f"])));
    let mut joiner = AccessSummary::default();
    joiner.threads_joined.insert(name(1));
    let terminating = AccessSummary { terminates: true, ..AccessSummary::default() };
    assert!(dep(&joiner, &terminating));
    assert!(!dep(&joiner, &AccessSummary::default()));
}

/// A view over blocks `b(0)..b(n)` with the given summaries and statuses.
struct Fixture {
    summaries: BTreeMap<BlockId, AccessSummary>,
    dep: DependenceRelation,
    sched: SchedulerState,
}

impl Fixture {
    fn new(summaries: Vec<AccessSummary>, status: Vec<Status>) -> Self {
        let summaries: BTreeMap<BlockId, AccessSummary> =
            summaries.into_iter().enumerate().map(|(t, s)| (b(t), s)).collect();
        let dep = DependenceRelation::from_summaries(&summaries, name);
        let n = status.len();
        let sched = SchedulerState {
            status,
            notified: BTreeSet::new(),
            committed_order: (0..n).collect(),
            ran_this_round: BTreeSet::new(),
        };
        Fixture { summaries, dep, sched }
    }

    fn view(&self) -> PorView<'_> {
        let current = (0..self.sched.status.len()).map(|t| Some(b(t))).collect();
        PorView { dep: &self.dep, summaries: &self.summaries, current, sched: &self.sched, order_sensitive: false }
    }
}

#[test]
fn necessary_enabling_sets() {
    let e: Arc<str> = Arc::from("e");
    let f = Fixture::new(
        vec![summary(&[], &[], &["e"], &[]), AccessSummary::default(), AccessSummary::default()],
        vec![Status::Runnable, Status::Waiting(e.clone()), Status::Cooperated],
    );
    let mut v = f.view();
    // The waiting and cooperated threads sit at their blocks; nothing else to run first.
    v.current[1] = Some(b(1));
    let enabled = [b(0)];
    assert_eq!(necessary_enabling_set(&v, b(1), &enabled).unwrap(), [b(0)].into_iter().collect());
    assert!(necessary_enabling_set(&v, b(2), &enabled).unwrap().is_empty());
    assert_eq!(necessary_enabling_set(&v, b(0), &enabled), Err(PorError::BlockEnabled(b(0))));
    let no_generator = Fixture::new(
        vec![AccessSummary::default(), AccessSummary::default()],
        vec![Status::Runnable, Status::Waiting(e)],
    );
    assert!(necessary_enabling_set(&no_generator.view(), b(1), &[b(0)]).unwrap().is_empty());
}

fn choices_for(f: &Fixture) -> Vec<esst_core::sched::SchedChoice> {
    sched(&f.sched).unwrap().choices
}

#[test]
fn persistent_sets() {
    let indep = Fixture::new(
        vec![summary(&[], &["g"], &[], &[]), summary(&[], &["h"], &[], &[])],
        vec![Status::Runnable, Status::Runnable],
    );
    let ch = choices_for(&indep);
    assert_eq!(ch.len(), 1, "committed round-robin offers one thread at a time");
    let lazy = Fixture { sched: SchedulerState { committed_order: vec![], ..indep.sched.clone() }, ..indep };
    let ch = choices_for(&lazy);
    assert_eq!(ch.len(), 2);
    assert_eq!(persistent(&lazy.view(), &ch, false).choices.len(), 1);

    let dep = Fixture::new(
        vec![summary(&[], &["g"], &[], &[]), summary(&["g"], &[], &[], &[])],
        vec![Status::Runnable, Status::Runnable],
    );
    let dep = Fixture { sched: SchedulerState { committed_order: vec![], ..dep.sched.clone() }, ..dep };
    let ch = choices_for(&dep);
    assert_eq!(persistent(&dep.view(), &ch, false).choices.len(), 2);
    assert!(persistent(&dep.view(), &[], false).choices.is_empty());
}

#[test]
fn sleep_sets() {
    let f = Fixture::new(
        vec![summary(&[], &["g"], &[], &[]), summary(&[], &["h"], &[], &[])],
        vec![Status::Runnable, Status::Runnable],
    );
    let v = f.view();
    let r = sleep(&v, &BTreeSet::new(), &[b(0), b(1)]);
    assert_eq!(r.reduced, [b(0), b(1)]);
    assert!(r.successor_sleep[&b(0)].is_empty());
    assert_eq!(r.successor_sleep[&b(1)], [b(0)].into_iter().collect());
    let all: BTreeSet<BlockId> = [b(0), b(1)].into_iter().collect();
    assert!(sleep(&v, &all, &[b(0), b(1)]).reduced.is_empty());
}

#[test]
fn token_ring_first_scheduling_point_is_reduced() {
    let path = format!("{}/../esst-mc/corpus/ft-token-ring.3.tp", env!("CARGO_MANIFEST_DIR"));
    let p = Program::from_source(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut c = Configuration::initial(&p);
    while c.sched.running().is_some() {
        c = step(&p, &c, &[0]).unwrap().remove(0).1;
    }
    let dep = valid_dependence(&p);
    let summaries = all_summaries(&p);
    let view = PorView::for_program(&p, &dep, &summaries, &c.locs, &c.sched);
    let ch = sched(&c.sched).unwrap().choices;
    assert_eq!(ch.len(), 3);
    let pc = persistent(&view, &ch, false);
    assert!(!pc.choices.is_empty() && pc.choices.len() < ch.len());
    let r = reduce(&view, PorMode::Both, &ch, &BTreeSet::new(), false);
    assert_eq!(r.explore.len() + r.withheld.len(), ch.len());
    assert_eq!(reduce(&view, PorMode::None, &ch, &BTreeSet::new(), false).explore.len(), 3);
}

fn arb_summary() -> impl Strategy<Value = AccessSummary> {
    let set = |names: &'static [&'static str]| prop::sample::subsequence(names.to_vec(), 0..=names.len());
    (set(&["g", "h", "k"]), set(&["g", "h", "k"]), set(&["e", "f"]), set(&["e", "f"]), any::<bool>()).prop_map(
        |(r, w, g, a, t)| AccessSummary { terminates: t, ..summary(&r, &w, &g, &a) },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dependence_is_symmetric_and_reflexive(ss in prop::collection::vec(arb_summary(), 1..5)) {
        let summaries: BTreeMap<BlockId, AccessSummary> = ss.into_iter().enumerate().map(|(t, s)| (b(t), s)).collect();
        let dep = DependenceRelation::from_summaries(&summaries, name);
        for x in summaries.keys() {
            prop_assert!(dep.dependent(*x, *x));
            for y in summaries.keys() {
                prop_assert_eq!(dep.dependent(*x, *y), dep.dependent(*y, *x));
            }
        }
    }

    #[test]
    fn reduced_sets_are_sound(ss in prop::collection::vec(arb_summary(), 2..5), asleep in prop::collection::vec(any::<bool>(), 5)) {
        let n = ss.len();
        let f = Fixture::new(ss, vec![Status::Runnable; n]);
        let f = Fixture { sched: SchedulerState { committed_order: vec![], ..f.sched.clone() }, ..f };
        let v = f.view();
        let ch = choices_for(&f);
        let enabled = v.enabled(&ch).unwrap();
        let pc = persistent(&v, &ch, false);
        prop_assert!(!pc.choices.is_empty());
        for x in &pc.blocks {
            for y in &enabled {
                prop_assert!(!v.dependent(*x, *y) || pc.blocks.contains(y));
            }
        }
        let z: BTreeSet<BlockId> = (0..n).filter(|t| asleep[*t]).map(b).collect();
        let r = sleep(&v, &z, &enabled);
        prop_assert!(r.reduced.iter().all(|x| enabled.contains(x) && !z.contains(x)));
    }
}
