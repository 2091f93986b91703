use esst_core::concrete::validate_trace;
use esst_core::esst::{
    initial_node, merge_bounds, run_esst, run_esst_until, Checker, EsstOptions, Feasibility, Link, NodeState, Placement,
    Verdict,
};
use esst_core::frontend::Program;
use esst_core::ir::Operation;
use esst_core::logic::{Formula, LinTerm, Var};
use esst_core::por::PorMode;
use esst_core::sched::Status;

fn program(src: &str) -> Program {
    Program::from_source(src).unwrap_or_else(|e| panic!("{}", e))
}

fn corpus(name: &str) -> Program {
    let path = format!("{}/../esst-mc/corpus/{}.tp", env!("CARGO_MANIFEST_DIR"), name);
    program(&std::fs::read_to_string(path).unwrap())
}

fn v(n: &str) -> LinTerm {
    LinTerm::var(Var::new(n))
}

#[test]
fn initial_node_is_all_true() {
    let p = program("global int g = 0; thread main { g := 1; } thread a { } thread b { }");
    let n = initial_node(&p);
    assert_eq!(n.regions.len(), 3);
    assert!(n.regions.iter().all(Formula::is_true) && n.global.is_true());
    assert_eq!(n.running(), Some(0));
    assert_eq!(n.link, Link::Root);
}

#[test]
fn e1_over_cooperate_yields_cooperated_child() {
    let p = program("thread main { cooperate(); } thread a { }");
    let mut c = Checker::new(&p, EsstOptions::default());
    c.arf.nodes.push(initial_node(&p));
    let kids = c.expand_e1(0).unwrap();
    assert_eq!(kids.len(), 1);
    assert_eq!(kids[0].sched.status[0], Status::Cooperated);
    assert!(matches!(&kids[0].link, Link::Edge { label: Operation::Assume(f), .. } if f.is_true()));
}

#[test]
fn e2_creates_one_root_per_choice() {
    let p = program("thread main { cooperate(); } thread a { } thread b { }");
    let mut c = Checker::new(&p, EsstOptions::default().with_por(PorMode::None));
    c.arf.nodes.push(initial_node(&p));
    let kid = c.expand_e1(0).unwrap().remove(0);
    c.arf.nodes.push(kid);
    let roots = c.expand_e2(1).unwrap();
    assert_eq!(roots.len(), 2);
    assert!(roots.iter().all(|r| matches!(r.link, Link::Connector { .. })));
}

#[test]
fn coverage_rules() {
    let p = program("global int g1 = 0; global int g2 = 0; thread main { g1 := 1; } thread a { }");
    let mut c = Checker::new(&p, EsstOptions::default());
    let root = initial_node(&p);
    let mut tighter = root.clone();
    tighter.global = Formula::lt(&v("g1"), &v("g2"));
    let mut other_sched = root.clone();
    other_sched.sched.status[1] = Status::Cooperated;
    c.arf.nodes.extend([root.clone(), root, tighter, other_sched]);
    assert!(c.covers(0, 1).unwrap(), "identical nodes");
    assert!(c.covers(0, 2).unwrap(), "g1 < g2 entails true");
    assert!(!c.covers(2, 0).unwrap());
    assert!(!c.covers(0, 3).unwrap(), "scheduler states differ");
    assert!(!c.covers(0, 0).unwrap());
}

#[test]
fn counterexample_feasibility() {
    let p = program("global int x = 0; global int y = 0; global int z = 0; thread main { x := 1; }");
    let mut c = Checker::new(&p, EsstOptions::default());
    c.arf.nodes.push(initial_node(&p));
    let mut cex = c.counterexample(0);
    assert!(cex.steps.is_empty() && cex.ops.is_empty());
    cex.ops = vec![
        Operation::assign(Var::new("x"), v("y")),
        Operation::assume(Formula::gt(&v("x"), &LinTerm::int(0))),
        Operation::assign(Var::new("x"), v("x").add(&LinTerm::int(1))),
        Operation::assign(Var::new("y"), v("x")),
        Operation::assume(Formula::lt(&v("y"), &LinTerm::int(0))),
    ];
    assert_eq!(c.check_counterexample(&cex).unwrap(), Feasibility::Spurious);
    cex.ops = vec![
        Operation::assign(Var::new("x"), v("x").add(&v("y"))),
        Operation::assign(Var::new("y"), LinTerm::int(7)),
        Operation::assign(Var::new("x"), v("z")),
        Operation::assume(Formula::lt(&v("x"), &v("y").add(&v("z")))),
    ];
    // Satisfiable, but the empty replay path does not reach an error.
    assert!(matches!(c.check_counterexample(&cex).unwrap(), Feasibility::Unconfirmed(_)));
}

#[test]
fn spurious_path_is_refined_away() {
    let p = program(
        "global int x = 0; global int y = 0; \
         thread main { x := y; if (x > 0) { x := x + 1; y := x; if (y < 0) { assert(1 = 0); } } }",
    );
    let r = run_esst(&p, &EsstOptions::default());
    assert_eq!(r.verdict, Verdict::Safe);
    assert!(r.stats.refinements >= 1);
    assert!(r.ledger.predicates_total() >= 1);
}

#[test]
fn infeasible_branch_is_pruned() {
    let p = program("global int y = 7; thread main { if (y < 0) { assert(1 = 0); } }");
    let r = run_esst(&p, &EsstOptions::default());
    assert_eq!(r.verdict, Verdict::Safe);
    assert!(r.arf.nodes.iter().any(|n| n.state == NodeState::Infeasible || n.state == NodeState::Pruned));
}

#[test]
fn reachable_assertion_is_unsafe_with_replayed_trace() {
    let p = program("global int g = 0; thread main { g := *; if (g = 2) { assert(g = 3); } }");
    let r = run_esst(&p, &EsstOptions::default());
    let Verdict::Unsafe(cex) = &r.verdict else { panic!("{:?}", r.verdict) };
    let t = cex.trace.as_ref().unwrap();
    assert!(validate_trace(&p, t).unwrap());
    assert!(t.last().is_error(&p));
    assert_eq!(t.last().value(&Var::new("g")), 2);
}

#[test]
fn independent_threads_are_reduced() {
    let p = program(
        "global int a = 0; global int b = 0; global int c = 0; \
         thread main { cooperate(); } \
         thread t1 { a := 1; cooperate(); a := 2; } \
         thread t2 { b := 1; cooperate(); b := 2; } \
         thread t3 { c := 1; cooperate(); c := 2; }",
    );
    let none = run_esst(&p, &EsstOptions::default().with_por(PorMode::None));
    let both = run_esst(&p, &EsstOptions::default().with_por(PorMode::Both));
    assert_eq!(none.verdict, Verdict::Safe);
    assert_eq!(both.verdict, Verdict::Safe);
    assert!(both.stats.arf_nodes < none.stats.arf_nodes, "{} vs {}", both.stats.arf_nodes, none.stats.arf_nodes);
    assert!(both.stats.persistent_reductions > 0);
}

#[test]
fn small_corpus_all_modes() {
    for (name, expected) in
        [("fact1", "SAFE"), ("fact1-bug", "UNSAFE"), ("ft-token-ring.3", "SAFE"), ("ft-token-ring-bug.3", "UNSAFE")]
    {
        let p = corpus(name);
        let mut nodes = Vec::new();
        for mode in PorMode::ALL {
            let r = run_esst(&p, &EsstOptions::default().with_por(mode));
            assert_eq!(r.verdict.name(), expected, "{} under {}", name, mode.name());
            assert!(r.ledger.invariant_holds());
            assert_eq!(r.arf.len(), r.stats.arf_nodes);
            assert_eq!(r.arf.live(), r.stats.live_nodes);
            if let Verdict::Unsafe(cex) = &r.verdict {
                assert!(validate_trace(&p, cex.trace.as_ref().unwrap()).unwrap());
            }
            nodes.push(r.stats.arf_nodes);
        }
        // none, persistent, sleep, both
        assert!(nodes[3] <= nodes[1] && nodes[1] <= nodes[0], "{}: {:?}", name, nodes);
        assert!(nodes[3] <= nodes[2] && nodes[2] <= nodes[0], "{}: {:?}", name, nodes);
    }
}

#[test]
fn runs_are_deterministic() {
    let p = corpus("ft-token-ring.3");
    let a = run_esst(&p, &EsstOptions::default());
    let b = run_esst(&p, &EsstOptions::default());
    assert_eq!(a.stats, b.stats);
    assert_eq!(a.verdict, b.verdict);
}

#[test]
fn thread_placement_agrees() {
    for name in ["fact1", "fact1-bug", "ft-token-ring.3"] {
        let p = corpus(name);
        let mut o = EsstOptions::default();
        o.placement = Placement::Thread;
        assert_eq!(run_esst(&p, &o).verdict.name(), run_esst(&p, &EsstOptions::default()).verdict.name());
    }
}

#[test]
fn limits_end_in_unknown() {
    let p = corpus("ft-pc-sfifo1");
    let stopped = run_esst_until(&p, &EsstOptions::default(), &mut || true);
    assert_eq!(stopped.verdict, Verdict::Unknown("interrupted".into()));
    let mut o = EsstOptions::default();
    o.max_preds = 1;
    assert!(matches!(run_esst(&p, &o).verdict, Verdict::Unknown(_)));
    let mut o = EsstOptions::default();
    o.max_nodes = 10;
    assert!(matches!(run_esst(&p, &o).verdict, Verdict::Unknown(m) if m.contains("limit")));
}

#[test]
fn bound_pairs_merge_into_equalities() {
    let t = v("x").sub(&v("y"));
    let le = Formula::le(&t, &LinTerm::zero());
    let ge = Formula::le(&t.neg(), &LinTerm::zero());
    let merged = merge_bounds(&[(2, le.clone()), (2, ge.clone()), (3, le.clone())]);
    assert!(merged.contains(&(2, Formula::eq(&t, &LinTerm::zero()))));
    assert!(merged.contains(&(3, le)));
    assert!(!merged.contains(&(2, ge)));
}
