use esst_core::frontend::{BlockId, FrontendError, Program};
use esst_core::ir::{Operation, Prim};
use esst_core::logic::Var;

fn program(src: &str) -> Program {
    Program::from_source(src).unwrap_or_else(|e| panic!("{}: {}", e, src))
}

fn corpus(name: &str) -> String {
    let path = format!("{}/../esst-mc/corpus/{}.tp", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn minimal_program() {
    let p = program("global int g = 0; thread main { g := 1; }");
    assert_eq!(p.globals, vec![Var::new("g")]);
    assert_eq!(p.num_threads(), 1);
    assert_eq!(&*p.threads[0].name, "main");
}

#[test]
fn token_ring_has_main_and_three_workers() {
    let p = program(&corpus("ft-token-ring.3"));
    let names: Vec<&str> = p.threads.iter().map(|t| &*t.name).collect();
    assert_eq!(names, ["main", "t1", "t2", "t3"]);
}

#[test]
fn rejects_bad_programs() {
    let err = |src: &str| Program::from_source(src).unwrap_err();
    assert!(matches!(
        err("global int x = 0; event e; thread main { await(x + 1); }"),
        FrontendError::NonConstantArgument { .. } | FrontendError::Syntax { .. }
    ));
    assert_eq!(err("thread worker { }"), FrontendError::MissingMain);
    assert!(matches!(err("thread main { y := 1; }"), FrontendError::Undeclared { .. }));
    assert!(matches!(err("thread main { } thread main { }"), FrontendError::DuplicateThread(_)));
    assert!(matches!(err("global int g = 0; thread main { g := g * g; }"), FrontendError::NonLinear { .. }));
    assert!(matches!(err("thread main { x := ; }"), FrontendError::Syntax { .. }));
}

#[test]
fn assert_lowers_to_two_assume_edges() {
    let p = program("global int y = 0; thread main { assert(y >= 0); }");
    let cfg = &p.threads[0].cfg;
    let assumes: Vec<_> = cfg.edges.iter().filter(|e| matches!(e.op, Operation::Assume(_))).collect();
    assert_eq!(assumes.len(), 2);
    let to_error: Vec<_> = assumes.iter().filter(|e| cfg.is_error(e.dst)).collect();
    assert_eq!(to_error.len(), 1);
    assert_eq!(assumes[0].src, assumes[1].src);
    assert!(cfg.check().is_ok());
}

#[test]
fn while_loop_has_back_edge() {
    let p = program("global int c = 0; thread main { while (c < 3) { c := c + 1; } }");
    let cfg = &p.threads[0].cfg;
    let head = cfg.edges.iter().find(|e| matches!(e.op, Operation::Assume(_))).unwrap().src;
    assert_eq!(cfg.outgoing(head).count(), 2);
    assert!(cfg.edges.iter().any(|e| e.dst == head && matches!(e.op, Operation::Assign { .. })));
}

#[test]
fn empty_body_has_no_edges() {
    let p = program("thread main { } thread idle { }");
    let cfg = &p.threads[1].cfg;
    assert_eq!(cfg.entry, cfg.exit);
    assert!(cfg.edges.is_empty());
}

#[test]
fn global_initialisers_run_first_in_main() {
    let p = program("global int a = 4; global int b; thread main { b := a; } thread w { a := 1; }");
    let first: Vec<String> = p.threads[0].cfg.edges.iter().take(2).map(|e| e.op.to_string()).collect();
    assert_eq!(first, ["a := 4", "b := 0"]);
    assert!(p.threads[1].cfg.edges.iter().all(|e| e.op.to_string() != "a := 4"));
}

#[test]
fn single_await_gives_two_blocks() {
    let p = program(
        "global int x = 0; event e; \
         thread main { while (x < 5) { x := x + 1; await(e); } x := 0; }",
    );
    let t = &p.threads[0];
    assert_eq!(t.blocks.len(), 2);
    let wait = t.cfg.edges.iter().find(|e| matches!(e.op, Operation::Prim { prim: Prim::Await, .. })).unwrap();
    let entries: Vec<u32> = t.blocks.iter().map(|b| b.id.entry).collect();
    assert_eq!(entries, [t.cfg.entry, wait.dst]);
    // Both blocks end either at the wait target or at the exit.
    for b in &t.blocks {
        assert!(b.exits.contains(&wait.dst));
        assert!(b.exits.contains(&t.cfg.exit));
    }
}

#[test]
fn block_counts() {
    let p = program("global int g = 0; thread main { g := 1; g := 2; }");
    assert_eq!(p.threads[0].blocks.len(), 1);
    let p = program("thread main { cooperate(); cooperate(); }");
    assert_eq!(p.threads[0].blocks.len(), 3);
}

#[test]
fn access_summaries() {
    let p = program(
        "global int g = 0; global int h = 0; event e; \
         thread main { local int l = 2; cooperate(); g := l + 1; cooperate(); l := await(e); cooperate(); }",
    );
    let t = &p.threads[0];
    let s = |k: usize| &t.summaries[k];
    // Block 1 writes g from a local only.
    assert_eq!(s(1).globals_written.iter().collect::<Vec<_>>(), [&Var::new("g")]);
    assert!(s(1).globals_read.is_empty());
    assert!(s(2).events_awaited.iter().any(|e| &**e == "e"));

    let p = program("global int g = 0; thread main { if (g > 0) { cooperate(); } }");
    let s0 = &p.threads[0].summaries[0];
    assert!(s0.globals_read.contains(&Var::new("g")));
    assert!(p.summary(BlockId { thread: 0, entry: p.threads[0].cfg.entry }).is_some());
}

#[test]
fn corpus_parses_and_cfgs_are_well_formed() {
    let dir = format!("{}/../esst-mc/corpus", env!("CARGO_MANIFEST_DIR"));
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|x| x == "tp") {
            let p = program(&std::fs::read_to_string(&path).unwrap());
            for t in &p.threads {
                t.cfg.check().unwrap();
                assert_eq!(t.blocks.len(), t.summaries.len());
                assert_eq!(t.block_at(t.cfg.entry), Some(0));
            }
            n += 1;
        }
    }
    assert_eq!(n, 12);
}
