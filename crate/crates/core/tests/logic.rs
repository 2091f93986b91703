use std::collections::BTreeSet;
use std::sync::Arc;

use esst_core::ir::Operation;
use esst_core::logic::{
    abstract_formula, abstract_post, havoc_of, interpolate, interpolate_cubes, interpolate_sequence, path_formula, rat,
    strongest_post, strongest_post_seq, Atom, AtomOrConst, Formula, LinTerm, Precision, Rel, Solver, Var,
};
use proptest::prelude::*;

fn v(n: &str) -> LinTerm {
    LinTerm::var(Var::new(n))
}

fn k(n: i64) -> LinTerm {
    LinTerm::int(n)
}

fn ssa(n: &str, i: u32) -> LinTerm {
    LinTerm::var(Var::ssa(&Arc::from(n), i))
}

fn spurious_path() -> Vec<Operation> {
    vec![
        Operation::assign(Var::new("x"), v("y")),
        Operation::assume(Formula::gt(&v("x"), &k(0))),
        Operation::assign(Var::new("x"), v("x").add(&k(1))),
        Operation::assign(Var::new("y"), v("x")),
        Operation::assume(Formula::lt(&v("y"), &k(0))),
    ]
}

#[test]
fn sp_examples() {
    let s = Solver::default();
    let assume = Operation::assume(Formula::lt(&v("x"), &k(0)));
    assert!(s.equivalent(&strongest_post(&Formula::True, &assume), &Formula::lt(&v("x"), &k(0))).unwrap());
    let inc = Operation::assign(Var::new("x"), v("x").add(&k(1)));
    let post = strongest_post(&Formula::eq(&v("x"), &k(1)), &inc);
    // The shadow of x stays free; project by enumeration.
    let holds: Vec<i64> = (-3..=3)
        .filter(|n| s.is_sat(&Formula::and([post.clone(), Formula::eq(&v("x"), &k(*n))])).unwrap())
        .collect();
    assert_eq!(holds, [2]);
    assert!(!s.is_sat(&strongest_post_seq(&Formula::True, &spurious_path())).unwrap());
}

#[test]
fn havoc_examples() {
    let globals = |x: &Var| &*x.name == "g";
    let h = havoc_of(&Operation::assign(Var::new("g"), v("w")), globals).unwrap();
    assert_eq!(h, Operation::havoc(Var::new("g")));
    assert!(havoc_of(&Operation::assign(Var::new("l"), k(5)), globals).is_none());
    assert_eq!(havoc_of(&Operation::havoc(Var::new("g")), globals), Some(Operation::havoc(Var::new("g"))));
    // The other thread's fact about g is lost, facts about locals survive.
    let s = Solver::default();
    let region = Formula::and([Formula::eq(&v("x"), &v("g")), Formula::eq(&v("l"), &k(1))]);
    let after = strongest_post(&region, &h);
    assert!(!s.entails(&after, &Formula::eq(&v("x"), &v("g"))).unwrap());
    assert!(s.entails(&after, &Formula::eq(&v("l"), &k(1))).unwrap());
}

#[test]
fn path_formula_examples() {
    let s = Solver::default();
    let pf = path_formula(&spurious_path());
    let expected = [
        Formula::eq(&ssa("x", 1), &ssa("y", 0)),
        Formula::gt(&ssa("x", 1), &k(0)),
        Formula::eq(&ssa("x", 2), &ssa("x", 1).add(&k(1))),
        Formula::eq(&ssa("y", 1), &ssa("x", 2)),
        Formula::lt(&ssa("y", 1), &k(0)),
    ];
    assert_eq!(pf.conjuncts, expected);
    assert!(!s.is_sat(&pf.formula()).unwrap());

    let fig = [
        Operation::assign(Var::new("x"), v("x").add(&v("y"))),
        Operation::assign(Var::new("y"), k(7)),
        Operation::assign(Var::new("x"), v("z")),
        Operation::assume(Formula::lt(&v("x"), &v("y").add(&v("z")))),
    ];
    let pf = path_formula(&fig);
    assert_eq!(
        pf.conjuncts,
        [
            Formula::eq(&ssa("x", 1), &ssa("x", 0).add(&ssa("y", 0))),
            Formula::eq(&ssa("y", 1), &k(7)),
            Formula::eq(&ssa("x", 2), &ssa("z", 0)),
            Formula::lt(&ssa("x", 2), &ssa("y", 1).add(&ssa("z", 0))),
        ]
    );
    let m = s.model(&pf.formula()).unwrap().expect("satisfiable");
    assert!(pf.formula().eval(&|x| m.get(x).cloned().or(Some(rat(0)))));
    assert_eq!(path_formula(&[]).formula(), Formula::True);
}

#[test]
fn solver_examples() {
    let s = Solver::default();
    assert!(!s.is_sat(&Formula::False).unwrap());
    assert!(s.entails(&Formula::lt(&v("x"), &v("y")), &Formula::True).unwrap());
    assert!(!s.entails(&Formula::True, &Formula::lt(&v("x"), &v("y"))).unwrap());
    assert!(s.entails(&Formula::eq(&v("x"), &k(2)), &Formula::gt(&v("x"), &k(0))).unwrap());
}

#[test]
fn interpolation_examples() {
    let s = Solver::default();
    let pf = path_formula(&spurious_path());
    let seq = interpolate_sequence(&s, &pf.conjuncts).unwrap();
    assert_eq!(seq.len(), pf.conjuncts.len() - 1);
    // After `[x > 0]` the interpolant speaks about x1 only and implies x1 >= 1.
    let cut = &seq[1];
    assert!(cut.vars().iter().all(|x| *x == Var::ssa(&Arc::from("x"), 1)));
    assert!(s.entails(cut, &Formula::ge(&ssa("x", 1), &k(1))).unwrap());

    let a = Formula::lt(&v("x"), &k(0));
    assert_eq!(interpolate(&s, &Formula::False, &a).unwrap(), Formula::False);
    assert_eq!(interpolate(&s, &a, &Formula::False).unwrap(), Formula::True);
}

#[test]
fn abstraction_examples() {
    let s = Solver::default();
    let (p, q) = (Formula::lt(&v("g1"), &v("g2")), Formula::eq(&v("g1"), &v("g2")));
    let prec: Precision = [p.clone(), q.clone()].into_iter().collect();
    let dec = Operation::assign(Var::new("g2"), v("g2").sub(&k(1)));
    let got = abstract_post(&s, &p, &dec, &prec, 16).unwrap();
    let want = Formula::or([
        Formula::and([p.clone(), Formula::not(q.clone())]),
        Formula::and([Formula::not(p.clone()), q.clone()]),
    ]);
    assert!(s.equivalent(&got, &want).unwrap());
    assert_eq!(abstract_post(&s, &p, &dec, &Precision::new(), 16).unwrap(), Formula::True);
    assert_eq!(abstract_post(&s, &Formula::False, &dec, &prec, 16).unwrap(), Formula::False);

    // Over {y < 0}, a region y = 7 cannot take the edge [y < 0].
    let yneg = Formula::lt(&v("y"), &k(0));
    let prec: Precision = [yneg.clone()].into_iter().collect();
    let r = abstract_post(&s, &Formula::eq(&v("y"), &k(7)), &Operation::assume(yneg), &prec, 16).unwrap();
    assert_eq!(r, Formula::False);
}

// Random formulas over three variables with small coefficients.

fn vars3() -> Vec<Var> {
    ["a", "b", "c"].iter().map(|n| Var::new(n)).collect()
}

fn arb_term() -> impl Strategy<Value = LinTerm> {
    (prop::collection::vec(-3i64..=3, 3), -3i64..=3).prop_map(|(cs, c)| {
        let mut t = LinTerm::int(c);
        for (x, k) in vars3().into_iter().zip(cs) {
            t.add_coeff(x, rat(k));
        }
        t
    })
}

fn arb_atom() -> impl Strategy<Value = Formula> {
    (arb_term(), 0..3usize).prop_map(|(t, r)| Formula::constraint(t, [Rel::Lt, Rel::Le, Rel::Eq][r]))
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    arb_atom().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::or),
            inner.prop_map(Formula::not),
        ]
    })
}

fn arb_op() -> impl Strategy<Value = Operation> {
    prop_oneof![
        (0..3usize, arb_term()).prop_map(|(i, t)| Operation::assign(vars3()[i].clone(), t)),
        (0..3usize).prop_map(|i| Operation::havoc(vars3()[i].clone())),
        arb_atom().prop_map(Operation::assume),
    ]
}

fn atoms_of(f: &Formula) -> Vec<Atom> {
    f.atoms().into_iter().collect()
}

fn pin(vals: &[i64]) -> Formula {
    Formula::and(vars3().into_iter().zip(vals).map(|(x, n)| Formula::eq(&LinTerm::var(x), &k(*n))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sp_contains_every_concrete_successor(phi in arb_formula(), op in arb_op(), s0 in prop::collection::vec(-2i64..=2, 3)) {
        let solver = Solver::rational();
        let val = |st: &[i64]| {
            let st = st.to_vec();
            move |x: &Var| vars3().iter().position(|y| y == x).map(|i| rat(st[i]))
        };
        prop_assume!(phi.eval(&val(&s0)));
        let post = strongest_post(&phi, &op);
        let succs: Vec<Vec<i64>> = match &op {
            Operation::Assume(f) => if f.eval(&val(&s0)) { vec![s0.clone()] } else { vec![] },
            Operation::Assign { target, rhs } => {
                let i = vars3().iter().position(|y| y == target).unwrap();
                let values: Vec<i64> = match rhs {
                    esst_core::ir::Rhs::Nondet => (-2..=2).collect(),
                    esst_core::ir::Rhs::Term(t) => vec![i64::try_from(t.eval(&val(&s0)).to_integer()).unwrap()],
                };
                values.into_iter().map(|n| { let mut s = s0.clone(); s[i] = n; s }).collect()
            }
            Operation::Prim { .. } => unreachable!(),
        };
        for s1 in succs {
            prop_assert!(solver.is_sat(&Formula::and([post.clone(), pin(&s1)])).unwrap());
        }
    }

    #[test]
    fn abstraction_is_entailed_and_strongest(phi in arb_formula(), preds in prop::collection::vec(arb_atom(), 0..4)) {
        let solver = Solver::default();
        let prec: Precision = preds.into_iter().collect();
        let abs = abstract_formula(&solver, &phi, &prec, 16).unwrap();
        prop_assert!(solver.entails(&phi, &abs).unwrap());
        // Every minterm kept by the abstraction is consistent with phi.
        for vals in [[0i64, 0, 0], [1, -1, 2], [-2, 2, 0]] {
            let point = pin(&vals);
            let minterm = Formula::and(prec.iter().map(|p| {
                let holds = solver.entails(&point, p).unwrap();
                if holds { p.clone() } else { Formula::not(p.clone()) }
            }));
            if solver.is_sat(&Formula::and([abs.clone(), minterm.clone()])).unwrap() {
                prop_assert!(solver.is_sat(&Formula::and([phi.clone(), minterm])).unwrap());
            }
        }
    }

    #[test]
    fn interpolants_satisfy_the_three_conditions(a in prop::collection::vec(arb_atom(), 1..4), b in prop::collection::vec(arb_atom(), 1..4)) {
        let solver = Solver::rational();
        let (fa, fb) = (Formula::and(a), Formula::and(b));
        prop_assume!(!solver.is_sat(&Formula::and([fa.clone(), fb.clone()])).unwrap());
        let (aa, bb) = (atoms_of(&fa), atoms_of(&fb));
        prop_assume!(!aa.is_empty() && !bb.is_empty());
        let psi = interpolate_cubes(&solver, &aa, &bb).expect("unsat pair");
        let common: BTreeSet<Var> = fa.vars().intersection(&fb.vars()).cloned().collect();
        prop_assert!(solver.entails(&fa, &psi).unwrap());
        prop_assert!(!solver.is_sat(&Formula::and([psi.clone(), fb])).unwrap());
        prop_assert!(psi.vars().is_subset(&common));
    }

    #[test]
    fn atoms_are_canonical(t in arb_term(), scale in 1i64..4) {
        let a = Atom::build(t.clone(), Rel::Le);
        let b = Atom::build(t.scale(&rat(scale)), Rel::Le);
        prop_assert_eq!(a, b);
        if let AtomOrConst::Atom(x) = Atom::build(t.clone(), Rel::Eq) {
            prop_assert_eq!(Atom::build(t.neg(), Rel::Eq), AtomOrConst::Atom(x));
        }
    }
}
