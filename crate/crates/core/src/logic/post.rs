//! Strongest post-conditions and SSA path formulas.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::formula::Formula;
use super::linear::{LinTerm, Var, Version};
use crate::ir::{Operation, Rhs};

/// A shadow copy of `x` not occurring in `f` or `extra`.
fn fresh_shadow(x: &Var, f: &Formula, extra: Option<&LinTerm>) -> Var {
    let mut vars = f.vars();
    if let Some(t) = extra {
        t.collect_vars(&mut vars);
    }
    let next = vars
        .iter()
        .filter(|v| v.name == x.name)
        .filter_map(|v| match v.version {
            Version::Shadow(k) => Some(k + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    x.with_version(Version::Shadow(next))
}

fn rename_one<'a>(x: &Var, to: &'a Var) -> impl FnMut(&Var) -> Var + 'a {
    let x = x.clone();
    move |v: &Var| if *v == x { to.clone() } else { v.clone() }
}

/// `SP(phi, op)`. The pre-state copy of an assigned variable is renamed to a
/// fresh shadow symbol that stays free in the result.
///
/// A primitive call is treated as the assignment of its return value 0.
pub fn strongest_post(phi: &Formula, op: &Operation) -> Formula {
    if phi.is_false() {
        return Formula::False;
    }
    match op {
        Operation::Assume(b) => Formula::and([phi.clone(), b.clone()]),
        Operation::Assign { target, rhs } => {
            let e = match rhs {
                Rhs::Term(t) => Some(t),
                Rhs::Nondet => None,
            };
            if !phi.vars().contains(target) && e.map_or(true, |t| t.coeff(target) == num_traits::Zero::zero()) {
                let eq = e.map_or(Formula::True, |t| Formula::eq(&LinTerm::var(target.clone()), t));
                return Formula::and([phi.clone(), eq]);
            }
            let shadow = fresh_shadow(target, phi, e);
            let moved = phi.rename(&mut rename_one(target, &shadow));
            match e {
                None => moved,
                Some(t) => {
                    let rhs = t.rename(&mut rename_one(target, &shadow));
                    Formula::and([moved, Formula::eq(&LinTerm::var(target.clone()), &rhs)])
                }
            }
        }
        Operation::Prim { target: None, .. } => phi.clone(),
        Operation::Prim { target: Some(x), .. } => {
            strongest_post(phi, &Operation::assign(x.clone(), LinTerm::zero()))
        }
    }
}

/// `SP` over a sequence of operations.
pub fn strongest_post_seq<'a>(phi: &Formula, ops: impl IntoIterator<Item = &'a Operation>) -> Formula {
    ops.into_iter().fold(phi.clone(), |acc, op| strongest_post(&acc, op))
}

/// The effect of `op` on threads that do not execute it: every global it
/// writes receives an arbitrary value. `None` when no global is written.
pub fn havoc_of(op: &Operation, is_global: impl Fn(&Var) -> bool) -> Option<Operation> {
    match op {
        Operation::Assign { target, .. } if is_global(target) => Some(Operation::havoc(target.clone())),
        Operation::Prim { target: Some(t), .. } if is_global(t) => Some(Operation::havoc(t.clone())),
        _ => None,
    }
}

/// SSA encoding of an operation sequence, one conjunct per operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathFormula {
    pub conjuncts: Vec<Formula>,
    /// Final SSA index of every variable touched.
    pub index: BTreeMap<Arc<str>, u32>,
}

impl PathFormula {
    pub fn formula(&self) -> Formula {
        Formula::and(self.conjuncts.iter().cloned())
    }
}

/// Maps every variable to its current SSA version; unseen variables start at 0.
fn to_ssa(index: &BTreeMap<Arc<str>, u32>) -> impl FnMut(&Var) -> Var + '_ {
    move |v: &Var| Var::ssa(&v.name, index.get(&v.name).copied().unwrap_or(0))
}

pub fn path_formula<'a>(ops: impl IntoIterator<Item = &'a Operation>) -> PathFormula {
    let mut index: BTreeMap<Arc<str>, u32> = BTreeMap::new();
    let mut conjuncts = Vec::new();
    for op in ops {
        let c = match op {
            Operation::Assume(b) => b.rename(&mut to_ssa(&index)),
            Operation::Assign { target, rhs } => {
                let rhs = match rhs {
                    Rhs::Term(t) => Some(t.rename(&mut to_ssa(&index))),
                    Rhs::Nondet => None,
                };
                let k = index.entry(target.name.clone()).or_insert(0);
                *k += 1;
                let lhs = LinTerm::var(Var::ssa(&target.name, *k));
                rhs.map_or(Formula::True, |r| Formula::eq(&lhs, &r))
            }
            Operation::Prim { target: None, .. } => Formula::True,
            Operation::Prim { target: Some(x), .. } => {
                let k = index.entry(x.name.clone()).or_insert(0);
                *k += 1;
                Formula::eq(&LinTerm::var(Var::ssa(&x.name, *k)), &LinTerm::zero())
            }
        };
        conjuncts.push(c);
    }
    PathFormula { conjuncts, index }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Solver;

    fn v(n: &str) -> LinTerm {
        LinTerm::var(Var::new(n))
    }

    #[test]
    fn sp_of_increment() {
        let x = Var::new("x");
        let phi = Formula::eq(&v("x"), &LinTerm::int(1));
        let post = strongest_post(&phi, &Operation::assign(x.clone(), v("x").add(&LinTerm::int(1))));
        let s = Solver::default();
        assert!(s.entails(&post, &Formula::eq(&v("x"), &LinTerm::int(2))).unwrap());
        assert!(post.vars().iter().any(|w| matches!(w.version, Version::Shadow(_))));
    }

    #[test]
    fn sp_nested_shadows_stay_distinct() {
        let x = Var::new("x");
        let inc = Operation::assign(x.clone(), v("x").add(&LinTerm::int(1)));
        let phi = Formula::eq(&v("x"), &LinTerm::int(0));
        let post = strongest_post_seq(&phi, [&inc, &inc, &inc]);
        assert!(Solver::default().entails(&post, &Formula::eq(&v("x"), &LinTerm::int(3))).unwrap());
    }

    #[test]
    fn havoc_only_for_globals() {
        let g = Var::new("g");
        let l = Var::new("main.l");
        let glob = |v: &Var| !v.name.contains('.');
        assert_eq!(havoc_of(&Operation::assign(g.clone(), v("main.l")), glob), Some(Operation::havoc(g)));
        assert_eq!(havoc_of(&Operation::assign(l, LinTerm::int(5)), glob), None);
    }
}
