//! Boolean predicate abstraction.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::formula::{Formula, Literal, Nnf};
use super::post::strongest_post;
use super::solver::{Model, Solver};
use super::LogicError;
use crate::ir::Operation;

/// A finite set of predicates over program variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision {
    preds: BTreeSet<Formula>,
}

impl Precision {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a predicate; constants are ignored. Returns whether it was new.
    pub fn insert(&mut self, p: Formula) -> bool {
        if p.is_true() || p.is_false() {
            return false;
        }
        self.preds.insert(p)
    }

    pub fn contains(&self, p: &Formula) -> bool {
        self.preds.contains(p)
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> {
        self.preds.iter()
    }

    pub fn union(&self, other: &Precision) -> Precision {
        Precision { preds: self.preds.union(&other.preds).cloned().collect() }
    }

    pub fn difference(&self, other: &Precision) -> Precision {
        Precision { preds: self.preds.difference(&other.preds).cloned().collect() }
    }

    pub fn is_subset(&self, other: &Precision) -> bool {
        self.preds.is_subset(&other.preds)
    }
}

impl FromIterator<Formula> for Precision {
    fn from_iter<I: IntoIterator<Item = Formula>>(iter: I) -> Self {
        let mut p = Precision::new();
        for f in iter {
            p.insert(f);
        }
        p
    }
}

pub const DEFAULT_MAX_PREDS: usize = 16;

/// The strongest Boolean combination of `prec` entailed by `phi`.
///
/// The abstraction of a disjunction is the disjunction of the abstractions,
/// so `phi` is split into its satisfiable cubes first. Per cube, minterms are
/// enumerated depth-first; at each predicate the branch agreeing with the
/// current model is known satisfiable, so only the other branch needs a
/// solver call. Minterms that differ in one predicate only are merged, so
/// the result is a disjunction of partial cubes in canonical order.
pub fn abstract_formula(
    solver: &Solver,
    phi: &Formula,
    prec: &Precision,
    max_preds: usize,
) -> Result<Formula, LogicError> {
    if prec.len() > max_preds {
        return Err(LogicError::Capacity { what: "predicates per query", limit: max_preds });
    }
    let cubes = solver.cubes(phi)?;
    if cubes.is_empty() {
        return Ok(Formula::False);
    }
    if prec.is_empty() {
        return Ok(Formula::True);
    }
    // Each predicate with the literal cubes of itself and its negation;
    // predicates that are not literal conjunctions take the general search.
    let preds: Vec<Pred> = prec
        .iter()
        .map(|p| {
            let n = Formula::not(p.clone());
            let lits = literals(p).zip(literals(&n));
            Pred { pos: p.clone(), neg: n, lits }
        })
        .collect();
    let mut minterms = BTreeSet::new();
    for (lits, model) in cubes {
        let mut chosen = Vec::with_capacity(preds.len());
        enumerate(solver, &lits, &preds, &mut chosen, model, &mut minterms)?;
    }
    let cubes = merge_minterms(minterms);
    Ok(Formula::or(cubes.into_iter().map(|c| {
        Formula::and(preds.iter().zip(c).filter_map(|(p, s)| s.map(|s| p.side(s).clone())))
    })))
}

/// Repeatedly replaces `c ∧ p` and `c ∧ ¬p` by `c` until no pair merges.
fn merge_minterms(minterms: BTreeSet<Vec<bool>>) -> BTreeSet<Vec<Option<bool>>> {
    let mut cur: BTreeSet<Vec<Option<bool>>> = minterms.into_iter().map(|m| m.into_iter().map(Some).collect()).collect();
    loop {
        let list: Vec<&Vec<Option<bool>>> = cur.iter().collect();
        let mut merged: Option<(usize, usize, usize)> = None;
        'outer: for a in 0..list.len() {
            for b in a + 1..list.len() {
                let mut diff = None;
                for (k, (x, y)) in list[a].iter().zip(list[b]).enumerate() {
                    if x == y {
                        continue;
                    }
                    if diff.is_some() || x.is_none() || y.is_none() {
                        diff = None;
                        break;
                    }
                    diff = Some(k);
                }
                if let Some(k) = diff {
                    merged = Some((a, b, k));
                    break 'outer;
                }
            }
        }
        let Some((a, b, k)) = merged else { return cur };
        let (x, y) = (list[a].clone(), list[b].clone());
        let mut m = x.clone();
        m[k] = None;
        cur.remove(&x);
        cur.remove(&y);
        cur.insert(m);
    }
}

struct Pred {
    pos: Formula,
    neg: Formula,
    lits: Option<(Vec<Literal>, Vec<Literal>)>,
}

impl Pred {
    fn side(&self, positive: bool) -> &Formula {
        if positive {
            &self.pos
        } else {
            &self.neg
        }
    }
}

/// Satisfiability of `base` plus the chosen sides of the first predicates.
fn query(solver: &Solver, base: &[Literal], preds: &[Pred], chosen: &[bool]) -> Result<Option<Model>, LogicError> {
    let mut q: Vec<Literal> = base.to_vec();
    for (p, &pos) in preds.iter().zip(chosen) {
        match &p.lits {
            Some((a, b)) => q.extend(if pos { a } else { b }.iter().cloned()),
            None => {
                let f = Formula::and(
                    base.iter()
                        .map(Formula::from_literal)
                        .chain(preds.iter().zip(chosen).map(|(p, &s)| p.side(s).clone())),
                );
                return solver.model(&f);
            }
        }
    }
    solver.check_cube(&q)
}

fn enumerate(
    solver: &Solver,
    base: &[Literal],
    preds: &[Pred],
    chosen: &mut Vec<bool>,
    model: Model,
    out: &mut BTreeSet<Vec<bool>>,
) -> Result<(), LogicError> {
    let i = chosen.len();
    if i == preds.len() {
        out.insert(chosen.clone());
        return Ok(());
    }
    let holds = preds[i].pos.eval(&|v| model.get(v).cloned());
    // A side whose literals all occur in the cube is entailed by it.
    let fixed = preds[i]
        .lits
        .as_ref()
        .is_some_and(|(a, b)| if holds { a } else { b }.iter().all(|l| base.contains(l)));
    let other = if fixed {
        None
    } else {
        chosen.push(!holds);
        let m = query(solver, base, &preds[..=i], chosen)?;
        chosen.pop();
        m
    };
    chosen.push(holds);
    enumerate(solver, base, preds, chosen, model, out)?;
    chosen.pop();
    if let Some(m) = other {
        chosen.push(!holds);
        enumerate(solver, base, preds, chosen, m, out)?;
        chosen.pop();
    }
    Ok(())
}

/// The literals of a conjunction of literals, or `None` for other shapes.
fn literals(f: &Formula) -> Option<Vec<Literal>> {
    match f.to_nnf() {
        Nnf::True => Some(Vec::new()),
        Nnf::Lit(l) => Some(alloc::vec![l]),
        Nnf::And(parts) => parts
            .into_iter()
            .map(|p| match p {
                Nnf::Lit(l) => Some(l),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

/// `SP_π(phi, op)`: predicate abstraction of the strongest post-condition.
pub fn abstract_post(
    solver: &Solver,
    phi: &Formula,
    op: &Operation,
    prec: &Precision,
    max_preds: usize,
) -> Result<Formula, LogicError> {
    abstract_formula(solver, &strongest_post(phi, op), prec, max_preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{LinTerm, Var};

    fn v(n: &str) -> LinTerm {
        LinTerm::var(Var::new(n))
    }

    #[test]
    fn empty_precision_and_false() {
        let s = Solver::default();
        let op = Operation::assume(Formula::lt(&v("x"), &LinTerm::int(0)));
        assert_eq!(abstract_post(&s, &Formula::True, &op, &Precision::new(), 16).unwrap(), Formula::True);
        assert_eq!(abstract_post(&s, &Formula::False, &op, &Precision::new(), 16).unwrap(), Formula::False);
    }

    #[test]
    fn cap_is_enforced() {
        let s = Solver::default();
        let prec: Precision = (0..3).map(|i| Formula::lt(&v("x"), &LinTerm::int(i))).collect();
        let op = Operation::assume(Formula::True);
        assert!(matches!(
            abstract_post(&s, &Formula::True, &op, &prec, 2),
            Err(LogicError::Capacity { .. })
        ));
    }

    #[test]
    fn assume_against_predicate() {
        let s = Solver::default();
        let prec: Precision = [Formula::lt(&v("y"), &LinTerm::int(0))].into_iter().collect();
        let phi = Formula::eq(&v("y"), &LinTerm::int(7));
        let op = Operation::assume(Formula::lt(&v("y"), &LinTerm::int(0)));
        assert_eq!(abstract_post(&s, &phi, &op, &prec, 16).unwrap(), Formula::False);
    }
}
