//! Craig interpolation from Farkas certificates.

use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use super::formula::{Formula, Literal};
use super::linear::{Atom, LinTerm, Rational, Rel};
use super::solver::Solver;
use super::LogicError;

fn cube_atoms(cube: &[Literal]) -> Vec<Atom> {
    cube.iter()
        .map(|l| match l {
            Literal::Pos(a) => a.clone(),
            Literal::Ne(_) => unreachable!("disequalities are split before interpolation"),
        })
        .collect()
}

/// Sum of the A-side of a certificate, as the formula `Σ μ_j t_j ⋈ 0`.
fn partial_sum(cs: &[(LinTerm, Rel)], mu: &[Rational], take: impl Fn(usize) -> bool) -> Formula {
    let mut sum = LinTerm::zero();
    let mut strict = false;
    for (j, ((t, rel), k)) in cs.iter().zip(mu).enumerate() {
        if !take(j) || k.is_zero() {
            continue;
        }
        if *rel == Rel::Lt && k.is_positive() {
            strict = true;
        }
        sum = sum.add(&t.scale(k));
    }
    Formula::constraint(sum, if strict { Rel::Lt } else { Rel::Le })
}

/// Interpolant of two conjunctions of atoms, `None` if `A ∧ B` is satisfiable.
pub fn interpolate_cubes(solver: &Solver, a: &[Atom], b: &[Atom]) -> Option<Formula> {
    let mut all = a.to_vec();
    all.extend_from_slice(b);
    let (cs, mu) = solver.refute(&all)?;
    Some(partial_sum(&cs, &mu, |j| j < a.len()))
}

/// An interpolant for `A ∧ B` unsatisfiable.
///
/// Both sides are expanded to DNF with disequalities split; the result is
/// `∨_i ∧_j I(a_i, b_j)`.
pub fn interpolate(solver: &Solver, a: &Formula, b: &Formula) -> Result<Formula, LogicError> {
    let da = a.to_dnf(true, solver.clause_cap)?;
    let db = b.to_dnf(true, solver.clause_cap)?;
    if da.len().saturating_mul(db.len()) > solver.clause_cap {
        return Err(LogicError::Capacity { what: "interpolation cube pairs", limit: solver.clause_cap });
    }
    let mut disjuncts = Vec::with_capacity(da.len());
    for ca in &da {
        let aa = cube_atoms(ca);
        let mut conj = Vec::with_capacity(db.len());
        for cb in &db {
            let bb = cube_atoms(cb);
            conj.push(interpolate_cubes(solver, &aa, &bb).ok_or(LogicError::SatisfiablePath)?);
        }
        disjuncts.push(Formula::and(conj));
    }
    Ok(Formula::or(disjuncts))
}

fn as_atoms(f: &Formula, out: &mut Vec<Atom>) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(a) => {
            out.push(a.clone());
            true
        }
        Formula::And(fs) => fs.iter().all(|g| as_atoms(g, out)),
        _ => false,
    }
}

/// Interpolants for every cut `1..n-1` of an unsatisfiable sequence of
/// conjuncts: entry `k-1` separates `parts[..k]` from `parts[k..]`.
///
/// Purely conjunctive sequences use one certificate, so the returned
/// interpolants are partial sums of it and form an inductive sequence.
pub fn interpolate_sequence(solver: &Solver, parts: &[Formula]) -> Result<Vec<Formula>, LogicError> {
    let n = parts.len();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut conjunctive = true;
    for (i, p) in parts.iter().enumerate() {
        if p.is_false() {
            conjunctive = false;
            break;
        }
        let before = atoms.len();
        if !as_atoms(p, &mut atoms) {
            conjunctive = false;
            break;
        }
        owner.extend(core::iter::repeat(i).take(atoms.len() - before));
    }
    if conjunctive {
        let (cs, mu) = solver.refute(&atoms).ok_or(LogicError::SatisfiablePath)?;
        return Ok((1..n).map(|k| partial_sum(&cs, &mu, |j| owner[j] < k)).collect());
    }
    if solver.is_sat(&Formula::and(parts.iter().cloned()))? {
        return Err(LogicError::SatisfiablePath);
    }
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let a = Formula::and(parts[..k].iter().cloned());
        let b = Formula::and(parts[k..].iter().cloned());
        out.push(interpolate(solver, &a, &b)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::linear::Var;

    fn v(n: &str) -> LinTerm {
        LinTerm::var(Var::new(n))
    }

    fn triple(s: &Solver, a: &Formula, b: &Formula, i: &Formula) {
        assert!(s.entails(a, i).unwrap(), "A does not imply {}", i);
        assert!(!s.is_sat(&Formula::and([i.clone(), b.clone()])).unwrap(), "{} and B sat", i);
        let common: alloc::collections::BTreeSet<_> = a.vars().intersection(&b.vars()).cloned().collect();
        assert!(i.vars().is_subset(&common));
    }

    #[test]
    fn trivial_sides() {
        let s = Solver::rational();
        let x0 = Formula::lt(&v("x"), &LinTerm::int(0));
        assert_eq!(interpolate(&s, &Formula::False, &x0).unwrap(), Formula::False);
        assert_eq!(interpolate(&s, &x0, &Formula::False).unwrap(), Formula::True);
    }

    #[test]
    fn disjunctive_sides() {
        let s = Solver::rational();
        let a = Formula::or([Formula::eq(&v("x"), &LinTerm::int(1)), Formula::eq(&v("x"), &LinTerm::int(2))]);
        let b = Formula::and([Formula::lt(&v("x"), &v("y")), Formula::lt(&v("y"), &LinTerm::int(1))]);
        let i = interpolate(&s, &a, &b).unwrap();
        triple(&s, &a, &b, &i);
    }

    #[test]
    fn sequence_is_inductive_partial_sums() {
        let s = Solver::rational();
        let parts = alloc::vec![
            Formula::eq(&v("x1"), &v("y0")),
            Formula::gt(&v("x1"), &LinTerm::int(0)),
            Formula::eq(&v("x2"), &v("x1").add(&LinTerm::int(1))),
            Formula::eq(&v("y1"), &v("x2")),
            Formula::lt(&v("y1"), &LinTerm::int(0)),
        ];
        let seq = interpolate_sequence(&s, &parts).unwrap();
        assert_eq!(seq.len(), 4);
        for k in 1..5 {
            let a = Formula::and(parts[..k].iter().cloned());
            let b = Formula::and(parts[k..].iter().cloned());
            triple(&s, &a, &b, &seq[k - 1]);
        }
    }
}
