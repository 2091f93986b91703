//! Satisfiability of quantifier-free linear arithmetic formulas.
//!
//! Boolean structure is explored as a lazy DNF: conjunctive parts are
//! collected first, disjunctions are branched on one at a time, and a branch
//! is dropped as soon as its partial cube is infeasible. Cubes are decided by
//! the simplex; disequalities are split only when the model violates them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::formula::{Formula, Literal, Nnf};
use super::linear::{Atom, LinTerm, Rational, Rel, Var};
use super::simplex::{solve, SimplexResult};
use super::LogicError;

pub type Model = BTreeMap<Var, Rational>;

/// Solver configuration.
///
/// In integer mode every atom is tightened before it reaches the simplex
/// (`t < 0` to `t + 1 <= 0`, then division by the coefficient gcd with
/// rounding of the constant). All program variables are integers, so the
/// tightened system has the same integer solutions but fewer rational ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solver {
    pub integer: bool,
    pub clause_cap: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Solver { integer: true, clause_cap: 1 << 16 }
    }
}

impl Solver {
    pub fn rational() -> Self {
        Solver { integer: false, ..Solver::default() }
    }

    pub fn integer() -> Self {
        Solver::default()
    }

    /// The constraint handed to the simplex for `atom`. An integer-infeasible
    /// atom becomes the constant constraint `1 <= 0`.
    pub fn prepare(&self, atom: &Atom) -> (LinTerm, Rel) {
        let t = atom.term().clone();
        if !self.integer {
            return (t, atom.rel());
        }
        let (t, rel) = match atom.rel() {
            Rel::Lt => (t.add(&LinTerm::int(1)), Rel::Le),
            r => (t, r),
        };
        // Atoms are canonical, so coefficients and constant are integers.
        let mut g = BigInt::zero();
        for c in t.coeffs().values() {
            g = g.gcd(c.numer());
        }
        if g.is_one() || g.is_zero() {
            return (t, rel);
        }
        let c = t.constant_part().numer().clone();
        let gq = Rational::from_integer(g.clone());
        let lin = LinTerm::from_parts(t.coeffs().iter().map(|(v, a)| (v.clone(), a / &gq)), Rational::zero());
        match rel {
            Rel::Eq => {
                if !c.is_multiple_of(&g) {
                    return (LinTerm::int(1), Rel::Le);
                }
                (lin.add(&LinTerm::constant(Rational::from_integer(c / g))), Rel::Eq)
            }
            _ => {
                // sum(a/g x) <= floor(-c/g)
                let bound = (-c).div_floor(&g);
                (lin.sub(&LinTerm::constant(Rational::from_integer(bound))), Rel::Le)
            }
        }
    }

    /// A model of `f`, or `None` if unsatisfiable.
    pub fn model(&self, f: &Formula) -> Result<Option<Model>, LogicError> {
        match f {
            Formula::True => return Ok(Some(Model::new())),
            Formula::False => return Ok(None),
            _ => {}
        }
        let nnf = f.to_nnf();
        let mut leaves = 0usize;
        self.search(alloc::vec![&nnf], Vec::new(), Vec::new(), &mut leaves)
    }

    pub fn is_sat(&self, f: &Formula) -> Result<bool, LogicError> {
        Ok(self.model(f)?.is_some())
    }

    /// `phi => psi` is valid.
    pub fn entails(&self, phi: &Formula, psi: &Formula) -> Result<bool, LogicError> {
        if psi.is_true() || phi.is_false() || phi == psi {
            return Ok(true);
        }
        Ok(!self.is_sat(&Formula::and([phi.clone(), Formula::not(psi.clone())]))?)
    }

    pub fn equivalent(&self, a: &Formula, b: &Formula) -> Result<bool, LogicError> {
        Ok(self.entails(a, b)? && self.entails(b, a)?)
    }

    /// Every satisfiable cube of the lazy DNF of `f`, each with a model.
    /// Cubes pruned early are not listed, so the disjunction of the result is
    /// equivalent to `f`.
    pub fn cubes(&self, f: &Formula) -> Result<Vec<(Vec<Literal>, Model)>, LogicError> {
        let mut out = Vec::new();
        match f {
            Formula::True => out.push((Vec::new(), Model::new())),
            Formula::False => {}
            _ => {
                let nnf = f.to_nnf();
                let mut leaves = 0usize;
                self.collect(alloc::vec![&nnf], Vec::new(), Vec::new(), &mut leaves, &mut out)?;
            }
        }
        Ok(out)
    }

    fn collect<'a>(
        &self,
        mut pending: Vec<&'a Nnf>,
        mut ors: Vec<&'a [Nnf]>,
        mut cube: Vec<Literal>,
        leaves: &mut usize,
        out: &mut Vec<(Vec<Literal>, Model)>,
    ) -> Result<(), LogicError> {
        loop {
            while let Some(n) = pending.pop() {
                match n {
                    Nnf::True => {}
                    Nnf::False => return Ok(()),
                    Nnf::Lit(l) => {
                        if cube.contains(&complement(l)) {
                            return Ok(());
                        }
                        if !cube.contains(l) {
                            cube.push(l.clone());
                        }
                    }
                    Nnf::And(parts) => pending.extend(parts.iter()),
                    Nnf::Or(parts) => ors.push(parts),
                }
            }
            let Some(branches) = ors.pop() else {
                *leaves += 1;
                if *leaves > self.clause_cap {
                    return Err(LogicError::Capacity { what: "dnf clauses", limit: self.clause_cap });
                }
                if let Some(m) = self.check_cube(&cube)? {
                    out.push((cube, m));
                }
                return Ok(());
            };
            if branches.iter().any(|b| matches!(b, Nnf::Lit(l) if cube.contains(l))) {
                continue;
            }
            if !cube.is_empty() && self.check_cube(&cube)?.is_none() {
                return Ok(());
            }
            for b in branches {
                self.collect(alloc::vec![b], ors.clone(), cube.clone(), leaves, out)?;
            }
            return Ok(());
        }
    }

    fn search<'a>(
        &self,
        mut pending: Vec<&'a Nnf>,
        mut ors: Vec<&'a [Nnf]>,
        mut cube: Vec<Literal>,
        leaves: &mut usize,
    ) -> Result<Option<Model>, LogicError> {
        loop {
            while let Some(n) = pending.pop() {
                match n {
                    Nnf::True => {}
                    Nnf::False => return Ok(None),
                    Nnf::Lit(l) => {
                        if cube.contains(&complement(l)) {
                            return Ok(None);
                        }
                        if !cube.contains(l) {
                            cube.push(l.clone());
                        }
                    }
                    Nnf::And(parts) => pending.extend(parts.iter()),
                    Nnf::Or(parts) => ors.push(parts),
                }
            }
            let Some(branches) = ors.pop() else {
                *leaves += 1;
                if *leaves > self.clause_cap {
                    return Err(LogicError::Capacity { what: "dnf clauses", limit: self.clause_cap });
                }
                return self.check_cube(&cube);
            };
            // A satisfied disjunction needs no branching.
            if branches.iter().any(|b| matches!(b, Nnf::Lit(l) if cube.contains(l))) {
                continue;
            }
            if !cube.is_empty() && self.check_cube(&cube)?.is_none() {
                return Ok(None);
            }
            for b in branches {
                let r = self.search(alloc::vec![b], ors.clone(), cube.clone(), leaves)?;
                if r.is_some() {
                    return Ok(r);
                }
            }
            return Ok(None);
        }
    }

    /// Decides a conjunction of literals.
    pub fn check_cube(&self, cube: &[Literal]) -> Result<Option<Model>, LogicError> {
        let mut pos: Vec<(LinTerm, Rel)> = Vec::new();
        let mut nes: Vec<&Atom> = Vec::new();
        for l in cube {
            match l {
                Literal::Pos(a) => pos.push(self.prepare(a)),
                Literal::Ne(a) => nes.push(a),
            }
        }
        self.check_split(&mut pos, &nes, 0)
    }

    fn check_split(
        &self,
        pos: &mut Vec<(LinTerm, Rel)>,
        nes: &[&Atom],
        depth: usize,
    ) -> Result<Option<Model>, LogicError> {
        let model = match solve(pos) {
            SimplexResult::Unsat(_) => return Ok(None),
            SimplexResult::Sat(m) => m,
        };
        let lookup = |v: &Var| model.get(v).cloned();
        let violated = nes.iter().find(|a| a.term().eval(&lookup).is_zero());
        let Some(a) = violated else { return Ok(Some(model)) };
        if depth > 2 * nes.len() + 8 {
            return Err(LogicError::Capacity { what: "disequality splits", limit: depth });
        }
        for side in [a.term().clone(), a.term().neg()] {
            pos.push(self.prepare(&Atom::expect(side, Rel::Lt)));
            let r = self.check_split(pos, nes, depth + 1)?;
            pos.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }

    /// Farkas refutation of a conjunction of atoms: the prepared constraints
    /// and their multipliers, or `None` if the conjunction is satisfiable.
    pub fn refute(&self, atoms: &[Atom]) -> Option<(Vec<(LinTerm, Rel)>, Vec<Rational>)> {
        let cs: Vec<(LinTerm, Rel)> = atoms.iter().map(|a| self.prepare(a)).collect();
        match solve(&cs) {
            SimplexResult::Sat(_) => None,
            SimplexResult::Unsat(mu) => Some((cs, mu)),
        }
    }
}

fn complement(l: &Literal) -> Literal {
    match l {
        Literal::Pos(a) if a.rel() == Rel::Eq => Literal::Ne(a.clone()),
        Literal::Pos(a) => super::formula::negate_atom(a),
        Literal::Ne(a) => Literal::Pos(a.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> LinTerm {
        LinTerm::var(Var::new(n))
    }
    fn k(c: i64) -> LinTerm {
        LinTerm::int(c)
    }

    #[test]
    fn integer_mode_rejects_fractional_gaps() {
        // 0 < x < 1 is rational-feasible only.
        let f = Formula::and([Formula::lt(&k(0), &v("x")), Formula::lt(&v("x"), &k(1))]);
        assert!(Solver::rational().is_sat(&f).unwrap());
        assert!(!Solver::integer().is_sat(&f).unwrap());
        // 2x = 1
        let g = Formula::eq(&v("x").scale(&super::super::linear::rat(2)), &k(1));
        assert!(!Solver::integer().is_sat(&g).unwrap());
    }

    #[test]
    fn disequality_split_finds_model() {
        let f = Formula::and([
            Formula::le(&k(0), &v("x")),
            Formula::le(&v("x"), &k(1)),
            Formula::ne(&v("x"), &k(0)),
        ]);
        let m = Solver::integer().model(&f).unwrap().unwrap();
        assert!(f.eval(&|x| m.get(x).cloned()));
        let g = Formula::and([f, Formula::ne(&v("x"), &k(1))]);
        assert!(!Solver::integer().is_sat(&g).unwrap());
    }

    #[test]
    fn entailment_basics() {
        let s = Solver::default();
        let xy = Formula::lt(&v("x"), &v("y"));
        assert!(s.entails(&xy, &Formula::True).unwrap());
        assert!(!s.entails(&Formula::True, &xy).unwrap());
        assert!(s.entails(&Formula::eq(&v("x"), &k(2)), &Formula::gt(&v("x"), &k(0))).unwrap());
    }

    #[test]
    fn disjunction_search_and_cap() {
        let mut parts = Vec::new();
        for i in 0..12 {
            let xi = v(&alloc::format!("x{}", i));
            parts.push(Formula::or([Formula::eq(&xi, &k(0)), Formula::eq(&xi, &k(1))]));
        }
        parts.push(Formula::lt(&k(100), &v("x0")));
        let f = Formula::and(parts);
        let tight = Solver { integer: true, clause_cap: 8 };
        assert!(!Solver::default().is_sat(&f).unwrap());
        // Pruning refutes early regardless of cap.
        assert!(!tight.is_sat(&f).unwrap());
    }
}
