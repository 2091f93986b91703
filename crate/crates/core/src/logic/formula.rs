//! Quantifier-free linear arithmetic formulas.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use super::linear::{Atom, AtomOrConst, LinTerm, Rational, Rel, Var};
use super::LogicError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

/// A literal after pushing negations inward. `Ne` carries the equality atom
/// it negates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Ne(Atom),
}

impl Literal {
    pub fn holds(&self, value: &impl Fn(&Var) -> Option<Rational>) -> bool {
        match self {
            Literal::Pos(a) => a.holds(value),
            Literal::Ne(a) => !a.holds(value),
        }
    }

    pub fn atom(&self) -> &Atom {
        match self {
            Literal::Pos(a) | Literal::Ne(a) => a,
        }
    }
}

/// Negation normal form over literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nnf {
    True,
    False,
    Lit(Literal),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn from_atom_or_const(a: AtomOrConst) -> Formula {
    match a {
        AtomOrConst::Atom(a) => Formula::Atom(a),
        AtomOrConst::Const(true) => Formula::True,
        AtomOrConst::Const(false) => Formula::False,
    }
}

/// The positive literal(s) equivalent to `not atom`.
pub fn negate_atom(a: &Atom) -> Literal {
    match a.rel() {
        // not (t < 0)  <=>  -t <= 0
        Rel::Lt => Literal::Pos(Atom::expect(a.term().neg(), Rel::Le)),
        // not (t <= 0) <=>  -t < 0
        Rel::Le => Literal::Pos(Atom::expect(a.term().neg(), Rel::Lt)),
        Rel::Eq => Literal::Ne(a.clone()),
    }
}

impl Formula {
    pub fn constraint(term: LinTerm, rel: Rel) -> Formula {
        from_atom_or_const(Atom::build(term, rel))
    }

    pub fn lt(a: &LinTerm, b: &LinTerm) -> Formula {
        Formula::constraint(a.sub(b), Rel::Lt)
    }

    pub fn le(a: &LinTerm, b: &LinTerm) -> Formula {
        Formula::constraint(a.sub(b), Rel::Le)
    }

    pub fn gt(a: &LinTerm, b: &LinTerm) -> Formula {
        Formula::lt(b, a)
    }

    pub fn ge(a: &LinTerm, b: &LinTerm) -> Formula {
        Formula::le(b, a)
    }

    pub fn eq(a: &LinTerm, b: &LinTerm) -> Formula {
        Formula::constraint(a.sub(b), Rel::Eq)
    }

    pub fn ne(a: &LinTerm, b: &LinTerm) -> Formula {
        Formula::not(Formula::eq(a, b))
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => {
                    for q in inner {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => {
                    for q in inner {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            Formula::Atom(a) if a.rel() != Rel::Eq => match negate_atom(&a) {
                Literal::Pos(b) => Formula::Atom(b),
                Literal::Ne(_) => unreachable!(),
            },
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or([Formula::not(a), b])
    }

    pub fn from_literal(l: &Literal) -> Formula {
        match l {
            Literal::Pos(a) => Formula::Atom(a.clone()),
            Literal::Ne(a) => Formula::Not(Box::new(Formula::Atom(a.clone()))),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => a.term().collect_vars(out),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
        }
    }

    pub fn rename(&self, f: &mut impl FnMut(&Var) -> Var) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => from_atom_or_const(a.rename(f)),
            Formula::Not(g) => Formula::not(g.rename(f)),
            Formula::And(gs) => Formula::and(gs.iter().map(|g| g.rename(f)).collect::<Vec<_>>()),
            Formula::Or(gs) => Formula::or(gs.iter().map(|g| g.rename(f)).collect::<Vec<_>>()),
        }
    }

    pub fn substitute(&self, v: &Var, by: &LinTerm) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => from_atom_or_const(a.substitute(v, by)),
            Formula::Not(g) => Formula::not(g.substitute(v, by)),
            Formula::And(gs) => Formula::and(gs.iter().map(|g| g.substitute(v, by)).collect::<Vec<_>>()),
            Formula::Or(gs) => Formula::or(gs.iter().map(|g| g.substitute(v, by)).collect::<Vec<_>>()),
        }
    }

    /// Truth value under an assignment; unknown variables read as zero.
    pub fn eval(&self, value: &impl Fn(&Var) -> Option<Rational>) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(value),
            Formula::Not(f) => !f.eval(value),
            Formula::And(fs) => fs.iter().all(|f| f.eval(value)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(value)),
        }
    }

    pub fn to_nnf(&self) -> Nnf {
        self.nnf(true)
    }

    fn nnf(&self, positive: bool) -> Nnf {
        match (self, positive) {
            (Formula::True, true) | (Formula::False, false) => Nnf::True,
            (Formula::True, false) | (Formula::False, true) => Nnf::False,
            (Formula::Atom(a), true) => Nnf::Lit(Literal::Pos(a.clone())),
            (Formula::Atom(a), false) => Nnf::Lit(negate_atom(a)),
            (Formula::Not(f), p) => f.nnf(!p),
            (Formula::And(fs), true) | (Formula::Or(fs), false) => {
                Nnf::And(fs.iter().map(|f| f.nnf(positive)).collect())
            }
            (Formula::And(fs), false) | (Formula::Or(fs), true) => {
                Nnf::Or(fs.iter().map(|f| f.nnf(positive)).collect())
            }
        }
    }

    /// Disjunctive normal form. With `split_ne`, each disequality `t != 0`
    /// becomes the two strict branches `t < 0`, `-t < 0`, so every cube is a
    /// conjunction of positive atoms.
    pub fn to_dnf(&self, split_ne: bool, cap: usize) -> Result<Vec<Vec<Literal>>, LogicError> {
        dnf_of(&self.to_nnf(), split_ne, cap)
    }

    /// One s-expression in SMT-LIB style.
    pub fn to_smtlib(&self) -> String {
        let mut s = String::new();
        write_smt(self, &mut s);
        s
    }
}

fn dnf_of(n: &Nnf, split_ne: bool, cap: usize) -> Result<Vec<Vec<Literal>>, LogicError> {
    match n {
        Nnf::True => Ok(vec![Vec::new()]),
        Nnf::False => Ok(Vec::new()),
        Nnf::Lit(Literal::Ne(a)) if split_ne => Ok(vec![
            vec![Literal::Pos(Atom::expect(a.term().clone(), Rel::Lt))],
            vec![Literal::Pos(Atom::expect(a.term().neg(), Rel::Lt))],
        ]),
        Nnf::Lit(l) => Ok(vec![vec![l.clone()]]),
        Nnf::Or(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(dnf_of(p, split_ne, cap)?);
                if out.len() > cap {
                    return Err(LogicError::Capacity { what: "dnf clauses", limit: cap });
                }
            }
            Ok(out)
        }
        Nnf::And(parts) => {
            let mut acc: Vec<Vec<Literal>> = vec![Vec::new()];
            for p in parts {
                let d = dnf_of(p, split_ne, cap)?;
                let mut next = Vec::new();
                for left in &acc {
                    for right in &d {
                        let mut cube = left.clone();
                        for l in right {
                            if !cube.contains(l) {
                                cube.push(l.clone());
                            }
                        }
                        next.push(cube);
                        if next.len() > cap {
                            return Err(LogicError::Capacity { what: "dnf clauses", limit: cap });
                        }
                    }
                }
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            Ok(acc)
        }
    }
}

fn write_rational(r: &Rational, out: &mut String) {
    if r.is_negative() {
        out.push_str("(- ");
        write_rational(&-r.clone(), out);
        out.push(')');
    } else if r.denom().is_one() {
        let _ = write!(out, "{}", r.numer());
    } else {
        let _ = write!(out, "(/ {} {})", r.numer(), r.denom());
    }
}

fn write_smt_term(t: &LinTerm, out: &mut String) {
    let mut parts: Vec<String> = Vec::new();
    for (v, c) in t.coeffs() {
        let mut p = String::new();
        if c.is_one() {
            let _ = write!(p, "{}", v);
        } else {
            p.push_str("(* ");
            write_rational(c, &mut p);
            let _ = write!(p, " {})", v);
        }
        parts.push(p);
    }
    if !t.constant_part().is_zero() || parts.is_empty() {
        let mut p = String::new();
        write_rational(t.constant_part(), &mut p);
        parts.push(p);
    }
    if parts.len() == 1 {
        out.push_str(&parts[0]);
    } else {
        out.push_str("(+");
        for p in parts {
            out.push(' ');
            out.push_str(&p);
        }
        out.push(')');
    }
}

fn write_smt(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a) => {
            let op = match a.rel() {
                Rel::Lt => "<",
                Rel::Le => "<=",
                Rel::Eq => "=",
            };
            let _ = write!(out, "({} ", op);
            write_smt_term(a.term(), out);
            out.push_str(" 0)");
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_smt(g, out);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in gs {
                out.push(' ');
                write_smt(g, out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{}", a),
            Formula::Not(g) => match g.as_ref() {
                Formula::Atom(a) if a.rel() == Rel::Eq => {
                    let s = alloc::format!("{}", a);
                    write!(f, "{}", s.replacen(" = ", " != ", 1))
                }
                other => write!(f, "!({})", other),
            },
            Formula::And(gs) | Formula::Or(gs) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{}", sep)?;
                    }
                    match g {
                        Formula::And(_) | Formula::Or(_) => write!(f, "({})", g)?,
                        _ => write!(f, "{}", g)?,
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::linear::rat;

    fn v(n: &str) -> LinTerm {
        LinTerm::var(Var::new(n))
    }

    #[test]
    fn constant_folding_in_connectives() {
        let a = Formula::lt(&v("x"), &LinTerm::int(0));
        assert_eq!(Formula::and([Formula::True, a.clone()]), a);
        assert_eq!(Formula::and([Formula::False, a.clone()]), Formula::False);
        assert_eq!(Formula::or([Formula::True, a.clone()]), Formula::True);
        assert_eq!(Formula::not(Formula::not(a.clone())), a);
    }

    #[test]
    fn negated_strict_becomes_nonstrict() {
        let a = Formula::lt(&v("x"), &LinTerm::int(0));
        assert_eq!(Formula::not(a), Formula::ge(&v("x"), &LinTerm::int(0)));
    }

    #[test]
    fn dnf_distributes_and_splits_disequality() {
        let f = Formula::and([
            Formula::or([Formula::eq(&v("x"), &LinTerm::int(1)), Formula::eq(&v("x"), &LinTerm::int(2))]),
            Formula::ne(&v("y"), &LinTerm::int(0)),
        ]);
        assert_eq!(f.to_dnf(false, 100).unwrap().len(), 2);
        assert_eq!(f.to_dnf(true, 100).unwrap().len(), 4);
        assert!(f.to_dnf(true, 3).is_err());
    }

    #[test]
    fn smtlib_rendering() {
        let f = Formula::and([
            Formula::le(&v("x").scale(&rat(2)), &LinTerm::int(3)),
            Formula::ne(&v("y"), &LinTerm::int(0)),
        ]);
        assert_eq!(f.to_smtlib(), "(and (<= (+ (* 2 x) (- 3)) 0) (not (= y 0)))");
    }
}
