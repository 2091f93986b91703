//! Variables, rational linear terms and canonical atoms.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Which copy of a program variable a symbol denotes.
///
/// `Current` is the variable as written in the program. `Ssa(k)` is the k-th
/// single-assignment version used in path formulas. `Shadow(k)` is the
/// renamed pre-state copy introduced by strongest post-conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Version {
    Current,
    Ssa(u32),
    Shadow(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: Arc<str>,
    pub version: Version,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var { name: Arc::from(name), version: Version::Current }
    }

    pub fn from_arc(name: Arc<str>) -> Self {
        Var { name, version: Version::Current }
    }

    pub fn ssa(name: &Arc<str>, index: u32) -> Self {
        Var { name: name.clone(), version: Version::Ssa(index) }
    }

    pub fn with_version(&self, version: Version) -> Self {
        Var { name: self.name.clone(), version }
    }

    /// Drops any SSA or shadow index.
    pub fn base(&self) -> Self {
        self.with_version(Version::Current)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.version {
            Version::Current => write!(f, "{}", self.name),
            Version::Ssa(k) => write!(f, "{}_{}", self.name, k),
            Version::Shadow(k) => write!(f, "{}'{}", self.name, k),
        }
    }
}

/// `sum(coeffs[v] * v) + constant`, zero coefficients never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinTerm {
    coeffs: BTreeMap<Var, Rational>,
    constant: Rational,
}

impl Default for LinTerm {
    fn default() -> Self {
        LinTerm { coeffs: BTreeMap::new(), constant: Rational::zero() }
    }
}

impl LinTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        LinTerm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rat(c))
    }

    pub fn var(v: Var) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, Rational::one());
        LinTerm { coeffs, constant: Rational::zero() }
    }

    pub fn from_parts(pairs: impl IntoIterator<Item = (Var, Rational)>, constant: Rational) -> Self {
        let mut t = LinTerm::constant(constant);
        for (v, c) in pairs {
            t.add_coeff(v, c);
        }
        t
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rational> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, v: &Var) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_coeff(&mut self, v: Var, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&v) {
            Some(slot) => {
                *slot += c;
                if slot.is_zero() {
                    self.coeffs.remove(&v);
                }
            }
            None => {
                self.coeffs.insert(v, c);
            }
        }
    }

    pub fn add_constant(&mut self, c: &Rational) {
        self.constant += c;
    }

    pub fn add(&self, other: &LinTerm) -> LinTerm {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            out.add_coeff(v.clone(), c.clone());
        }
        out.constant += &other.constant;
        out
    }

    pub fn sub(&self, other: &LinTerm) -> LinTerm {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn neg(&self) -> LinTerm {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, k: &Rational) -> LinTerm {
        if k.is_zero() {
            return LinTerm::zero();
        }
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        out.extend(self.coeffs.keys().cloned());
    }

    /// Replaces `v` by `by` everywhere.
    pub fn substitute(&self, v: &Var, by: &LinTerm) -> LinTerm {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(v);
                rest.add(&by.scale(c))
            }
        }
    }

    /// Renames variables through `f`, merging coefficients that collide.
    pub fn rename(&self, f: &mut impl FnMut(&Var) -> Var) -> LinTerm {
        let mut out = LinTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out.add_coeff(f(v), c.clone());
        }
        out
    }

    /// Evaluates under `value`; variables it does not know read as zero.
    pub fn eval(&self, value: &impl Fn(&Var) -> Option<Rational>) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            if let Some(x) = value(v) {
                acc += c * x;
            }
        }
        acc
    }

    /// Smallest positive factor making every coefficient and the constant integral.
    fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::one();
        for c in self.coeffs.values().chain(core::iter::once(&self.constant)) {
            l = l.lcm(c.denom());
        }
        l
    }

    /// Gcd of the (integral) variable coefficients, zero for a constant term.
    fn coeff_gcd(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.coeffs.values() {
            g = g.gcd(c.numer());
        }
        g
    }

    /// Scales by a positive factor so all numbers are coprime integers.
    pub fn normalize_positive(&self) -> LinTerm {
        let l = self.denominator_lcm();
        let scaled = if l.is_one() { self.clone() } else { self.scale(&Rational::from_integer(l)) };
        let mut g = scaled.coeff_gcd().gcd(scaled.constant.numer());
        if g.is_negative() {
            g = -g;
        }
        if g.is_zero() || g.is_one() {
            return scaled;
        }
        scaled.scale(&Rational::new(BigInt::one(), g))
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            if mag.is_one() {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}*{}", mag, v)?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if !self.constant.is_zero() {
            let neg = self.constant.is_negative();
            write!(f, " {} {}", if neg { "-" } else { "+" }, self.constant.abs())
        } else {
            Ok(())
        }
    }
}

/// Relation of an atom against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

impl Rel {
    pub fn holds(self, value: &Rational) -> bool {
        match self {
            Rel::Lt => value.is_negative(),
            Rel::Le => !value.is_positive(),
            Rel::Eq => value.is_zero(),
        }
    }
}

/// `term rel 0` in canonical form: coprime integer coefficients, and for
/// equalities the first coefficient positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    term: LinTerm,
    rel: Rel,
}

/// Result of building an atom: either a real constraint or a constant truth value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomOrConst {
    Atom(Atom),
    Const(bool),
}

impl Atom {
    pub fn build(term: LinTerm, rel: Rel) -> AtomOrConst {
        if term.is_constant() {
            return AtomOrConst::Const(rel.holds(term.constant_part()));
        }
        let mut t = term.normalize_positive();
        if rel == Rel::Eq {
            let first_negative = t.coeffs.values().next().map(|c| c.is_negative()).unwrap_or(false);
            if first_negative {
                t = t.neg();
            }
        }
        AtomOrConst::Atom(Atom { term: t, rel })
    }

    /// Builds an atom the caller knows has at least one variable.
    pub fn expect(term: LinTerm, rel: Rel) -> Atom {
        match Atom::build(term, rel) {
            AtomOrConst::Atom(a) => a,
            AtomOrConst::Const(_) => panic!("atom without variables"),
        }
    }

    pub fn term(&self) -> &LinTerm {
        &self.term
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.term.vars()
    }

    pub fn holds(&self, value: &impl Fn(&Var) -> Option<Rational>) -> bool {
        self.rel.holds(&self.term.eval(value))
    }

    pub fn rename(&self, f: &mut impl FnMut(&Var) -> Var) -> AtomOrConst {
        Atom::build(self.term.rename(f), self.rel)
    }

    pub fn substitute(&self, v: &Var, by: &LinTerm) -> AtomOrConst {
        Atom::build(self.term.substitute(v, by), self.rel)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Print as `lhs op rhs` with the constant moved right.
        let lhs = LinTerm { coeffs: self.term.coeffs.clone(), constant: Rational::zero() };
        let rhs = -self.term.constant.clone();
        let op = match self.rel {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
        };
        write!(f, "{} {} {}", lhs, op, rhs)
    }
}
