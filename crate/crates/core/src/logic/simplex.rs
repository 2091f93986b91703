//! General simplex over δ-rationals with Farkas explanations.
//!
//! Each input constraint `t_j rel 0` gets a slack `s_j` equal to the linear
//! part of `t_j`; program variables are unbounded. Pivoting follows Bland's
//! rule, so the procedure terminates.
//!
//! The tableau first runs on machine-word fractions; on overflow it is
//! rerun on big rationals.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::linear::{LinTerm, Rational, Rel, Var};

/// Field operations for the tableau. `None` signals overflow.
trait Num: Clone + Ord + core::fmt::Debug {
    fn zero_val() -> Self;
    fn one_val() -> Self;
    fn from_rational(r: &Rational) -> Option<Self>;
    fn to_rational(&self) -> Rational;
    fn add(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    fn recip(&self) -> Option<Self>;
    fn is_nil(&self) -> bool;
    fn is_pos(&self) -> bool;

    fn sub(&self, o: &Self) -> Option<Self> {
        self.add(&o.neg()?)
    }
}

impl Num for Rational {
    fn zero_val() -> Self {
        Zero::zero()
    }
    fn one_val() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Option<Self> {
        Some(r.clone())
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn recip(&self) -> Option<Self> {
        Some(<Rational as One>::one() / self)
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
}

/// A reduced fraction `n / d` with `d > 0`, both machine words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Small {
    n: i64,
    d: i64,
}

impl Small {
    fn make(n: i128, d: i128) -> Option<Self> {
        let g = n.gcd(&d);
        let (mut n, mut d) = if g > 1 { (n / g, d / g) } else { (n, d) };
        if d < 0 {
            n = -n;
            d = -d;
        }
        Some(Small { n: i64::try_from(n).ok()?, d: i64::try_from(d).ok()? })
    }
}

impl PartialOrd for Small {
    fn partial_cmp(&self, o: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Small {
    fn cmp(&self, o: &Self) -> core::cmp::Ordering {
        (self.n as i128 * o.d as i128).cmp(&(o.n as i128 * self.d as i128))
    }
}

impl Num for Small {
    fn zero_val() -> Self {
        Small { n: 0, d: 1 }
    }
    fn one_val() -> Self {
        Small { n: 1, d: 1 }
    }
    fn from_rational(r: &Rational) -> Option<Self> {
        Some(Small { n: r.numer().to_i64()?, d: r.denom().to_i64()? })
    }
    fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(self.n), BigInt::from(self.d))
    }
    fn add(&self, o: &Self) -> Option<Self> {
        if self.d == o.d {
            return Small::make(self.n as i128 + o.n as i128, self.d as i128);
        }
        Small::make(self.n as i128 * o.d as i128 + o.n as i128 * self.d as i128, self.d as i128 * o.d as i128)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Small::make(self.n as i128 * o.n as i128, self.d as i128 * o.d as i128)
    }
    fn neg(&self) -> Option<Self> {
        Some(Small { n: self.n.checked_neg()?, d: self.d })
    }
    fn recip(&self) -> Option<Self> {
        Small::make(self.d as i128, self.n as i128)
    }
    fn is_nil(&self) -> bool {
        self.n == 0
    }
    fn is_pos(&self) -> bool {
        self.n > 0
    }
}

/// `r + d·δ` for a positive infinitesimal δ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct DRat<N> {
    r: N,
    d: N,
}

impl<N: Num> DRat<N> {
    fn zero() -> Self {
        DRat { r: N::zero_val(), d: N::zero_val() }
    }

    fn add_scaled(&mut self, other: &DRat<N>, k: &N) -> Option<()> {
        self.r = self.r.add(&other.r.mul(k)?)?;
        self.d = self.d.add(&other.d.mul(k)?)?;
        Some(())
    }

    fn sub(&self, other: &DRat<N>) -> Option<DRat<N>> {
        Some(DRat { r: self.r.sub(&other.r)?, d: self.d.sub(&other.d)? })
    }

    fn scale(&self, k: &N) -> Option<DRat<N>> {
        Some(DRat { r: self.r.mul(k)?, d: self.d.mul(k)? })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimplexResult {
    /// Values for every variable occurring in the input.
    Sat(BTreeMap<Var, Rational>),
    /// Farkas multipliers, one per input constraint. Inequality multipliers
    /// are non-negative; `Σ μ_j t_j` has no variables and its constant is
    /// positive, or zero with a strict constraint carrying a positive weight.
    Unsat(Vec<Rational>),
}

struct Tableau<N> {
    n_orig: usize,
    rows: Vec<Vec<N>>,
    row_basic: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    value: Vec<DRat<N>>,
    lower: Vec<Option<DRat<N>>>,
    upper: Vec<Option<DRat<N>>>,
}

impl<N: Num> Tableau<N> {
    fn below_lower(&self, x: usize) -> bool {
        matches!(&self.lower[x], Some(l) if self.value[x] < *l)
    }

    fn above_upper(&self, x: usize) -> bool {
        matches!(&self.upper[x], Some(u) if self.value[x] > *u)
    }

    fn can_increase(&self, x: usize) -> bool {
        match &self.upper[x] {
            None => true,
            Some(u) => self.value[x] < *u,
        }
    }

    fn can_decrease(&self, x: usize) -> bool {
        match &self.lower[x] {
            None => true,
            Some(l) => self.value[x] > *l,
        }
    }

    fn pivot(&mut self, r: usize, j: usize) -> Option<()> {
        let i = self.row_basic[r];
        let inv = self.rows[r][j].recip()?;
        let minus_inv = inv.neg()?;
        let mut new_row: Vec<N> = Vec::with_capacity(self.rows[r].len());
        for c in &self.rows[r] {
            new_row.push(if c.is_nil() { N::zero_val() } else { c.mul(&minus_inv)? });
        }
        new_row[j] = N::zero_val();
        new_row[i] = inv;
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let b = row[j].clone();
            if b.is_nil() {
                continue;
            }
            row[j] = N::zero_val();
            for (c, nc) in row.iter_mut().zip(new_row.iter()) {
                if !nc.is_nil() {
                    *c = c.add(&b.mul(nc)?)?;
                }
            }
        }
        self.rows[r] = new_row;
        self.row_basic[r] = j;
        self.basic_row[i] = None;
        self.basic_row[j] = Some(r);
        Some(())
    }

    fn pivot_and_update(&mut self, r: usize, j: usize, target: DRat<N>) -> Option<()> {
        let i = self.row_basic[r];
        let theta = target.sub(&self.value[i])?.scale(&self.rows[r][j].recip()?)?;
        self.value[i] = target;
        self.value[j].add_scaled(&theta, &N::one_val())?;
        for k in 0..self.rows.len() {
            if k == r {
                continue;
            }
            let b = self.rows[k][j].clone();
            if !b.is_nil() {
                let basic = self.row_basic[k];
                self.value[basic].add_scaled(&theta, &b)?;
            }
        }
        self.pivot(r, j)
    }

    /// `Some(None)` when feasible, `Some(Some(mu))` with Farkas multipliers
    /// when not, `None` on overflow.
    fn check(&mut self) -> Option<Option<Vec<Rational>>> {
        let total = self.value.len();
        loop {
            let violated = (0..total)
                .filter(|&x| self.basic_row[x].is_some())
                .find(|&x| self.below_lower(x) || self.above_upper(x));
            let Some(xi) = violated else { return Some(None) };
            let r = self.basic_row[xi].unwrap();
            let raise = self.below_lower(xi);
            let entering = (0..total).find(|&xj| {
                if self.basic_row[xj].is_some() {
                    return false;
                }
                let a = &self.rows[r][xj];
                if a.is_nil() {
                    return false;
                }
                let up = a.is_pos() == raise;
                if up {
                    self.can_increase(xj)
                } else {
                    self.can_decrease(xj)
                }
            });
            match entering {
                Some(xj) => {
                    let target = if raise {
                        self.lower[xi].clone().unwrap()
                    } else {
                        self.upper[xi].clone().unwrap()
                    };
                    self.pivot_and_update(r, xj, target)?;
                }
                None => return Some(Some(self.explain(r, raise))),
            }
        }
    }

    fn explain(&self, r: usize, raise: bool) -> Vec<Rational> {
        let m = self.rows.len();
        let mut mu = vec![Rational::zero(); m];
        let sign = if raise { Rational::one() } else { -Rational::one() };
        for (k, a) in self.rows[r].iter().enumerate() {
            if a.is_nil() || self.basic_row[k].is_some() {
                continue;
            }
            debug_assert!(k >= self.n_orig, "unbounded variable in a conflict row");
            mu[k - self.n_orig] += a.to_rational() * &sign;
        }
        let xi = self.row_basic[r];
        mu[xi - self.n_orig] -= sign;
        mu
    }

    fn concretize(&self) -> Vec<Rational> {
        // Largest δ keeping every bound comparison true in the reals.
        let q = |d: &DRat<N>| (d.r.to_rational(), d.d.to_rational());
        let mut delta = Rational::one();
        let mut tighten = |lo: (Rational, Rational), hi: (Rational, Rational)| {
            if lo.0 < hi.0 && lo.1 > hi.1 {
                let cand = (&hi.0 - &lo.0) / (&lo.1 - &hi.1);
                if cand < delta {
                    delta = cand;
                }
            }
        };
        for x in 0..self.value.len() {
            if let Some(l) = &self.lower[x] {
                tighten(q(l), q(&self.value[x]));
            }
            if let Some(u) = &self.upper[x] {
                tighten(q(&self.value[x]), q(u));
            }
        }
        self.value.iter().map(|v| v.r.to_rational() + v.d.to_rational() * &delta).collect()
    }
}

/// Decides the conjunction `t_j rel_j 0`.
pub fn solve(constraints: &[(LinTerm, Rel)]) -> SimplexResult {
    let mut index: BTreeMap<Var, usize> = BTreeMap::new();
    for (t, _) in constraints {
        for v in t.vars() {
            let next = index.len();
            index.entry(v.clone()).or_insert(next);
        }
    }
    let m = constraints.len();

    // A constraint without variables decides itself.
    for (j, (t, rel)) in constraints.iter().enumerate() {
        if t.is_constant() && !rel.holds(t.constant_part()) {
            let mut mu = vec![Rational::zero(); m];
            mu[j] = match rel {
                Rel::Eq if t.constant_part().is_negative() => -Rational::one(),
                _ => Rational::one(),
            };
            return SimplexResult::Unsat(mu);
        }
    }

    let outcome = match run::<Small>(constraints, &index) {
        Some(o) => o,
        None => run::<Rational>(constraints, &index).expect("big rationals do not overflow"),
    };
    match outcome {
        Err(mu) => SimplexResult::Unsat(mu),
        Ok(vals) => SimplexResult::Sat(index.into_iter().map(|(v, i)| (v, vals[i].clone())).collect()),
    }
}

fn run<N: Num>(constraints: &[(LinTerm, Rel)], index: &BTreeMap<Var, usize>) -> Option<Result<Vec<Rational>, Vec<Rational>>> {
    let n = index.len();
    let m = constraints.len();
    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    let mut lower = vec![None; total];
    let mut upper = vec![None; total];
    for (j, (t, rel)) in constraints.iter().enumerate() {
        let mut row = vec![N::zero_val(); total];
        for (v, c) in t.coeffs() {
            row[index[v]] = N::from_rational(c)?;
        }
        rows.push(row);
        let bound = N::from_rational(&-t.constant_part().clone())?;
        let s = n + j;
        match rel {
            Rel::Lt => upper[s] = Some(DRat { r: bound, d: N::one_val().neg()? }),
            Rel::Le => upper[s] = Some(DRat { r: bound, d: N::zero_val() }),
            Rel::Eq => {
                lower[s] = Some(DRat { r: bound.clone(), d: N::zero_val() });
                upper[s] = Some(DRat { r: bound, d: N::zero_val() });
            }
        }
    }
    let mut basic_row = vec![None; total];
    for j in 0..m {
        basic_row[n + j] = Some(j);
    }
    let mut tab = Tableau {
        n_orig: n,
        rows,
        row_basic: (n..total).collect(),
        basic_row,
        value: vec![DRat::zero(); total],
        lower,
        upper,
    };
    Some(match tab.check()? {
        Some(mu) => Err(mu),
        None => Ok(tab.concretize()),
    })
}

/// Checks that `mu` is a valid refutation of `constraints`.
pub fn certificate_is_valid(constraints: &[(LinTerm, Rel)], mu: &[Rational]) -> bool {
    if mu.len() != constraints.len() {
        return false;
    }
    let mut sum = LinTerm::zero();
    let mut strict = false;
    for ((t, rel), k) in constraints.iter().zip(mu) {
        if k.is_zero() {
            continue;
        }
        if *rel != Rel::Eq && k.is_negative() {
            return false;
        }
        if *rel == Rel::Lt {
            strict = true;
        }
        sum = sum.add(&t.scale(k));
    }
    sum.is_constant()
        && (sum.constant_part().is_positive() || (strict && sum.constant_part().is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::linear::rat;

    fn x() -> LinTerm {
        LinTerm::var(Var::new("x"))
    }
    fn y() -> LinTerm {
        LinTerm::var(Var::new("y"))
    }

    fn check_model(cs: &[(LinTerm, Rel)], m: &BTreeMap<Var, Rational>) {
        for (t, rel) in cs {
            assert!(rel.holds(&t.eval(&|v| m.get(v).cloned())), "{} {:?}", t, rel);
        }
    }

    #[test]
    fn feasible_strict_system() {
        // 0 < x < 1, y = 2x
        let cs = vec![
            (x().neg(), Rel::Lt),
            (x().sub(&LinTerm::int(1)), Rel::Lt),
            (y().sub(&x().scale(&rat(2))), Rel::Eq),
        ];
        match solve(&cs) {
            SimplexResult::Sat(m) => check_model(&cs, &m),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn strict_conflict_needs_strict_weight() {
        // x < 0, -x <= 0
        let cs = vec![(x(), Rel::Lt), (x().neg(), Rel::Le)];
        match solve(&cs) {
            SimplexResult::Unsat(mu) => assert!(certificate_is_valid(&cs, &mu)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn equality_chain_conflict() {
        // x = y + 1, y = 3, x <= 3
        let cs = vec![
            (x().sub(&y()).sub(&LinTerm::int(1)), Rel::Eq),
            (y().sub(&LinTerm::int(3)), Rel::Eq),
            (x().sub(&LinTerm::int(3)), Rel::Le),
        ];
        match solve(&cs) {
            SimplexResult::Unsat(mu) => assert!(certificate_is_valid(&cs, &mu)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn constant_constraint() {
        let cs = vec![(LinTerm::int(2), Rel::Eq)];
        match solve(&cs) {
            SimplexResult::Unsat(mu) => assert!(certificate_is_valid(&cs, &mu)),
            other => panic!("{:?}", other),
        }
    }
}
