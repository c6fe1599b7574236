//! Exact multivariate polynomials over the rationals.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::gdeg::{GDeg, GammaAssign};
use crate::var::{Var, VarOrder};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A power product. Exponents are positive; the empty product is `1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(SmallVec<[(Var, u32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial::var_pow(v, 1)
    }

    pub fn var_pow(v: Var, e: u32) -> Self {
        let mut m = Monomial::one();
        if e > 0 {
            m.0.push((v, e));
        }
        m
    }

    pub fn from_exponents(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut m = Monomial::one();
        for (v, e) in pairs {
            m = &m * &Monomial::var_pow(v, e);
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map_or(0, |&(_, e)| e)
    }

    pub fn factors(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    /// Graded lexicographic comparison with variables ranked by `order`.
    pub fn cmp_grlex(&self, other: &Monomial, order: &VarOrder) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let key = |m: &Monomial| {
                let mut k: Vec<((usize, &str), u32)> =
                    m.0.iter().map(|&(v, e)| ((order.rank(v), v.name()), e)).collect();
                k.sort_unstable();
                k
            };
            let (a, b) = (key(self), key(other));
            let mut i = 0;
            loop {
                match (a.get(i), b.get(i)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some(&(ra, ea)), Some(&(rb, eb))) => {
                        if ra != rb {
                            // the monomial mentioning the earlier variable is larger
                            return rb.cmp(&ra);
                        }
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                    }
                }
                i += 1;
            }
        })
    }

    pub fn fmt_with(&self, order: &VarOrder) -> String {
        if self.is_one() {
            return "1".to_string();
        }
        let mut factors: Vec<(Var, u32)> = self.0.to_vec();
        factors.sort_by_key(|&(v, _)| (order.rank(v), v.name()));
        factors
            .iter()
            .map(|&(v, e)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Mul for &Monomial {
    type Output = Monomial;

    fn mul(self, rhs: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&VarOrder::default()))
    }
}

/// A polynomial with exact rational coefficients. Zero coefficients are
/// never stored, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn one() -> Self {
        Polynomial::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Polynomial::term(Monomial::one(), c)
    }

    pub fn var(v: Var) -> Self {
        Polynomial::term(Monomial::var(v), Rational::one())
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c * m` in place.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.keys().flat_map(|m| m.vars()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, w: &Monomial) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m * w, k.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Simultaneous substitution: every bound variable is replaced by its
    /// image in the original polynomial.
    pub fn substitute(&self, binding: &HashMap<Var, Polynomial>) -> Polynomial {
        let subst = Substitution::new(binding);
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            for (m2, c2) in subst.apply_monomial(m).terms() {
                out.add_term(m2.clone(), c * c2);
            }
        }
        out
    }

    pub fn eval(&self, state: &BTreeMap<Var, Rational>) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.factors() {
                let x = state.get(&v).ok_or(Error::UnboundVariable(v))?;
                t *= x.pow(e as i32);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Terms sorted descending in graded lexicographic order.
    pub fn sorted_terms(&self, order: &VarOrder) -> Vec<(&Monomial, &Rational)> {
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|a, b| b.0.cmp_grlex(a.0, order));
        ts
    }

    pub fn leading_term(&self, order: &VarOrder) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().max_by(|a, b| a.0.cmp_grlex(b.0, order))
    }

    pub fn fmt_with(&self, order: &VarOrder) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.sorted_terms(order).into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if m.is_one() {
                out.push_str(&fmt_rational(&abs));
            } else if abs.is_one() {
                out.push_str(&m.fmt_with(order));
            } else {
                out.push_str(&fmt_rational(&abs));
                out.push('*');
                out.push_str(&m.fmt_with(order));
            }
        }
        out
    }

    /// Variable order used when no program context is available: by name.
    pub fn default_order(&self) -> VarOrder {
        let mut vs = self.vars();
        vs.sort_by_key(|v| v.name());
        VarOrder::new(vs)
    }

    /// Scales so the coefficients are coprime integers with a positive
    /// graded-lex leading coefficient.
    pub fn primitive(&self, order: &VarOrder) -> Result<Polynomial> {
        let (_, lead) = self.leading_term(order).ok_or(Error::ZeroPolynomial)?;
        let mut den = BigInt::one();
        let mut num = BigInt::zero();
        for c in self.terms.values() {
            den = den.lcm(c.denom());
            num = num.gcd(c.numer());
        }
        let mut factor = Rational::new(den, num);
        if lead.is_negative() {
            factor = -factor;
        }
        Ok(self.scale(&factor))
    }

    /// Splits into homogeneous components under `gamma`, keyed by g-degree.
    pub fn gh_decompose(&self, gamma: &GammaAssign) -> Result<BTreeMap<GDeg, Polynomial>> {
        let mut parts: BTreeMap<GDeg, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            let tau = gamma.gdeg_of_monomial(m)?;
            parts.entry(tau).or_default().add_term(m.clone(), c.clone());
        }
        Ok(parts)
    }
}

/// Substitution with memoized variable powers, shared between polynomial
/// and template substitution.
pub struct Substitution<'a> {
    binding: &'a HashMap<Var, Polynomial>,
    powers: RefCell<HashMap<(Var, u32), Polynomial>>,
}

impl<'a> Substitution<'a> {
    pub fn new(binding: &'a HashMap<Var, Polynomial>) -> Self {
        Substitution {
            binding,
            powers: RefCell::new(HashMap::new()),
        }
    }

    fn power(&self, v: Var, e: u32) -> Polynomial {
        if let Some(p) = self.powers.borrow().get(&(v, e)) {
            return p.clone();
        }
        let p = match self.binding.get(&v) {
            None => Polynomial::term(Monomial::var_pow(v, e), Rational::one()),
            Some(img) if e == 1 => img.clone(),
            Some(img) => &self.power(v, e - 1) * img,
        };
        self.powers.borrow_mut().insert((v, e), p.clone());
        p
    }

    pub fn apply_monomial(&self, m: &Monomial) -> Polynomial {
        let mut fixed = Monomial::one();
        let mut acc: Option<Polynomial> = None;
        for (v, e) in m.factors() {
            if self.binding.contains_key(&v) {
                let p = self.power(v, e);
                acc = Some(match acc {
                    None => p,
                    Some(a) => &a * &p,
                });
            } else {
                fixed = &fixed * &Monomial::var_pow(v, e);
            }
        }
        match acc {
            None => Polynomial::term(fixed, Rational::one()),
            Some(a) => a.mul_monomial(&fixed),
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1 * m2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&self.default_order()))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_poly;

    fn p(s: &str) -> Polynomial {
        parse_poly(s).unwrap()
    }

    fn v(s: &str) -> Var {
        Var::new(s).unwrap()
    }

    #[test]
    fn ring_examples() {
        assert!((&p("x") + &p("-x")).is_zero());
        assert_eq!(&p("x + 1") * &p("x - 1"), p("x^2 - 1"));
        assert_eq!(p("2*x + 4").scale(&ratio(1, 2)), p("x + 2"));
    }

    #[test]
    fn degree_examples() {
        assert_eq!(p("x^2*y + y").degree(), Some(3));
        assert_eq!(p("7").degree(), Some(0));
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn substitution_is_simultaneous() {
        let binding: HashMap<_, _> = [(v("x"), p("y")), (v("y"), p("x"))].into();
        assert_eq!(p("x + 2*y").substitute(&binding), p("y + 2*x"));
        let binding: HashMap<_, _> = [(v("t"), p("t + dt"))].into();
        assert_eq!(p("t").substitute(&binding), p("t + dt"));
    }

    #[test]
    fn freefall_p1_vanishes_on_initial_values() {
        let p1 = p("-g*t + g*t0 - v + v0 - x*rho + x0*rho");
        let binding: HashMap<_, _> = [
            (v("x"), p("x0")),
            (v("v"), p("v0")),
            (v("t"), p("t0")),
        ]
        .into();
        assert!(p1.substitute(&binding).is_zero());
    }

    #[test]
    fn eval_examples() {
        let state: BTreeMap<_, _> = [(v("x"), ratio(3, 2))].into();
        assert_eq!(p("x^2 + 1").eval(&state).unwrap(), ratio(13, 4));
        assert_eq!(Polynomial::zero().eval(&BTreeMap::new()).unwrap(), rat(0));
        assert_eq!(
            p("x + z").eval(&state),
            Err(Error::UnboundVariable(v("z")))
        );
    }

    #[test]
    fn canonical_printing() {
        let order = VarOrder::new([v("x"), v("y")]);
        assert_eq!(p("1 + 2*x").fmt_with(&order), "2*x + 1");
        assert_eq!(p("y^2 - x*y + 3/2").fmt_with(&order), "-x*y + y^2 + 3/2");
        let rev = VarOrder::new([v("y"), v("x")]);
        assert_eq!(p("y^2 - x*y + 3/2").fmt_with(&rev), "y^2 - y*x + 3/2");
    }

    #[test]
    fn primitive_part() {
        let order = VarOrder::new([v("x"), v("y")]);
        assert_eq!(p("1/2*x - 1/2*y").primitive(&order).unwrap(), p("x - y"));
        assert_eq!(p("-2*x + 4").primitive(&order).unwrap(), p("x - 2"));
        assert_eq!(Polynomial::zero().primitive(&order), Err(Error::ZeroPolynomial));
    }
}
