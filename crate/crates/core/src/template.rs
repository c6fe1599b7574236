//! Parametric polynomials: templates whose coefficients are affine forms
//! over unknown rational parameters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use crate::poly::{fmt_rational, Monomial, Polynomial, Rational, Substitution};
use crate::var::{Var, VarOrder};

/// A template parameter. Labels live in the [`ParamAlloc`] that issued it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub u32);

impl ParamId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// Issues fresh parameters for one synthesis session.
#[derive(Clone, Debug, Default)]
pub struct ParamAlloc {
    labels: Vec<String>,
}

impl ParamAlloc {
    pub fn new() -> Self {
        ParamAlloc::default()
    }

    pub fn fresh(&mut self, label: impl Into<String>) -> ParamId {
        self.labels.push(label.into());
        ParamId(self.labels.len() as u32 - 1)
    }

    pub fn label(&self, p: ParamId) -> &str {
        &self.labels[p.index()]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.labels.len() as u32).map(ParamId)
    }
}

/// `constant + sum_i coeff_i * param_i`
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct AffineForm {
    pub constant: Rational,
    coeffs: BTreeMap<ParamId, Rational>,
}

impl AffineForm {
    pub fn zero() -> Self {
        AffineForm::default()
    }

    pub fn constant(c: Rational) -> Self {
        AffineForm {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn param(p: ParamId) -> Self {
        AffineForm::scaled_param(p, Rational::one())
    }

    pub fn scaled_param(p: ParamId, c: Rational) -> Self {
        let mut f = AffineForm::zero();
        f.add_param(p, c);
        f
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (ParamId, &Rational)> {
        self.coeffs.iter().map(|(&p, c)| (p, c))
    }

    pub fn coeff(&self, p: ParamId) -> Rational {
        self.coeffs.get(&p).cloned().unwrap_or_default()
    }

    pub fn add_param(&mut self, p: ParamId, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&p) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.coeffs.remove(&p);
                }
            }
            None => {
                self.coeffs.insert(p, c);
            }
        }
    }

    /// `self += other * c`
    pub fn add_scaled(&mut self, other: &AffineForm, c: &Rational) {
        if c.is_zero() {
            return;
        }
        self.constant += &other.constant * c;
        for (&p, x) in &other.coeffs {
            self.add_param(p, x * c);
        }
    }

    pub fn scale(&self, c: &Rational) -> AffineForm {
        let mut out = AffineForm::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn eval(&self, v: &Valuation) -> Rational {
        let mut acc = self.constant.clone();
        for (&p, c) in &self.coeffs {
            acc += c * v.get(p);
        }
        acc
    }

    pub fn fmt_with(&self, alloc: &ParamAlloc) -> String {
        let mut parts = Vec::new();
        for (&p, c) in &self.coeffs {
            let label = alloc.label(p);
            parts.push(if c.is_one() {
                label.to_string()
            } else {
                format!("{}*{label}", fmt_rational(c))
            });
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(fmt_rational(&self.constant));
        }
        parts.join(" + ")
    }
}

impl fmt::Debug for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, c) in &self.coeffs {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{}*{p:?}", fmt_rational(c))?;
        }
        if first || !self.constant.is_zero() {
            if !first {
                f.write_str(" + ")?;
            }
            f.write_str(&fmt_rational(&self.constant))?;
        }
        Ok(())
    }
}

/// Assignment of rationals to parameters; unlisted parameters are 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation(BTreeMap<ParamId, Rational>);

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn get(&self, p: ParamId) -> Rational {
        self.0.get(&p).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, p: ParamId, c: Rational) {
        if c.is_zero() {
            self.0.remove(&p);
        } else {
            self.0.insert(p, c);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Rational)> {
        self.0.iter().map(|(&p, c)| (p, c))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(ParamId, Rational)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (ParamId, Rational)>>(iter: I) -> Self {
        let mut v = Valuation::new();
        for (p, c) in iter {
            v.set(p, c);
        }
        v
    }
}

/// Polynomial with affine-form coefficients. Every operation here keeps
/// coefficients affine in the parameters.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Template {
    terms: BTreeMap<Monomial, AffineForm>,
}

impl Template {
    pub fn zero() -> Self {
        Template::default()
    }

    /// `sum_i p_i * w_i`
    pub fn from_params(terms: impl IntoIterator<Item = (Monomial, ParamId)>) -> Self {
        let mut t = Template::zero();
        for (m, p) in terms {
            t.add_term(m, &AffineForm::param(p), &Rational::one());
        }
        t
    }

    pub fn from_poly(p: &Polynomial) -> Self {
        Template {
            terms: p
                .terms()
                .map(|(m, c)| (m.clone(), AffineForm::constant(c.clone())))
                .collect(),
        }
    }

    /// `self += f * c * w`
    pub fn add_term(&mut self, w: Monomial, f: &AffineForm, c: &Rational) {
        if c.is_zero() || f.is_zero() {
            return;
        }
        let entry = self.terms.entry(w.clone()).or_default();
        entry.add_scaled(f, c);
        if entry.is_zero() {
            self.terms.remove(&w);
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

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &AffineForm)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &Monomial) -> AffineForm {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn params(&self) -> BTreeSet<ParamId> {
        self.terms
            .values()
            .flat_map(|f| f.coeffs().map(|(p, _)| p))
            .collect()
    }

    pub fn add(&self, other: &Template) -> Template {
        let mut out = self.clone();
        for (w, f) in &other.terms {
            out.add_term(w.clone(), f, &Rational::one());
        }
        out
    }

    pub fn sub(&self, other: &Template) -> Template {
        let mut out = self.clone();
        for (w, f) in &other.terms {
            out.add_term(w.clone(), f, &-Rational::one());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Template {
        let mut out = Template::zero();
        for (w, f) in &self.terms {
            out.add_term(w.clone(), f, c);
        }
        out
    }

    /// Product with a concrete polynomial.
    pub fn mul_poly(&self, p: &Polynomial) -> Template {
        let mut out = Template::zero();
        for (w, f) in &self.terms {
            for (w2, c) in p.terms() {
                out.add_term(w * w2, f, c);
            }
        }
        out
    }

    /// Simultaneous substitution of variables by concrete polynomials.
    pub fn substitute(&self, binding: &HashMap<Var, Polynomial>) -> Template {
        let subst = Substitution::new(binding);
        let mut out = Template::zero();
        for (w, f) in &self.terms {
            for (w2, c) in subst.apply_monomial(w).terms() {
                out.add_term(w2.clone(), f, c);
            }
        }
        out
    }

    pub fn instantiate(&self, v: &Valuation) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|(w, f)| (w.clone(), f.eval(v))))
    }

    /// Substitutes the given parameters by affine forms in other
    /// parameters (used to map between sessions).
    pub fn rename_params(&self, f: &impl Fn(ParamId) -> AffineForm) -> Template {
        let mut out = Template::zero();
        for (w, form) in &self.terms {
            let mut g = AffineForm::constant(form.constant.clone());
            for (p, c) in form.coeffs() {
                g.add_scaled(&f(p), c);
            }
            out.add_term(w.clone(), &g, &Rational::one());
        }
        out
    }

    pub fn fmt_with(&self, order: &VarOrder, alloc: &ParamAlloc) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut ws: Vec<&Monomial> = self.terms.keys().collect();
        ws.sort_by(|a, b| b.cmp_grlex(a, order));
        ws.into_iter()
            .map(|w| format!("({})*{}", self.terms[w].fmt_with(alloc), w.fmt_with(order)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Debug for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}
