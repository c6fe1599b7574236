//! Generalized degrees, the typing judgement, constraint generation and
//! unification over the free Abelian group of degrees.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_integer::Integer;

use crate::ast::{lift_literals, LiteralPolicy, LiteralTable, Program, Stmt};
use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};
use crate::var::{Var, VarOrder};

/// A generator of the degree group: a named base degree, or an unknown
/// that only exists while inference runs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum GSym {
    Base(String),
    Unknown(u32),
}

impl Ord for GSym {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (GSym::Base(a), GSym::Base(b)) => (a.len(), a).cmp(&(b.len(), b)),
            (GSym::Base(_), GSym::Unknown(_)) => Ordering::Less,
            (GSym::Unknown(_), GSym::Base(_)) => Ordering::Greater,
            (GSym::Unknown(a), GSym::Unknown(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for GSym {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GSym {
    pub fn base(name: &str) -> GSym {
        GSym::Base(name.to_string())
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, GSym::Unknown(_))
    }
}

impl fmt::Display for GSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GSym::Base(s) => f.write_str(s),
            GSym::Unknown(i) => write!(f, "?{i}"),
        }
    }
}

impl fmt::Debug for GSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Element of the free Abelian group: a finite product of symbols with
/// nonzero integer exponents. The empty product is the identity `1`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GDeg(BTreeMap<GSym, i64>);

impl GDeg {
    pub fn one() -> GDeg {
        GDeg::default()
    }

    pub fn sym(s: GSym) -> GDeg {
        GDeg::sym_pow(s, 1)
    }

    pub fn sym_pow(s: GSym, e: i64) -> GDeg {
        let mut d = GDeg::one();
        d.add_exp(s, e);
        d
    }

    pub fn base(name: &str) -> GDeg {
        GDeg::sym(GSym::base(name))
    }

    pub fn unknown(id: u32) -> GDeg {
        GDeg::sym(GSym::Unknown(id))
    }

    pub fn from_exps(exps: impl IntoIterator<Item = (GSym, i64)>) -> GDeg {
        let mut d = GDeg::one();
        for (s, e) in exps {
            d.add_exp(s, e);
        }
        d
    }

    fn add_exp(&mut self, s: GSym, e: i64) {
        if e == 0 {
            return;
        }
        let entry = self.0.entry(s.clone()).or_insert(0);
        *entry += e;
        if *entry == 0 {
            self.0.remove(&s);
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, s: &GSym) -> i64 {
        self.0.get(s).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GSym, i64)> {
        self.0.iter().map(|(s, &e)| (s, e))
    }

    pub fn syms(&self) -> impl Iterator<Item = &GSym> {
        self.0.keys()
    }

    pub fn has_unknowns(&self) -> bool {
        self.0.keys().any(GSym::is_unknown)
    }

    pub fn mul(&self, other: &GDeg) -> GDeg {
        let mut d = self.clone();
        for (s, e) in other.iter() {
            d.add_exp(s.clone(), e);
        }
        d
    }

    pub fn inv(&self) -> GDeg {
        GDeg(self.0.iter().map(|(s, &e)| (s.clone(), -e)).collect())
    }

    pub fn pow(&self, n: i64) -> GDeg {
        if n == 0 {
            return GDeg::one();
        }
        GDeg(self.0.iter().map(|(s, &e)| (s.clone(), e * n)).collect())
    }

    /// `self * other^-1`
    pub fn div(&self, other: &GDeg) -> GDeg {
        self.mul(&other.inv())
    }

    fn rename(&self, f: &impl Fn(&GSym) -> GDeg) -> GDeg {
        let mut out = GDeg::one();
        for (s, e) in self.iter() {
            out = out.mul(&f(s).pow(e));
        }
        out
    }
}

impl std::str::FromStr for GDeg {
    type Err = Error;

    /// Parses products of named bases such as `L * T^-2`, or `1`.
    fn from_str(text: &str) -> Result<GDeg> {
        let text = text.trim();
        if text == "1" {
            return Ok(GDeg::one());
        }
        let mut d = GDeg::one();
        for factor in text.split('*') {
            let factor = factor.trim();
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => (
                    n.trim(),
                    e.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Input(format!("bad exponent in g-degree `{text}`")))?,
                ),
                None => (factor, 1),
            };
            if !crate::var::is_identifier(name) {
                return Err(Error::Input(format!("bad base name `{name}` in g-degree `{text}`")));
            }
            d = d.mul(&GDeg::sym_pow(GSym::base(name), exp));
        }
        Ok(d)
    }
}

impl fmt::Display for GDeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        for (i, (s, e)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            if e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for GDeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Result of asking for the g-degree of a polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolyGDeg {
    Gh(GDeg),
    /// The zero polynomial, which is GH of every degree.
    Any,
    NotGh {
        first: (Monomial, GDeg),
        second: (Monomial, GDeg),
    },
}

impl PolyGDeg {
    /// The common degree, treating zero as compatible with anything.
    pub fn degree(&self) -> Option<&GDeg> {
        match self {
            PolyGDeg::Gh(d) => Some(d),
            _ => None,
        }
    }
}

/// Finite map from variables to g-degrees, remembering the variables'
/// declaration order for printing.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct GammaAssign {
    order: VarOrder,
    map: HashMap<Var, GDeg>,
}

impl GammaAssign {
    pub fn new() -> Self {
        GammaAssign::default()
    }

    pub fn insert(&mut self, v: Var, d: GDeg) {
        self.order.push(v);
        self.map.insert(v, d);
    }

    pub fn get(&self, v: Var) -> Option<&GDeg> {
        self.map.get(&v)
    }

    pub fn degree(&self, v: Var) -> Result<&GDeg> {
        self.map.get(&v).ok_or(Error::UnboundVariable(v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn order(&self) -> &VarOrder {
        &self.order
    }

    /// Entries in insertion (declaration) order.
    pub fn iter(&self) -> impl Iterator<Item = (Var, &GDeg)> {
        self.order.vars().iter().map(move |&v| (v, &self.map[&v]))
    }

    pub fn gdeg_of_monomial(&self, w: &Monomial) -> Result<GDeg> {
        let mut d = GDeg::one();
        for (v, e) in w.factors() {
            d = d.mul(&self.degree(v)?.pow(e as i64));
        }
        Ok(d)
    }

    pub fn gdeg_of_poly(&self, p: &Polynomial) -> Result<PolyGDeg> {
        let mut first: Option<(Monomial, GDeg)> = None;
        for w in p.monomials() {
            let d = self.gdeg_of_monomial(w)?;
            match &first {
                None => first = Some((w.clone(), d)),
                Some((_, d0)) if *d0 == d => {}
                Some(f) => {
                    return Ok(PolyGDeg::NotGh {
                        first: f.clone(),
                        second: (w.clone(), d),
                    })
                }
            }
        }
        Ok(match first {
            None => PolyGDeg::Any,
            Some((_, d)) => PolyGDeg::Gh(d),
        })
    }

    /// Returns the common degree of `p`, failing with `NotGh` otherwise.
    /// `None` for the zero polynomial.
    pub fn require_gh(&self, p: &Polynomial) -> Result<Option<GDeg>> {
        match self.gdeg_of_poly(p)? {
            PolyGDeg::Gh(d) => Ok(Some(d)),
            PolyGDeg::Any => Ok(None),
            PolyGDeg::NotGh { first, second } => Err(Error::NotGh(format!(
                "{} has g-degree {} but {} has g-degree {}",
                first.0.fmt_with(&self.order),
                first.1,
                second.0.fmt_with(&self.order),
                second.1
            ))),
        }
    }

    /// The typing judgement: every polynomial of `c` is GH and every
    /// assignment preserves the target's degree.
    pub fn check(&self, c: &Stmt) -> Result<()> {
        match c {
            Stmt::Skip => Ok(()),
            Stmt::Assign { targets, rhs } => {
                for (x, p) in targets.iter().zip(rhs) {
                    let dx = self.degree(*x)?;
                    if let Some(dp) = self.require_gh(&p.poly)? {
                        if *dx != dp {
                            return Err(Error::NotGh(format!(
                                "{x} has g-degree {dx} but is assigned {} of g-degree {dp}",
                                p.poly.fmt_with(&self.order)
                            )));
                        }
                    }
                }
                Ok(())
            }
            Stmt::Seq(a, b) => {
                self.check(a)?;
                self.check(b)
            }
            Stmt::If {
                guard,
                then_branch,
                else_branch,
            } => {
                self.require_gh(&guard.poly)?;
                self.check(then_branch)?;
                self.check(else_branch)
            }
            Stmt::While { guard, body, .. } => {
                self.require_gh(&guard.poly)?;
                self.check(body)
            }
        }
    }

    /// Base symbols in first-use order (declaration order of variables,
    /// then symbol order within a degree).
    pub fn bases(&self) -> Vec<GSym> {
        let mut out: Vec<GSym> = Vec::new();
        for (_, d) in self.iter() {
            for s in d.syms() {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    /// Exponent matrix: one row per variable (declaration order), one
    /// column per base in first-use order.
    pub fn exponent_matrix(&self) -> Vec<Vec<i64>> {
        let bases = self.bases();
        self.iter()
            .map(|(_, d)| bases.iter().map(|b| d.exponent(b)).collect())
            .collect()
    }

    pub fn map_degrees(&self, f: impl Fn(&GDeg) -> GDeg) -> GammaAssign {
        let mut out = GammaAssign::new();
        for (v, d) in self.iter() {
            out.insert(v, f(d));
        }
        out
    }
}

impl fmt::Display for GammaAssign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, d) in self.iter() {
            writeln!(f, "{v} : {d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GammaAssign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

/// A constraint `lhs = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GConstraint {
    pub lhs: GDeg,
}

impl GConstraint {
    /// The normalized form of `a = b`.
    pub fn equate(a: &GDeg, b: &GDeg) -> GConstraint {
        GConstraint { lhs: a.div(b) }
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs.is_one()
    }
}

impl fmt::Display for GConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 1", self.lhs)
    }
}

/// Idempotent substitution of unknowns.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GSubst {
    map: BTreeMap<u32, GDeg>,
}

impl GSubst {
    pub fn apply(&self, d: &GDeg) -> GDeg {
        d.rename(&|s| match s {
            GSym::Unknown(i) => self.map.get(i).cloned().unwrap_or_else(|| GDeg::sym(s.clone())),
            _ => GDeg::sym(s.clone()),
        })
    }

    pub fn get(&self, id: u32) -> Option<&GDeg> {
        self.map.get(&id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &GDeg)> {
        self.map.iter().map(|(&k, v)| (k, v))
    }

    fn bind(&mut self, id: u32, image: GDeg) {
        let single = GSubst {
            map: BTreeMap::from([(id, image.clone())]),
        };
        for v in self.map.values_mut() {
            *v = single.apply(v);
        }
        self.map.insert(id, image);
    }
}

/// Constraints whose solutions are exactly the degree assignments that
/// type `c`, given a template `gamma` mapping each variable to an unknown.
pub fn pt_constraints(gamma: &GammaAssign, c: &Stmt) -> Result<Vec<GConstraint>> {
    let mut out = Vec::new();
    pt(gamma, c, &mut out)?;
    Ok(out)
}

/// Degree of a polynomial under `gamma`, emitting the constraints that
/// make all its monomials agree. `None` for the zero polynomial.
fn poly_degree(gamma: &GammaAssign, p: &Polynomial, out: &mut Vec<GConstraint>) -> Result<Option<GDeg>> {
    let mut first: Option<GDeg> = None;
    for (w, _) in p.sorted_terms(gamma.order()) {
        let d = gamma.gdeg_of_monomial(w)?;
        match &first {
            None => first = Some(d),
            Some(d0) => out.push(GConstraint::equate(&d, d0)),
        }
    }
    Ok(first)
}

fn pt(gamma: &GammaAssign, c: &Stmt, out: &mut Vec<GConstraint>) -> Result<()> {
    match c {
        Stmt::Skip => {}
        Stmt::Assign { targets, rhs } => {
            for (x, p) in targets.iter().zip(rhs) {
                let mut inner = Vec::new();
                if let Some(d) = poly_degree(gamma, &p.poly, &mut inner)? {
                    out.push(GConstraint::equate(gamma.degree(*x)?, &d));
                }
                out.extend(inner);
            }
        }
        Stmt::Seq(a, b) => {
            pt(gamma, a, out)?;
            pt(gamma, b, out)?;
        }
        Stmt::If {
            guard,
            then_branch,
            else_branch,
        } => {
            poly_degree(gamma, &guard.poly, out)?;
            pt(gamma, then_branch, out)?;
            pt(gamma, else_branch, out)?;
        }
        Stmt::While { guard, body, .. } => {
            poly_degree(gamma, &guard.poly, out)?;
            pt(gamma, body, out)?;
        }
    }
    Ok(())
}

/// Most general unifier of `constraints` (each read as `lhs = 1`).
///
/// Constraints are processed in order. In each, the unknown with the
/// smallest absolute exponent (lowest id on ties) is eliminated when its
/// exponent divides all others; otherwise a fresh unknown absorbs the
/// quotients and the remainder constraint is processed next.
pub fn unify(constraints: &[GConstraint]) -> Result<GSubst> {
    let mut unknowns: Vec<u32> = Vec::new();
    for c in constraints {
        for s in c.lhs.syms() {
            if let GSym::Unknown(i) = s {
                if !unknowns.contains(i) {
                    unknowns.push(*i);
                }
            }
        }
    }
    let mut next = unknowns.iter().max().map_or(0, |m| m + 1);
    let limit = 10 * (unknowns.len() + constraints.len());
    let mut work: VecDeque<GDeg> = constraints.iter().map(|c| c.lhs.clone()).collect();
    let mut subst = GSubst::default();
    let mut steps = 0usize;
    while let Some(c) = work.pop_front() {
        steps += 1;
        if steps > limit {
            return Err(Error::Internal(format!(
                "unification did not finish within {limit} steps"
            )));
        }
        let c = subst.apply(&c);
        if c.is_one() {
            continue;
        }
        let pivot = c
            .iter()
            .filter_map(|(s, e)| match s {
                GSym::Unknown(i) => Some((*i, e)),
                _ => None,
            })
            .min_by_key(|&(i, e)| (e.abs(), i));
        let Some((alpha, k)) = pivot else {
            return Err(Error::Unsatisfiable(c.to_string()));
        };
        let alpha_sym = GSym::Unknown(alpha);
        let others: Vec<(GSym, i64)> = c
            .iter()
            .filter(|(s, _)| **s != alpha_sym)
            .map(|(s, e)| (s.clone(), e))
            .collect();
        if others.iter().all(|(_, n)| n % k == 0) {
            let image = GDeg::from_exps(others.iter().map(|(s, n)| (s.clone(), -n / k)));
            subst.bind(alpha, image);
        } else {
            let omega = GSym::Unknown(next);
            next += 1;
            let mut image = GDeg::sym(omega.clone());
            let mut rest = GDeg::sym_pow(omega, k);
            for (s, n) in &others {
                image = image.mul(&GDeg::sym_pow(s.clone(), -n.div_floor(&k)));
                rest = rest.mul(&GDeg::sym_pow(s.clone(), n.mod_floor(&k)));
            }
            subst.bind(alpha, image);
            work.push_front(rest);
        }
    }
    Ok(subst)
}

/// Output of degree inference.
#[derive(Clone, Debug)]
pub struct GammaInference {
    /// The program after literal lifting (the input itself under
    /// `LiteralPolicy::None`).
    pub program: Program,
    pub gamma: GammaAssign,
    pub literals: LiteralTable,
}

/// Infers the most general degree assignment for `p`.
pub fn infer_gamma(p: &Program, policy: LiteralPolicy) -> Result<GammaInference> {
    infer_gamma_pinned(p, policy, &[])
}

/// As [`infer_gamma`], with some variables' degrees fixed in advance in
/// terms of user-named bases.
pub fn infer_gamma_pinned(p: &Program, policy: LiteralPolicy, pins: &[(Var, GDeg)]) -> Result<GammaInference> {
    let (lifted, literals) = lift_literals(p, policy);
    let gamma = infer_lifted(&lifted, pins)?;
    if policy != LiteralPolicy::Coalesced || literals.is_empty() {
        return Ok(GammaInference {
            program: lifted,
            gamma,
            literals,
        });
    }
    let (program, literals) = coalesce(p, &lifted, &literals, &gamma);
    let gamma = infer_lifted(&program, pins)?;
    Ok(GammaInference {
        program,
        gamma,
        literals,
    })
}

fn infer_lifted(p: &Program, pins: &[(Var, GDeg)]) -> Result<GammaAssign> {
    let mut template = GammaAssign::new();
    for (i, &v) in p.vars().iter().enumerate() {
        template.insert(v, GDeg::unknown(i as u32));
    }
    let mut constraints = Vec::new();
    let mut reserved: Vec<String> = Vec::new();
    for (v, d) in pins {
        if d.has_unknowns() {
            return Err(Error::Input(format!("pinned degree of {v} must use named bases only")));
        }
        for s in d.syms() {
            if let GSym::Base(name) = s {
                reserved.push(name.clone());
            }
        }
        if let Some(dv) = template.get(*v) {
            constraints.push(GConstraint::equate(dv, d));
        }
    }
    constraints.extend(pt_constraints(&template, &p.body)?);
    let subst = match unify(&constraints) {
        Ok(s) => s,
        Err(Error::Unsatisfiable(c)) if pins.is_empty() => {
            return Err(Error::Internal(format!("unsatisfiable degree constraint {c} = 1")))
        }
        Err(e) => return Err(e),
    };
    let solved = template.map_degrees(|d| subst.apply(d));

    // Surviving unknowns become bases, numbered by first use and oriented
    // so that their first occurrence has a positive exponent.
    let mut fresh: Vec<(u32, i64)> = Vec::new();
    for (_, d) in solved.iter() {
        for (s, e) in d.iter() {
            if let GSym::Unknown(i) = s {
                if !fresh.iter().any(|(j, _)| j == i) {
                    fresh.push((*i, e.signum()));
                }
            }
        }
    }
    let mut names: HashMap<u32, (String, i64)> = HashMap::new();
    let mut counter = 0usize;
    for (i, sign) in fresh {
        let name = loop {
            let candidate = format!("B{counter}");
            counter += 1;
            if !reserved.contains(&candidate) {
                break candidate;
            }
        };
        names.insert(i, (name, sign));
    }
    Ok(solved.map_degrees(|d| {
        d.rename(&|s| match s {
            GSym::Unknown(i) => {
                let (name, sign) = &names[i];
                GDeg::sym_pow(GSym::Base(name.clone()), *sign)
            }
            b => GDeg::sym(b.clone()),
        })
    }))
}

/// Merges lifted literals that carry the same value and the same degree.
/// Returns the rewritten lifted program (fresh names renumbered) and the
/// matching literal table.
fn coalesce(original: &Program, lifted: &Program, table: &LiteralTable, gamma: &GammaAssign) -> (Program, LiteralTable) {
    let mut reps: Vec<(Var, crate::poly::Rational, GDeg)> = Vec::new();
    let mut rep_of: HashMap<Var, usize> = HashMap::new();
    for (v, value) in table.bindings() {
        let d = gamma.get(v).cloned().unwrap_or_default();
        let idx = match reps.iter().position(|(_, c, e)| *c == value && *e == d) {
            Some(i) => i,
            None => {
                reps.push((v, value, d));
                reps.len() - 1
            }
        };
        rep_of.insert(v, idx);
    }
    let names = crate::ast::fresh_names(original, reps.len());
    let rename: HashMap<Var, Polynomial> = rep_of
        .iter()
        .map(|(&v, &i)| (v, Polynomial::var(names[i])))
        .collect();
    let body = lifted.body.map_exprs(&mut |e| {
        crate::ast::PolyExpr::new(e.expr.map_vars(&mut |v| rep_of.get(&v).map(|&i| names[i])))
    });
    debug_assert!(lifted
        .body
        .polys()
        .iter()
        .zip(body.polys())
        .all(|(a, b)| a.poly.substitute(&rename) == b.poly));
    let mut vars = VarOrder::new(original.vars().iter().copied());
    for &n in &names {
        vars.push(n);
    }
    let entries = table
        .entries
        .iter()
        .map(|e| crate::ast::LiteralEntry {
            var: names[rep_of[&e.var]],
            value: e.value.clone(),
            loc: e.loc,
        })
        .collect();
    (Program { body, vars }, LiteralTable { entries })
}
