//! Reduction of ideal-equality constraints to exact linear systems by
//! matching, and selection of a nontrivial invariant valuation.
//!
//! A constraint `<G == G'>` is discharged by a matching that maps every
//! element `h` of `G'` either to `m * g` for some `g` in `G` and some
//! concrete multiplier `m`, or to zero, with every `g` hit by some `h`
//! with `m = 1`. Each choice contributes coefficient equations that are
//! linear in the parameters.

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::gdeg::GammaAssign;
use crate::linalg::{Echelon, Row};
use crate::poly::{Polynomial, Rational};
use crate::template::{ParamId, Template, Valuation};
use crate::var::VarOrder;
use crate::wp::{template_gdeg, EqConstraint};

pub const DEFAULT_CAP: usize = 6;

/// One linear equation `sum coeffs = constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEq {
    pub coeffs: Vec<(ParamId, Rational)>,
    pub constant: Rational,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearSystem {
    pub rows: Vec<LinearEq>,
}

/// One equation per monomial of `t`: its coefficient must vanish.
pub fn zero_equations(t: &Template) -> Vec<LinearEq> {
    t.terms()
        .map(|(_, f)| LinearEq {
            coeffs: f.coeffs().map(|(p, c)| (p, c.clone())).collect(),
            constant: -f.constant.clone(),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchOption {
    /// Equal to `mults[m] * lhs[g]`.
    EqualTo { g: usize, m: usize },
    Zero,
}

/// A choice of option for each right-hand element of one constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching(pub Vec<MatchOption>);

impl Matching {
    /// Every left-hand element is hit with the unit multiplier (index 0).
    pub fn is_surjective(&self, lhs_len: usize) -> bool {
        (0..lhs_len).all(|g| self.0.contains(&MatchOption::EqualTo { g, m: 0 }))
    }
}

/// Multiplier set `{1} ∪ guards ∪ extra`, deduplicated, 1 first.
pub fn multiplier_set(guards: &[Polynomial], extra: &[Polynomial]) -> Vec<Polynomial> {
    let mut out = vec![Polynomial::one()];
    for p in guards.iter().chain(extra) {
        if !p.is_zero() && !out.contains(p) {
            out.push(p.clone());
        }
    }
    out
}

fn check_cap(eq: &EqConstraint, cap: usize) -> Result<()> {
    if eq.lhs.len() > cap || eq.rhs.len() > cap {
        return Err(Error::CapExceeded {
            lhs: eq.lhs.len(),
            rhs: eq.rhs.len(),
            cap,
        });
    }
    Ok(())
}

/// Options for each right-hand element, in enumeration order. With
/// `gamma`, options whose g-degrees cannot agree are dropped.
fn element_options(eq: &EqConstraint, mults: &[Polynomial], gamma: Option<&GammaAssign>) -> Result<Vec<Vec<MatchOption>>> {
    let mut out = Vec::with_capacity(eq.rhs.len());
    for h in &eq.rhs {
        let dh = match gamma {
            Some(g) => template_gdeg(g, h)?,
            None => None,
        };
        let mut opts = Vec::new();
        for (gi, g) in eq.lhs.iter().enumerate() {
            for (mi, m) in mults.iter().enumerate() {
                if let (Some(gamma), Some(dh)) = (gamma, &dh) {
                    let dg = template_gdeg(gamma, g)?;
                    let dm = gamma.require_gh(m)?;
                    if let (Some(dg), Some(dm)) = (dg, dm) {
                        if dg.mul(&dm) != *dh {
                            continue;
                        }
                    }
                }
                opts.push(MatchOption::EqualTo { g: gi, m: mi });
            }
        }
        opts.push(MatchOption::Zero);
        out.push(opts);
    }
    Ok(out)
}

/// All surjective matchings of `eq`, in lexicographic order over
/// (element index, option index).
pub fn matchings(
    eq: &EqConstraint,
    mults: &[Polynomial],
    gamma: Option<&GammaAssign>,
    cap: usize,
) -> Result<impl Iterator<Item = Matching>> {
    check_cap(eq, cap)?;
    let opts = element_options(eq, mults, gamma)?;
    let lhs_len = eq.lhs.len();
    let total: usize = opts.iter().map(Vec::len).product();
    Ok((0..total).filter_map(move |mut k| {
        let mut choice = vec![MatchOption::Zero; opts.len()];
        for i in (0..opts.len()).rev() {
            let n = opts[i].len();
            choice[i] = opts[i][k % n];
            k /= n;
        }
        let m = Matching(choice);
        m.is_surjective(lhs_len).then_some(m)
    }))
}

/// Equations imposed by one matched pair.
pub fn option_equations(eq: &EqConstraint, h: usize, opt: MatchOption, mults: &[Polynomial]) -> Vec<LinearEq> {
    match opt {
        MatchOption::Zero => zero_equations(&eq.rhs[h]),
        MatchOption::EqualTo { g, m } => zero_equations(&eq.rhs[h].sub(&eq.lhs[g].mul_poly(&mults[m]))),
    }
}

/// Configuration of one solve.
#[derive(Clone, Debug)]
pub struct SolveOptions<'a> {
    pub mults: Vec<Polynomial>,
    pub gamma: Option<&'a GammaAssign>,
    pub cap: usize,
}

/// Outcome of a successful solve.
#[derive(Clone, Debug)]
pub struct Solution {
    /// The first nullspace basis vector that is nonzero on the target
    /// parameters.
    pub valuation: Valuation,
    /// Every nullspace basis vector of the successful system, in free
    /// column order.
    pub basis: Vec<Valuation>,
    pub matchings: Vec<Matching>,
    /// Complete matchings whose linear system was examined.
    pub matchings_tried: usize,
    pub unknowns: usize,
    pub rank: usize,
}

/// Statistics of a failed solve.
#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub matchings_tried: usize,
}

fn to_row(e: &LinearEq) -> Result<Row> {
    if !e.constant.is_zero() {
        return Err(Error::Internal("inhomogeneous parameter equation".into()));
    }
    Ok(Row::from_rationals(e.coeffs.iter().map(|(p, c)| (p.0, c.clone()))))
}

struct Search<'s> {
    constraints: &'s [EqConstraint],
    opts: Vec<Vec<Vec<MatchOption>>>,
    /// (constraint, element) in visiting order.
    slots: Vec<(usize, usize)>,
    mults: &'s [Polynomial],
    mask: Vec<bool>,
    cache: HashMap<(usize, usize, MatchOption), Vec<Row>>,
    tried: usize,
}

impl Search<'_> {
    fn rows(&mut self, ci: usize, hi: usize, opt: MatchOption) -> Result<&Vec<Row>> {
        if !self.cache.contains_key(&(ci, hi, opt)) {
            let rows = option_equations(&self.constraints[ci], hi, opt, self.mults)
                .iter()
                .map(to_row)
                .collect::<Result<Vec<_>>>()?;
            self.cache.insert((ci, hi, opt), rows);
        }
        Ok(&self.cache[&(ci, hi, opt)])
    }

    fn dfs(&mut self, slot: usize, sys: &Echelon, chosen: &mut Vec<MatchOption>) -> Result<Option<Echelon>> {
        if slot == self.slots.len() {
            self.tried += 1;
            return Ok(Some(sys.clone()));
        }
        let (ci, hi) = self.slots[slot];
        let eq = &self.constraints[ci];
        let remaining_in_constraint = eq.rhs.len() - hi - 1;
        for k in 0..self.opts[ci][hi].len() {
            let opt = self.opts[ci][hi][k];
            chosen.push(opt);
            let start = chosen.len() - hi - 1;
            let uncovered = (0..eq.lhs.len())
                .filter(|&g| !chosen[start..].contains(&MatchOption::EqualTo { g, m: 0 }))
                .count();
            if uncovered <= remaining_in_constraint {
                let mut next = sys.clone();
                let rows = self.rows(ci, hi, opt)?.clone();
                for r in &rows {
                    next.add_row(r);
                }
                if next.has_nonzero_on(&self.mask) {
                    if let Some(found) = self.dfs(slot + 1, &next, chosen)? {
                        return Ok(Some(found));
                    }
                }
            }
            chosen.pop();
        }
        Ok(None)
    }
}

fn to_valuation(v: &[Rational]) -> Valuation {
    v.iter()
        .enumerate()
        .map(|(i, x)| (ParamId(i as u32), x.clone()))
        .collect()
}

/// Searches matchings depth-first and returns the first one whose linear
/// system admits a solution that is nonzero on `targets`.
///
/// `nparams` bounds the parameter indices used anywhere in the session.
pub fn solve(
    nparams: usize,
    final_goal: &[Template],
    constraints: &[EqConstraint],
    targets: &[ParamId],
    opts: &SolveOptions<'_>,
) -> Result<Solution, (Error, SolveStats)> {
    let fail = |e: Error| (e, SolveStats::default());
    for eq in constraints {
        check_cap(eq, opts.cap).map_err(fail)?;
    }
    let mut root = Echelon::new(nparams);
    for t in final_goal {
        for e in zero_equations(t) {
            root.add_row(&to_row(&e).map_err(fail)?);
        }
    }
    let mut mask = vec![false; nparams];
    for p in targets {
        mask[p.index()] = true;
    }
    let element_opts = constraints
        .iter()
        .map(|eq| element_options(eq, &opts.mults, opts.gamma))
        .collect::<Result<Vec<_>>>()
        .map_err(fail)?;
    let slots: Vec<(usize, usize)> = constraints
        .iter()
        .enumerate()
        .flat_map(|(ci, eq)| (0..eq.rhs.len()).map(move |hi| (ci, hi)))
        .collect();
    // A constraint with an empty right-hand side can only be matched when
    // its left-hand side is empty too.
    if constraints.iter().any(|eq| eq.rhs.is_empty() && !eq.lhs.is_empty()) {
        return Err((Error::NoSolution, SolveStats::default()));
    }
    if !root.has_nonzero_on(&mask) {
        return Err((Error::NoSolution, SolveStats::default()));
    }
    let mut search = Search {
        constraints,
        opts: element_opts,
        slots,
        mults: &opts.mults,
        mask,
        cache: HashMap::new(),
        tried: 0,
    };
    let mut chosen = Vec::new();
    let found = search.dfs(0, &root, &mut chosen).map_err(fail)?;
    let stats = SolveStats {
        matchings_tried: search.tried,
    };
    let Some(sys) = found else {
        return Err((Error::NoSolution, stats));
    };
    let null = sys.nullspace();
    let good = null
        .iter()
        .find(|v| targets.iter().any(|p| !v[p.index()].is_zero()))
        .expect("pruning guarantees a target-nonzero vector");
    let mut matchings = Vec::new();
    let mut it = chosen.into_iter();
    for eq in constraints {
        matchings.push(Matching(it.by_ref().take(eq.rhs.len()).collect()));
    }
    Ok(Solution {
        valuation: to_valuation(good),
        basis: null.iter().map(|v| to_valuation(v)).collect(),
        matchings,
        matchings_tried: stats.matchings_tried,
        unknowns: nparams,
        rank: sys.rank(),
    })
}

/// Integer coefficients with gcd 1 and a positive leading coefficient in
/// graded-lex order over `order`.
pub fn normalize_invariant(p: &Polynomial, order: &VarOrder) -> Result<Polynomial> {
    p.primitive(order)
}

/// Checks directly, on instantiated polynomials, that `v` satisfies the
/// constraint system in the matching sense: the final goal vanishes and,
/// for every constraint, each nonzero right-hand element is a multiple
/// `m * g` of some left-hand element and each nonzero left-hand element
/// occurs among the right-hand elements.
pub fn satisfies(final_goal: &[Template], constraints: &[EqConstraint], v: &Valuation, mults: &[Polynomial]) -> bool {
    if final_goal.iter().any(|t| !t.instantiate(v).is_zero()) {
        return false;
    }
    constraints.iter().all(|eq| {
        let lhs: Vec<Polynomial> = eq.lhs.iter().map(|t| t.instantiate(v)).filter(|p| !p.is_zero()).collect();
        let rhs: Vec<Polynomial> = eq.rhs.iter().map(|t| t.instantiate(v)).filter(|p| !p.is_zero()).collect();
        let covered = lhs.iter().all(|g| rhs.contains(g));
        let sound = rhs
            .iter()
            .all(|h| lhs.iter().any(|g| mults.iter().any(|m| &(m * g) == h)));
        covered && sound
    })
}
