//! Backward transformers: the constraint-generating transformer over
//! templates, the parametric remainder, and a concrete loop-free
//! transformer used as a test oracle.

use std::collections::HashMap;

use crate::ast::Stmt;
use crate::error::{Error, Result};
use crate::gdeg::{GDeg, GammaAssign};
use crate::poly::{Monomial, Polynomial};
use crate::template::{ParamAlloc, ParamId, Template};
use crate::templates::{build_template, GhFilter, TemplateSpec};
use crate::var::{Var, VarOrder};

/// `lhs` and `rhs` must generate the same ideal.
#[derive(Clone, Debug, PartialEq)]
pub struct EqConstraint {
    pub lhs: Vec<Template>,
    pub rhs: Vec<Template>,
}

/// The triple threaded through the transformer: parameters, goal set and
/// accumulated constraints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenState {
    pub params: Vec<ParamId>,
    pub goal: Vec<Template>,
    pub constraints: Vec<EqConstraint>,
}

#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    Full,
    Gh(&'a GammaAssign),
}

impl Mode<'_> {
    pub fn is_gh(&self) -> bool {
        matches!(self, Mode::Gh(_))
    }
}

/// The g-degree shared by every monomial of `t`; `None` for zero.
pub fn template_gdeg(gamma: &GammaAssign, t: &Template) -> Result<Option<GDeg>> {
    let mut common: Option<(Monomial, GDeg)> = None;
    for w in t.monomials() {
        let d = gamma.gdeg_of_monomial(w)?;
        match &common {
            None => common = Some((w.clone(), d)),
            Some((_, d0)) if *d0 == d => {}
            Some((w0, d0)) => {
                return Err(Error::NotGh(format!(
                    "template mixes {} (g-degree {d0}) and {} (g-degree {d})",
                    w0.fmt_with(gamma.order()),
                    w.fmt_with(gamma.order())
                )))
            }
        }
    }
    Ok(common.map(|(_, d)| d))
}

/// One synthesis session: owns the parameter allocator so that every
/// parameter it issues is fresh.
#[derive(Clone, Debug)]
pub struct Session<'a> {
    pub vars: VarOrder,
    pub mode: Mode<'a>,
    pub alloc: ParamAlloc,
    if_count: usize,
}

impl<'a> Session<'a> {
    pub fn new(vars: VarOrder, mode: Mode<'a>) -> Self {
        Session {
            vars,
            mode,
            alloc: ParamAlloc::new(),
            if_count: 0,
        }
    }

    /// `f - p*q` for a fresh most-general quotient template `q`. In GH
    /// mode `q` only ranges over monomials of g-degree `gdeg(f)/gdeg(p)`.
    /// `q` is 0 when `p` is 0, when `deg(f) < deg(p)`, or when no monomial
    /// qualifies.
    pub fn rem_par(&mut self, params: &mut Vec<ParamId>, f: &Template, p: &Polynomial, label: &str) -> Result<Template> {
        let (Some(df), Some(dp)) = (f.degree(), p.degree()) else {
            return Ok(f.clone());
        };
        if df < dp {
            return Ok(f.clone());
        }
        let tau = match self.mode {
            Mode::Full => None,
            Mode::Gh(gamma) => {
                let tf = template_gdeg(gamma, f)?.expect("nonzero template");
                let tp = gamma.require_gh(p)?.expect("nonzero polynomial");
                Some(tf.div(&tp))
            }
        };
        let filter = match (&self.mode, &tau) {
            (Mode::Gh(gamma), Some(tau)) => Some(GhFilter { gamma, tau }),
            _ => None,
        };
        let spec = TemplateSpec {
            vars: &self.vars,
            degree: df - dp,
            filter,
            param_prefix: label,
        };
        match build_template(&spec, &mut self.alloc) {
            Ok((q, qs)) => {
                params.extend(qs);
                Ok(f.sub(&q.mul_poly(p)))
            }
            Err(Error::EmptyTemplate { .. }) => Ok(f.clone()),
            Err(e) => Err(e),
        }
    }

    pub fn wpc(&mut self, c: &Stmt, s: GenState) -> Result<GenState> {
        match c {
            Stmt::Skip => Ok(s),
            Stmt::Assign { targets, rhs } => {
                let binding: HashMap<Var, Polynomial> = targets
                    .iter()
                    .copied()
                    .zip(rhs.iter().map(|e| e.poly.clone()))
                    .collect();
                let goal = s
                    .goal
                    .iter()
                    .map(|g| g.substitute(&binding))
                    .filter(|g| !g.is_zero())
                    .collect();
                Ok(GenState { goal, ..s })
            }
            Stmt::Seq(a, b) => {
                let s = self.wpc(b, s)?;
                self.wpc(a, s)
            }
            Stmt::If {
                guard,
                then_branch,
                else_branch,
            } => {
                let ordinal = self.if_count;
                self.if_count += 1;
                let goal = s.goal.clone();
                let base = s.constraints.len();
                let s1 = self.wpc(then_branch, s)?;
                let GenState {
                    params,
                    goal: g1,
                    constraints: c1,
                } = s1;
                let new1: Vec<EqConstraint> = c1[base..].to_vec();
                let mut constraints = c1;
                constraints.truncate(base);
                let s2 = self.wpc(
                    else_branch,
                    GenState {
                        params,
                        goal,
                        constraints,
                    },
                )?;
                let GenState {
                    mut params,
                    goal: g2,
                    constraints: mut c2,
                } = s2;
                let new2 = c2.split_off(base);
                c2.extend(new1);
                c2.extend(new2);
                let p = &guard.poly;
                let mut out: Vec<Template> = g2.iter().map(|g| g.mul_poly(p)).filter(|g| !g.is_zero()).collect();
                for (i, f) in g1.iter().enumerate() {
                    let r = self.rem_par(&mut params, f, p, &format!("r{ordinal}.{i}"))?;
                    if !r.is_zero() {
                        out.push(r);
                    }
                }
                Ok(GenState {
                    params,
                    goal: out,
                    constraints: c2,
                })
            }
            Stmt::While { body, .. } => {
                let goal = s.goal.clone();
                let s1 = self.wpc(body, s)?;
                let mut constraints = s1.constraints;
                constraints.push(EqConstraint {
                    lhs: goal.clone(),
                    rhs: s1.goal,
                });
                Ok(GenState {
                    params: s1.params,
                    goal,
                    constraints,
                })
            }
        }
    }
}

/// Concrete backward transformer for loop-free statements, with the
/// remainder taken to be the identity.
pub fn wp_concrete(c: &Stmt, goal: &[Polynomial]) -> Result<Vec<Polynomial>> {
    let mut out = Vec::new();
    match c {
        Stmt::Skip => out.extend(goal.iter().cloned()),
        Stmt::Assign { targets, rhs } => {
            let binding: HashMap<Var, Polynomial> = targets
                .iter()
                .copied()
                .zip(rhs.iter().map(|e| e.poly.clone()))
                .collect();
            out.extend(goal.iter().map(|g| g.substitute(&binding)));
        }
        Stmt::Seq(a, b) => {
            let mid = wp_concrete(b, goal)?;
            out = wp_concrete(a, &mid)?;
        }
        Stmt::If {
            guard,
            then_branch,
            else_branch,
        } => {
            let g2 = wp_concrete(else_branch, goal)?;
            let g1 = wp_concrete(then_branch, goal)?;
            out.extend(g2.iter().map(|g| g * &guard.poly));
            out.extend(g1);
        }
        Stmt::While { .. } => return Err(Error::ContainsLoop),
    }
    let mut dedup: Vec<Polynomial> = Vec::with_capacity(out.len());
    for p in out {
        if !p.is_zero() && !dedup.contains(&p) {
            dedup.push(p);
        }
    }
    Ok(dedup)
}
