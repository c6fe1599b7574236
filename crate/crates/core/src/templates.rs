//! Monomial enumeration and most-general templates.

use crate::error::{Error, Result};
use crate::gdeg::{GDeg, GammaAssign};
use crate::poly::Monomial;
use crate::template::{ParamAlloc, ParamId, Template};
use crate::var::VarOrder;

/// Restriction to monomials of one g-degree.
#[derive(Clone, Copy, Debug)]
pub struct GhFilter<'a> {
    pub gamma: &'a GammaAssign,
    pub tau: &'a GDeg,
}

/// Everything needed to build one most-general template.
#[derive(Clone, Debug)]
pub struct TemplateSpec<'a> {
    pub vars: &'a VarOrder,
    pub degree: u32,
    pub filter: Option<GhFilter<'a>>,
    pub param_prefix: &'a str,
}

/// Monomials over `vars` of total degree at most `d`, ascending by degree
/// and lexicographically (earlier variables first) within a degree.
pub fn enumerate_monomials(vars: &VarOrder, d: u32, filter: Option<GhFilter<'_>>) -> Result<Vec<Monomial>> {
    let vs = vars.vars();
    let mut out = Vec::new();
    let mut exps = vec![0u32; vs.len()];
    for total in 0..=d {
        fill(&mut exps, 0, total, &mut |e| {
            out.push(Monomial::from_exponents(vs.iter().copied().zip(e.iter().copied())));
        });
    }
    if let Some(f) = filter {
        let mut kept = Vec::new();
        for w in out {
            if f.gamma.gdeg_of_monomial(&w)? == *f.tau {
                kept.push(w);
            }
        }
        out = kept;
    }
    Ok(out)
}

fn fill(exps: &mut [u32], i: usize, remaining: u32, emit: &mut impl FnMut(&[u32])) {
    if i + 1 >= exps.len() {
        if exps.is_empty() {
            if remaining == 0 {
                emit(exps);
            }
            return;
        }
        exps[i] = remaining;
        emit(exps);
        exps[i] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[i] = e;
        fill(exps, i + 1, remaining - e, emit);
    }
    exps[i] = 0;
}

/// Label for the parameter attached to `w`.
pub fn param_label(prefix: &str, w: &Monomial, vars: &VarOrder) -> String {
    if w.is_one() {
        format!("{prefix}[1]")
    } else {
        format!("{prefix}[{}]", w.fmt_with(vars))
    }
}

/// One fresh parameter per enumerated monomial. The parameter list follows
/// monomial order.
pub fn build_template(spec: &TemplateSpec<'_>, alloc: &mut ParamAlloc) -> Result<(Template, Vec<ParamId>)> {
    let ws = enumerate_monomials(spec.vars, spec.degree, spec.filter)?;
    if ws.is_empty() {
        return Err(Error::EmptyTemplate {
            degree: spec.degree,
            tau: spec.filter.map_or_else(|| "1".to_string(), |f| f.tau.to_string()),
        });
    }
    let params: Vec<ParamId> = ws
        .iter()
        .map(|w| alloc.fresh(param_label(spec.param_prefix, w, spec.vars)))
        .collect();
    let t = Template::from_params(ws.into_iter().zip(params.iter().copied()));
    Ok((t, params))
}
