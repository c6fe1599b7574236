//! The three semantic property suites over random loop-free programs.
//! Each returns the number of checked instances, or a description of the
//! first counterexample.

use std::collections::HashMap;

use ghinv::interp::{exec, Outcome, State};
use ghinv::poly::rat;
use ghinv::template::{ParamAlloc, ParamId, Template, Valuation};
use ghinv::wp::{template_gdeg, wp_concrete, GenState, Mode, Session};
use ghinv::{Polynomial, Stmt};
use rand::Rng;

use super::{random_state, rng, small_rational, Typed};

pub const PROGRAMS: u64 = 200;
pub const STATES: u64 = 50;

fn final_state(c: &Stmt, s: &State) -> Result<State, String> {
    match exec(c, s, 10_000).map_err(|e| e.to_string())? {
        Outcome::Terminated { state, .. } => Ok(state),
        other => Err(format!("loop-free program did not terminate: {other:?}")),
    }
}

/// If a state zeroes the precondition set, the final state zeroes the
/// goal. Half of the goals are shifted to vanish on the sampled run, so
/// the premise holds on a good share of the samples.
pub fn loop_free_soundness() -> Result<usize, String> {
    let typed = Typed::new();
    let mut premise_held = 0usize;
    for seed in 0..PROGRAMS {
        let mut r = rng(seed);
        let c = typed.random_stmt(&mut r, 3);
        for k in 0..STATES {
            let s = random_state(&mut r, &typed.vars);
            let fin = final_state(&c, &s)?;
            let mut goal: Vec<Polynomial> = (0..r.random_range(1..=2))
                .map(|_| typed.random_mixed(&mut r, 2))
                .collect();
            if k % 2 == 0 {
                goal = goal
                    .iter()
                    .map(|g| g - &Polynomial::constant(g.eval(&fin).unwrap()))
                    .collect();
            }
            let pre = wp_concrete(&c, &goal).map_err(|e| e.to_string())?;
            if pre.iter().all(|p| p.eval(&s).unwrap() == rat(0)) {
                premise_held += 1;
                for g in &goal {
                    if g.eval(&fin).unwrap() != rat(0) {
                        return Err(format!("program {seed}, state {k}: {g} does not vanish after {c:?}"));
                    }
                }
            }
        }
    }
    if premise_held < (PROGRAMS * STATES / 4) as usize {
        return Err(format!("premise held only {premise_held} times"));
    }
    Ok(premise_held)
}

pub fn run_session(c: &Stmt, mode: Mode<'_>, goal: &[Polynomial], typed: &Typed) -> Result<(GenState, ParamAlloc), String> {
    let mut session = Session::new(typed.order(), mode);
    let init = GenState {
        params: Vec::new(),
        goal: goal.iter().map(Template::from_poly).collect(),
        constraints: Vec::new(),
    };
    let out = session.wpc(c, init).map_err(|e| e.to_string())?;
    Ok((out, session.alloc))
}

fn instantiate_all(ts: &[Template], v: &Valuation) -> Vec<Polynomial> {
    let mut out: Vec<Polynomial> = Vec::new();
    for p in ts.iter().map(|t| t.instantiate(v)) {
        if !p.is_zero() && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// GH and full sessions agree on GH inputs: with every quotient parameter
/// at 0 both reduce to the concrete transformer, every GH-session template
/// is GH, and GH valuations transported to the full session by label
/// (extended by 0) instantiate to the same goal.
pub fn gh_full_agreement() -> Result<usize, String> {
    let typed = Typed::new();
    let mut checked = 0;
    for seed in 0..PROGRAMS {
        let mut r = rng(1000 + seed);
        let c = typed.random_stmt(&mut r, 3);
        typed.gamma.check(&c).map_err(|e| format!("program {seed} untyped: {e}"))?;
        let degrees = typed.degrees(2);
        let tau = &degrees[r.random_range(0..degrees.len())];
        let goal = vec![typed.random_gh(&mut r, tau, 2, 3).unwrap()];

        let (gh, gh_alloc) = run_session(&c, Mode::Gh(&typed.gamma), &goal, &typed)?;
        let (full, full_alloc) = run_session(&c, Mode::Full, &goal, &typed)?;
        for t in &gh.goal {
            template_gdeg(&typed.gamma, t).map_err(|e| format!("program {seed}: {e}"))?;
        }

        let concrete = wp_concrete(&c, &goal).map_err(|e| e.to_string())?;
        let zero = Valuation::new();
        if instantiate_all(&gh.goal, &zero) != concrete || instantiate_all(&full.goal, &zero) != concrete {
            return Err(format!("program {seed}: sessions disagree with the concrete transformer"));
        }

        let by_label: HashMap<&str, ParamId> = full_alloc.ids().map(|p| (full_alloc.label(p), p)).collect();
        for _ in 0..STATES {
            let mut v_gh = Valuation::new();
            let mut v_full = Valuation::new();
            for &p in &gh.params {
                let x = small_rational(&mut r);
                v_gh.set(p, x.clone());
                let q = by_label
                    .get(gh_alloc.label(p))
                    .ok_or_else(|| format!("program {seed}: no full parameter {}", gh_alloc.label(p)))?;
                v_full.set(*q, x);
            }
            if instantiate_all(&gh.goal, &v_gh) != instantiate_all(&full.goal, &v_full) {
                return Err(format!("program {seed}: transported valuation differs"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Each precondition of a homogeneous component is a homogeneous
/// component of a precondition of the whole polynomial.
pub fn component_correspondence() -> Result<usize, String> {
    let typed = Typed::new();
    let mut checked = 0usize;
    for seed in 0..PROGRAMS {
        let mut r = rng(2000 + seed);
        let c = typed.random_stmt(&mut r, 3);
        let whole = typed.random_mixed(&mut r, 2);
        let pre_whole = wp_concrete(&c, std::slice::from_ref(&whole)).map_err(|e| e.to_string())?;
        let decomposed: Vec<_> = pre_whole
            .iter()
            .map(|w| w.gh_decompose(&typed.gamma).unwrap())
            .collect();
        for (_, component) in whole.gh_decompose(&typed.gamma).unwrap() {
            for e in wp_concrete(&c, std::slice::from_ref(&component)).map_err(|e| e.to_string())? {
                let tau = typed
                    .gamma
                    .require_gh(&e)
                    .map_err(|err| format!("program {seed}: {err}"))?
                    .expect("nonzero");
                if !decomposed.iter().any(|parts| parts.get(&tau) == Some(&e)) {
                    return Err(format!("program {seed}: {e} is not a component of {pre_whole:?}"));
                }
                checked += 1;
            }
        }
    }
    if checked < PROGRAMS as usize {
        return Err(format!("only {checked} components checked"));
    }
    Ok(checked)
}
