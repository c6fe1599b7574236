mod common;

use common::{poly, suite_program};
use ghinv::gdeg::GammaAssign;
use ghinv::interp::CheckOptions;
use ghinv::pipeline::{
    aligned_vars, check_inclusion, generate, infer, parse_target, self_check, solve_generated, span_contains,
    Generated, InferOptions, ModeKind, Status, TauChoice,
};
use ghinv::solver::{option_equations, satisfies, zero_equations, LinearEq, MatchOption, DEFAULT_CAP};
use ghinv::template::Valuation;
use ghinv::{infer_gamma, parse_program, GDeg, LiteralPolicy, Polynomial, Program, Rational};
use num_traits::Zero;

/// (program, degree, target monomial) configurations of the corpus.
const CORPUS: [(&str, u32, &str); 3] = [("freefall", 2, "v"), ("freefall", 3, "x"), ("sumpower1", 3, "x^3")];

fn holds(eq: &LinearEq, v: &Valuation) -> bool {
    let lhs = eq
        .coeffs
        .iter()
        .fold(Rational::zero(), |acc, (p, c)| acc + c * v.get(*p));
    lhs == eq.constant
}

fn gh_setup(p: &Program, target: &str) -> (Program, GammaAssign, GDeg) {
    let inf = infer_gamma(p, LiteralPolicy::Coalesced).unwrap();
    let tau = inf.gamma.gdeg_of_monomial(&parse_target(target).unwrap()).unwrap();
    (inf.program, inf.gamma, tau)
}

fn assert_exact(g: &Generated, v: &Valuation, matchings: &[ghinv::solver::Matching]) {
    for t in &g.state.goal {
        for eq in zero_equations(t) {
            assert!(holds(&eq, v));
        }
        assert!(t.instantiate(v).is_zero());
    }
    for (eq, m) in g.state.constraints.iter().zip(matchings) {
        for (h, opt) in m.0.iter().enumerate() {
            for row in option_equations(eq, h, *opt, &g.mults) {
                assert!(holds(&row, v));
            }
            if let MatchOption::EqualTo { g: gi, m: mi } = opt {
                let lhs = &eq.lhs[*gi].instantiate(v) * &g.mults[*mi];
                assert_eq!(eq.rhs[h].instantiate(v), lhs);
            }
        }
    }
    assert!(satisfies(&g.state.goal, &g.state.constraints, v, &g.mults));
}

#[test]
fn solutions_are_exact_and_sound() {
    for (name, d, target) in CORPUS {
        let p = suite_program(name);
        let (lifted, gamma, tau) = gh_setup(&p, target);
        let runs = [
            (generate(&lifted, Some((&gamma, &tau)), d, &[]).unwrap(), Some(&gamma)),
            (generate(&p, None, d, &[]).unwrap(), None),
        ];
        for (g, gm) in &runs {
            let solved = solve_generated(g, *gm, DEFAULT_CAP).unwrap();
            let sol = &solved.solution;
            assert!(!solved.invariant.is_zero(), "{name}");
            assert_eq!(sol.matchings.len(), g.state.constraints.len());
            assert_exact(g, &sol.valuation, &sol.matchings);
            for b in &sol.basis {
                assert_exact(g, b, &sol.matchings);
            }
            let again = solve_generated(g, *gm, DEFAULT_CAP).unwrap();
            assert_eq!(again.solution.valuation, sol.valuation, "{name}: not deterministic");
        }
    }
}

#[test]
fn gh_solutions_embed_into_the_full_system() {
    for (name, d, target) in CORPUS {
        let r = check_inclusion(&suite_program(name), d, &parse_target(target).unwrap(), &[]).unwrap();
        assert!(r.gh_found, "{name}");
        assert!(r.unmapped.is_empty(), "{name}: {:?}", r.unmapped);
        assert!(r.satisfied, "{name}");
    }
}

fn run(name: &str, d: u32, mode: ModeKind, target: Option<&str>) -> ghinv::pipeline::InferOutcome {
    let mut opts = InferOptions::new(d, mode);
    if let Some(t) = target {
        opts.tau = Some(TauChoice::Target(parse_target(t).unwrap()));
    }
    infer(name, &suite_program(name), &opts)
}

#[test]
fn freefall_degree_two() {
    let out = run("freefall", 2, ModeKind::Gh, Some("v"));
    assert_eq!(out.report.status, Status::Found);
    assert_eq!(out.report.template_size, 8);
    let p1 = poly("-g*t + g*t0 - v + v0 - x*rho + x0*rho");
    assert_eq!(out.invariants.len(), 1);
    assert!(span_contains(&out.invariants, &p1));
    assert!(out.report.t_inf_ms > 0.0);

    let full = run("freefall", 2, ModeKind::Full, None);
    assert_eq!(full.report.status, Status::Found);
    assert_eq!(full.report.template_size, 66);
    assert_eq!(full.report.t_inf_ms, 0.0);
}

#[test]
fn template_sizes() {
    assert_eq!(run("freefall", 3, ModeKind::Full, None).report.template_size, 286);
    assert_eq!(run("sumpower1", 3, ModeKind::Full, None).report.template_size, 35);
    assert_eq!(run("sumpower1", 3, ModeKind::Gh, Some("x^3")).report.template_size, 35);
}

#[test]
fn degree_three_basis_contents() {
    let mut opts = InferOptions::new(3, ModeKind::Gh);
    opts.tau = Some(TauChoice::Target(parse_target("x").unwrap()));
    opts.emit_basis = true;
    let out = infer("freefall", &suite_program("freefall"), &opts);
    assert_eq!(out.report.status, Status::Found);
    assert_eq!(out.report.template_size, 28);
    // Multiples of the degree-two invariant by degree-T variables.
    let p1 = poly("-g*t + g*t0 - v + v0 - x*rho + x0*rho");
    for w in ["t0", "a", "dt"] {
        assert!(span_contains(&out.invariants, &(&p1 * &poly(w))), "{w}");
    }
}

#[test]
fn skip_has_no_invariant() {
    let out = infer("skip", &parse_program("skip;").unwrap(), &InferOptions::new(1, ModeKind::Full));
    assert_eq!(out.report.status, Status::NoSolution);
    assert!(out.invariants.is_empty());
}

#[test]
fn found_invariants_pass_their_own_check() {
    for (name, d, target) in CORPUS {
        let p = suite_program(name);
        for (mode, target) in [(ModeKind::Gh, Some(target)), (ModeKind::Full, None)] {
            let mut out = run(name, d, mode, target);
            assert_eq!(out.report.status, Status::Found, "{name} {mode}");
            let opts = CheckOptions {
                aligned: aligned_vars(&p).unwrap(),
                ..CheckOptions::default()
            };
            assert!(self_check(&p, &mut out, &opts).unwrap(), "{name} {mode}: {:?}", out.report.check);
            assert!(out.report.check.iter().all(|c| c.terminated > 0));
        }
    }
}

#[test]
fn tau_sweep_reports_every_degree() {
    let mut opts = InferOptions::new(2, ModeKind::Gh);
    opts.tau = Some(TauChoice::Sweep);
    let out = infer("freefall", &suite_program("freefall"), &opts);
    assert_eq!(out.report.status, Status::Found);
    assert!(out.report.sweep.len() > 1);
    let mut taus: Vec<&str> = out.report.sweep.iter().map(|e| e.tau.as_str()).collect();
    taus.sort();
    taus.dedup();
    assert_eq!(taus.len(), out.report.sweep.len());
}

#[test]
fn cap_is_reported() {
    let mut opts = InferOptions::new(2, ModeKind::Gh);
    opts.tau = Some(TauChoice::Target(parse_target("v").unwrap()));
    opts.cap = 0;
    let out = infer("freefall", &suite_program("freefall"), &opts);
    assert_eq!(out.report.status, Status::CapExceeded);
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let strip = |mut r: ghinv::pipeline::RunReport| {
        r.t_inf_ms = 0.0;
        r.t_sol_ms = 0.0;
        r.t_gen_ms = None;
        serde_json::to_string(&r).unwrap()
    };
    let a = strip(run("sumpower1", 3, ModeKind::Gh, Some("x^3")).report);
    let b = strip(run("sumpower1", 3, ModeKind::Gh, Some("x^3")).report);
    assert_eq!(a, b);
}

/// Direct simulation of sumpower1 on machine integers: (x, y, s) at exit.
fn sumpower1_exit(big_x: i64) -> (i64, i64, i64) {
    let (mut x, mut y, mut s) = (big_x + 1, 0, 1);
    while x != 0 {
        if y == 0 {
            (x, y) = (x - 1, x);
        } else {
            (s, y) = (s + y, y - 1);
        }
    }
    (x, y, s)
}

#[test]
fn sumpower_invariant_matches_direct_simulation() {
    let out = run("sumpower1", 3, ModeKind::Gh, Some("x^3"));
    let inv: &Polynomial = &out.invariants[0];
    let state = |vals: [(&str, i64); 4]| -> ghinv::interp::State {
        vals.into_iter()
            .map(|(n, v)| (common::var(n), ghinv::poly::rat(v)))
            .collect()
    };
    for n in 0..8 {
        let (x, y, s) = sumpower1_exit(n);
        assert!(inv.eval(&state([("x", x), ("y", y), ("X", n), ("s", s)])).unwrap().is_zero(), "X = {n}");
        assert!(!inv.eval(&state([("x", x), ("y", y), ("X", n), ("s", s + 1)])).unwrap().is_zero(), "X = {n}");
    }
}
