//! End-to-end drivers: degree inference, template construction,
//! constraint generation, solving, empirical checking and reporting.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::ast::{LiteralPolicy, LiteralTable, Program, Stmt};
use crate::error::{Error, Result};
use crate::gdeg::{infer_gamma_pinned, GDeg, GammaAssign, GammaInference};
use crate::interp::{check_postcondition, CheckOptions, CheckReport};
use crate::linalg;
use crate::parser::{parse_poly, parse_program};
use crate::poly::{Monomial, Polynomial, Rational};
use crate::solver::{self, multiplier_set, satisfies, SolveOptions, DEFAULT_CAP};
use crate::template::{ParamAlloc, ParamId, Template, Valuation};
use crate::templates::{build_template, enumerate_monomials, GhFilter, TemplateSpec};
use crate::var::{Var, VarOrder};
use crate::wp::{GenState, Mode, Session};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Full,
    Gh,
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeKind::Full => "full",
            ModeKind::Gh => "gh",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Found,
    NoSolution,
    CapExceeded,
    EmptyTemplate,
    Error,
}

/// How the g-degree of the template is chosen in GH mode.
#[derive(Clone, Debug, PartialEq)]
pub enum TauChoice {
    /// The g-degree of this monomial.
    Target(Monomial),
    Tau(GDeg),
    /// Every g-degree realized by some monomial of degree at most d.
    Sweep,
}

#[derive(Clone, Debug)]
pub struct InferOptions {
    pub degree: u32,
    pub mode: ModeKind,
    pub tau: Option<TauChoice>,
    pub extra_mults: Vec<Polynomial>,
    pub emit_basis: bool,
    pub cap: usize,
    pub literal_policy: LiteralPolicy,
    pub pins: Vec<(Var, GDeg)>,
}

impl InferOptions {
    pub fn new(degree: u32, mode: ModeKind) -> Self {
        InferOptions {
            degree,
            mode,
            tau: None,
            extra_mults: Vec::new(),
            emit_basis: false,
            cap: DEFAULT_CAP,
            literal_policy: LiteralPolicy::Coalesced,
            pins: Vec::new(),
        }
    }

    pub fn target(mut self, w: Monomial) -> Self {
        self.tau = Some(TauChoice::Target(w));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub passed: bool,
    pub violations: usize,
    pub vacuous: usize,
    pub terminated: usize,
}

impl From<&CheckReport> for CheckSummary {
    fn from(r: &CheckReport) -> Self {
        CheckSummary {
            passed: r.passed,
            violations: r.violations.len(),
            vacuous: r.vacuous_count,
            terminated: r.terminated_count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub tau: String,
    pub template_size: usize,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub program: String,
    pub mode: ModeKind,
    pub degree: u32,
    pub tau: Option<String>,
    pub template_size: usize,
    pub constraints: usize,
    pub matchings_tried: usize,
    pub t_inf_ms: f64,
    pub t_sol_ms: f64,
    pub status: Status,
    pub invariants: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_gen_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariants_lifted: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub check: Vec<CheckSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    fn empty(name: &str, opts: &InferOptions) -> Self {
        RunReport {
            program: name.to_string(),
            mode: opts.mode,
            degree: opts.degree,
            tau: None,
            template_size: 0,
            constraints: 0,
            matchings_tried: 0,
            t_inf_ms: 0.0,
            t_sol_ms: 0.0,
            status: Status::Error,
            invariants: Vec::new(),
            gamma: Vec::new(),
            t_gen_ms: None,
            invariants_lifted: Vec::new(),
            check: Vec::new(),
            sweep: Vec::new(),
            error: None,
        }
    }
}

pub fn status_of(e: &Error) -> Status {
    match e {
        Error::NoSolution => Status::NoSolution,
        Error::CapExceeded { .. } => Status::CapExceeded,
        Error::EmptyTemplate { .. } => Status::EmptyTemplate,
        _ => Status::Error,
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Generated constraint system of one synthesis run, before solving.
#[derive(Clone, Debug)]
pub struct Generated {
    pub vars: VarOrder,
    pub alloc: ParamAlloc,
    pub template: Template,
    pub targets: Vec<ParamId>,
    pub state: GenState,
    pub mults: Vec<Polynomial>,
}

/// Builds the template (restricted to `tau` under `gamma` when given) and
/// runs the constraint-generating transformer over `program`.
pub fn generate(
    program: &Program,
    gh: Option<(&GammaAssign, &GDeg)>,
    degree: u32,
    extra_mults: &[Polynomial],
) -> Result<Generated> {
    let vars = program.vars.clone();
    let mode = match gh {
        Some((gamma, _)) => Mode::Gh(gamma),
        None => Mode::Full,
    };
    let mut session = Session::new(vars.clone(), mode);
    let spec = TemplateSpec {
        vars: &vars,
        degree,
        filter: gh.map(|(gamma, tau)| GhFilter { gamma, tau }),
        param_prefix: "a",
    };
    let (template, targets) = build_template(&spec, &mut session.alloc)?;
    let init = GenState {
        params: targets.clone(),
        goal: vec![template.clone()],
        constraints: Vec::new(),
    };
    let state = session.wpc(&program.body, init)?;
    Ok(Generated {
        vars,
        alloc: session.alloc,
        template,
        targets,
        state,
        mults: multiplier_set(&program.body.guards(), extra_mults),
    })
}

/// Result of solving a generated system.
#[derive(Clone, Debug)]
pub struct Solved {
    pub solution: solver::Solution,
    /// `template` instantiated at the chosen valuation.
    pub invariant: Polynomial,
}

pub fn solve_generated(g: &Generated, gamma: Option<&GammaAssign>, cap: usize) -> Result<Solved, (Error, usize)> {
    let opts = SolveOptions {
        mults: g.mults.clone(),
        gamma,
        cap,
    };
    match solver::solve(g.alloc.len(), &g.state.goal, &g.state.constraints, &g.targets, &opts) {
        Ok(solution) => {
            let invariant = g.template.instantiate(&solution.valuation);
            Ok(Solved { solution, invariant })
        }
        Err((e, stats)) => Err((e, stats.matchings_tried)),
    }
}

/// Polynomials spanning `{ template(v) : v in basis }`, after `restore`,
/// normalized and linearly independent.
fn span_basis(template: &Template, basis: &[Valuation], restore: &dyn Fn(&Polynomial) -> Polynomial, order: &VarOrder) -> Vec<Polynomial> {
    let mut out: Vec<Polynomial> = Vec::new();
    for v in basis {
        let p = restore(&template.instantiate(v));
        if p.is_zero() {
            continue;
        }
        let mut candidate = out.clone();
        candidate.push(p.clone());
        if poly_rank(&candidate) == candidate.len() {
            out.push(p.primitive(order).expect("nonzero"));
        }
    }
    out
}

/// Rank of a list of polynomials as vectors over their monomials.
pub fn poly_rank(ps: &[Polynomial]) -> usize {
    let mut monos: Vec<&Monomial> = ps.iter().flat_map(|p| p.monomials()).collect();
    monos.sort();
    monos.dedup();
    let vectors: Vec<Vec<Rational>> = ps
        .iter()
        .map(|p| monos.iter().map(|w| p.coefficient(w)).collect())
        .collect();
    linalg::rank(&vectors)
}

/// Whether `p` lies in the linear span of `basis`.
pub fn span_contains(basis: &[Polynomial], p: &Polynomial) -> bool {
    let mut all = basis.to_vec();
    all.push(p.clone());
    poly_rank(&all) == poly_rank(basis)
}

/// Everything `infer` computes, beyond the serializable report.
#[derive(Clone, Debug)]
pub struct InferOutcome {
    pub report: RunReport,
    /// Normalized invariants over the original program's variables.
    pub invariants: Vec<Polynomial>,
    pub inference: Option<GammaInference>,
}

/// Variables whose g-degree equals that of some loop guard.
pub fn time_like_vars(program: &Program, gamma: &GammaAssign) -> Vec<Var> {
    fn loop_guards(s: &Stmt, out: &mut Vec<Polynomial>) {
        match s {
            Stmt::Skip | Stmt::Assign { .. } => {}
            Stmt::Seq(a, b) => {
                loop_guards(a, out);
                loop_guards(b, out);
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                loop_guards(then_branch, out);
                loop_guards(else_branch, out);
            }
            Stmt::While { guard, body, .. } => {
                out.push(guard.poly.clone());
                loop_guards(body, out);
            }
        }
    }
    let mut guards = Vec::new();
    loop_guards(&program.body, &mut guards);
    let degrees: Vec<GDeg> = guards
        .iter()
        .filter_map(|g| gamma.require_gh(g).ok().flatten())
        .collect();
    program
        .vars()
        .iter()
        .copied()
        .filter(|&v| gamma.get(v).is_some_and(|d| degrees.contains(d)))
        .collect()
}

fn target_tau(gamma: &GammaAssign, w: &Monomial) -> Result<GDeg> {
    gamma.gdeg_of_monomial(w).map_err(|e| match e {
        Error::UnboundVariable(v) => Error::Input(format!("target mentions unknown variable `{v}`")),
        e => e,
    })
}

/// Parses a target monomial such as `x^2*y`; the coefficient is ignored.
pub fn parse_target(text: &str) -> Result<Monomial> {
    let p = parse_poly(text)?;
    let mut ws = p.monomials();
    match (ws.next(), ws.next()) {
        (Some(w), None) => Ok(w.clone()),
        _ => Err(Error::Input(format!("target `{text}` is not a single monomial"))),
    }
}

/// Runs the whole pipeline on `program`.
pub fn infer(name: &str, program: &Program, opts: &InferOptions) -> InferOutcome {
    let mut report = RunReport::empty(name, opts);
    match infer_inner(program, opts, &mut report) {
        Ok((invariants, inference)) => InferOutcome {
            report,
            invariants,
            inference,
        },
        Err(e) => {
            report.status = status_of(&e);
            if report.status == Status::Error {
                report.error = Some(e.to_string());
            }
            InferOutcome {
                report,
                invariants: Vec::new(),
                inference: None,
            }
        }
    }
}

fn infer_inner(program: &Program, opts: &InferOptions, report: &mut RunReport) -> Result<(Vec<Polynomial>, Option<GammaInference>)> {
    let order = program.vars.clone();
    match opts.mode {
        ModeKind::Full => {
            let inv = run_one(program, None, opts, report, &LiteralTable::default(), &order)?;
            Ok((inv, None))
        }
        ModeKind::Gh => {
            let start = Instant::now();
            let inference = infer_gamma_pinned(program, opts.literal_policy, &opts.pins)?;
            report.t_inf_ms = ms(start);
            report.gamma = inference.gamma.to_string().lines().map(str::to_string).collect();
            let gamma = &inference.gamma;
            let taus: Vec<GDeg> = match &opts.tau {
                None => return Err(Error::Input("gh mode needs a target monomial or a tau sweep".into())),
                Some(TauChoice::Target(w)) => vec![target_tau(gamma, w)?],
                Some(TauChoice::Tau(t)) => vec![t.clone()],
                Some(TauChoice::Sweep) => {
                    let mut ts: Vec<GDeg> = Vec::new();
                    for w in enumerate_monomials(&inference.program.vars, opts.degree, None)? {
                        let t = gamma.gdeg_of_monomial(&w)?;
                        if !ts.contains(&t) {
                            ts.push(t);
                        }
                    }
                    ts
                }
            };
            let sweeping = matches!(opts.tau, Some(TauChoice::Sweep));
            let mut last_err = Error::NoSolution;
            for tau in &taus {
                let mut sub = report.clone();
                match run_one(&inference.program, Some((gamma, tau)), opts, &mut sub, &inference.literals, &order) {
                    Ok(inv) => {
                        let mut sweep = std::mem::take(&mut report.sweep);
                        if sweeping {
                            sweep.push(SweepEntry {
                                tau: tau.to_string(),
                                template_size: sub.template_size,
                                status: Status::Found,
                            });
                        }
                        *report = sub;
                        report.sweep = sweep;
                        return Ok((inv, Some(inference.clone())));
                    }
                    Err(e) => {
                        if sweeping {
                            report.sweep.push(SweepEntry {
                                tau: tau.to_string(),
                                template_size: sub.template_size,
                                status: status_of(&e),
                            });
                        } else {
                            let sweep = std::mem::take(&mut report.sweep);
                            *report = sub;
                            report.sweep = sweep;
                        }
                        last_err = e;
                    }
                }
            }
            Err(last_err)
        }
    }
}

fn run_one(
    program: &Program,
    gh: Option<(&GammaAssign, &GDeg)>,
    opts: &InferOptions,
    report: &mut RunReport,
    literals: &LiteralTable,
    order: &VarOrder,
) -> Result<Vec<Polynomial>> {
    report.tau = gh.map(|(_, t)| t.to_string());
    let start = Instant::now();
    let g = generate(program, gh, opts.degree, &opts.extra_mults)?;
    report.t_gen_ms = Some(ms(start));
    report.template_size = g.targets.len();
    report.constraints = g.state.constraints.len();
    let start = Instant::now();
    let solved = solve_generated(&g, gh.map(|(gamma, _)| gamma), opts.cap);
    report.t_sol_ms = ms(start);
    let solved = match solved {
        Ok(s) => s,
        Err((e, tried)) => {
            report.matchings_tried = tried;
            return Err(e);
        }
    };
    report.matchings_tried = solved.solution.matchings_tried;
    let binding = literals.restore();
    let restore = |p: &Polynomial| {
        if binding.is_empty() {
            p.clone()
        } else {
            p.substitute(&binding)
        }
    };
    let on_targets: Vec<Valuation> = solved
        .solution
        .basis
        .iter()
        .filter(|v| g.targets.iter().any(|&p| !v.get(p).is_zero()))
        .cloned()
        .collect();
    let invariants = if opts.emit_basis {
        span_basis(&g.template, &on_targets, &restore, order)
    } else {
        let mut chosen = vec![solved.solution.valuation.clone()];
        chosen.extend(on_targets.iter().cloned());
        chosen
            .iter()
            .map(|v| restore(&g.template.instantiate(v)))
            .find(|p| !p.is_zero())
            .map(|p| vec![p.primitive(order).expect("nonzero")])
            .unwrap_or_default()
    };
    if invariants.is_empty() {
        return Err(Error::NoSolution);
    }
    if !binding.is_empty() {
        report.invariants_lifted = vec![solved
            .invariant
            .primitive(&program.vars)
            .map(|p| p.fmt_with(&program.vars))
            .unwrap_or_default()];
    }
    report.invariants = invariants.iter().map(|p| p.fmt_with(order)).collect();
    report.status = Status::Found;
    Ok(invariants)
}

/// Checks every invariant empirically and records the summaries.
pub fn self_check(program: &Program, outcome: &mut InferOutcome, opts: &CheckOptions) -> Result<bool> {
    let mut all = true;
    outcome.report.check.clear();
    for p in &outcome.invariants {
        let r = check_postcondition(program, p, opts)?;
        all &= r.passed;
        outcome.report.check.push(CheckSummary::from(&r));
    }
    Ok(all)
}

/// Variables to sample as small naturals for `program`.
pub fn aligned_vars(program: &Program) -> Result<Vec<Var>> {
    let inf = infer_gamma_pinned(program, LiteralPolicy::Coalesced, &[])?;
    Ok(time_like_vars(program, &inf.gamma))
}

/// Result of comparing a GH-mode solution with the full-mode system of
/// the same (literal-lifted) program.
#[derive(Clone, Debug)]
pub struct InclusionCheck {
    pub gh_found: bool,
    /// GH parameters without a counterpart in the full session.
    pub unmapped: Vec<String>,
    pub satisfied: bool,
}

/// Runs GH mode, maps its valuation into the full-mode session by
/// parameter label (extending by zero), and checks the full-mode
/// constraints directly.
pub fn check_inclusion(program: &Program, degree: u32, target: &Monomial, extra_mults: &[Polynomial]) -> Result<InclusionCheck> {
    let inference = infer_gamma_pinned(program, LiteralPolicy::Coalesced, &[])?;
    let gamma = &inference.gamma;
    let tau = target_tau(gamma, target)?;
    let lifted = &inference.program;
    let gh = generate(lifted, Some((gamma, &tau)), degree, extra_mults)?;
    let solved = match solve_generated(&gh, Some(gamma), DEFAULT_CAP) {
        Ok(s) => s,
        Err((Error::NoSolution, _)) => {
            return Ok(InclusionCheck {
                gh_found: false,
                unmapped: Vec::new(),
                satisfied: true,
            })
        }
        Err((e, _)) => return Err(e),
    };
    let full = generate(lifted, None, degree, extra_mults)?;
    let by_label: std::collections::HashMap<&str, ParamId> = full.alloc.ids().map(|p| (full.alloc.label(p), p)).collect();
    let mut v = Valuation::new();
    let mut unmapped = Vec::new();
    for (p, c) in solved.solution.valuation.iter() {
        match by_label.get(gh.alloc.label(p)) {
            Some(&q) => v.set(q, c.clone()),
            None => unmapped.push(gh.alloc.label(p).to_string()),
        }
    }
    let satisfied = unmapped.is_empty() && satisfies(&full.state.goal, &full.state.constraints, &v, &full.mults);
    // The full-mode template instantiates to the same invariant.
    let same = full.template.instantiate(&v) == solved.invariant;
    Ok(InclusionCheck {
        gh_found: true,
        unmapped,
        satisfied: satisfied && same,
    })
}

/// One benchmark entry of a suite manifest.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub degree: u32,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub align: bool,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeKind>,
    #[serde(default)]
    pub mult: Vec<String>,
}

fn default_modes() -> Vec<ModeKind> {
    vec![ModeKind::Full, ModeKind::Gh]
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct Manifest {
    #[serde(default, rename = "program")]
    pub programs: Vec<ManifestEntry>,
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.toml");
    if !path.exists() {
        return Ok(Manifest::default());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub jobs: usize,
    pub check: CheckOptions,
    pub cap: usize,
}

fn bench_one(dir: &Path, entry: &ManifestEntry, mode: ModeKind, bopts: &BenchOptions) -> RunReport {
    let mut opts = InferOptions::new(entry.degree, mode);
    opts.cap = bopts.cap;
    let fail = |opts: &InferOptions, msg: String| {
        let mut r = RunReport::empty(&entry.name, opts);
        r.error = Some(msg);
        r
    };
    let path: PathBuf = dir.join(&entry.file);
    let program = match std::fs::read_to_string(&path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
        .and_then(|t| parse_program(&t))
    {
        Ok(p) => p,
        Err(e) => return fail(&opts, e.to_string()),
    };
    for m in &entry.mult {
        match parse_poly(m) {
            Ok(p) => opts.extra_mults.push(p),
            Err(e) => return fail(&opts, e.to_string()),
        }
    }
    if mode == ModeKind::Gh {
        opts.tau = Some(match &entry.target {
            Some(t) => match parse_target(t) {
                Ok(w) => TauChoice::Target(w),
                Err(e) => return fail(&opts, e.to_string()),
            },
            None => TauChoice::Sweep,
        });
    }
    let mut outcome = infer(&entry.name, &program, &opts);
    if outcome.report.status == Status::Found {
        let mut check = bopts.check.clone();
        if entry.align {
            match aligned_vars(&program) {
                Ok(vs) => check.aligned = vs,
                Err(e) => return fail(&opts, e.to_string()),
            }
        }
        if let Err(e) = self_check(&program, &mut outcome, &check) {
            outcome.report.error = Some(e.to_string());
        }
    }
    outcome.report
}

/// Runs every manifest entry in every configured mode. Reports come back
/// in manifest order regardless of scheduling.
pub fn bench(dir: &Path, opts: &BenchOptions) -> Result<Vec<RunReport>> {
    use rayon::prelude::*;
    let manifest = load_manifest(dir)?;
    let jobs: Vec<(&ManifestEntry, ModeKind)> = manifest
        .programs
        .iter()
        .flat_map(|e| e.modes.iter().map(move |&m| (e, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(|(e, m)| bench_one(dir, e, *m, opts)).collect()))
}
