//! One test per acceptance criterion. Each prints a PASS/FAIL line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! readable summary.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{poly, suite_dir, suite_program, var, wp_suite};
use ghinv::interp::CheckOptions;
use ghinv::pipeline::{
    bench, check_inclusion, infer, load_manifest, parse_target, span_contains, BenchOptions, InferOptions, ModeKind,
    RunReport, Status, TauChoice,
};
use ghinv::solver::{normalize_invariant, DEFAULT_CAP};
use ghinv::{infer_gamma, parse_poly, GDeg, LiteralPolicy, VarOrder};

const P1: &str = "-g*t + g*t0 - v + v0 - x*rho + x0*rho";
const P2: &str = "-g*t^2 + g*t0^2 - 2*t*v + 2*t0*v0 + 2*x - 2*x0";

fn verdict(n: u32, what: &str, ok: bool, detail: &str) {
    println!("criterion {n} ({what}): {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({what}) failed: {detail}");
}

fn ghinv(args: &[&str]) -> (i32, serde_json::Value) {
    let o = Command::new(env!("CARGO_BIN_EXE_ghinv"))
        .args(args)
        .env_remove("INVGH_SEED")
        .output()
        .unwrap();
    let json = serde_json::from_slice(&o.stdout).unwrap_or(serde_json::Value::Null);
    (o.status.code().unwrap_or(-1), json)
}

fn freefall_file() -> String {
    suite_dir().join("freefall.imp").to_str().unwrap().to_string()
}

fn suite_reports() -> &'static [RunReport] {
    static REPORTS: OnceLock<Vec<RunReport>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        let opts = BenchOptions {
            jobs: 4,
            cap: DEFAULT_CAP,
            check: CheckOptions {
                trials: 100,
                budget: 10_000,
                seed: 42,
                aligned: Vec::new(),
            },
        };
        bench(&suite_dir(), &opts).unwrap()
    })
}

fn find<'a>(reports: &'a [RunReport], name: &str, degree: u32, mode: ModeKind) -> &'a RunReport {
    reports
        .iter()
        .find(|r| r.program == name && r.degree == degree && r.mode == mode)
        .unwrap_or_else(|| panic!("no report for {name} d={degree} {mode}"))
}

#[test]
fn criterion_1_freefall_degree_two() {
    let started = Instant::now();
    let (code, r) = ghinv(&["infer", &freefall_file(), "--degree", "2", "--mode", "gh", "--target", "v"]);
    let elapsed = started.elapsed();
    let program = suite_program("freefall");
    let order = VarOrder::new(program.vars().iter().copied());
    let expected = normalize_invariant(&poly(P1), &order).unwrap();
    let got: Vec<String> = r["invariants"]
        .as_array()
        .map(|a| a.iter().map(|s| s.as_str().unwrap().to_string()).collect())
        .unwrap_or_default();
    let ok = code == 0
        && got.len() == 1
        && parse_poly(&got[0]).unwrap() == expected
        && got[0] == expected.fmt_with(&order)
        && elapsed < Duration::from_secs(5);
    verdict(1, "freefall d=2 gh", ok, &format!("got {got:?}, expected {}, {elapsed:?}", expected.fmt_with(&order)));
}

#[test]
fn criterion_2_freefall_degree_three_basis() {
    let (code, r) = ghinv(&["infer", &freefall_file(), "--degree", "3", "--mode", "gh", "--target", "x", "--emit-basis"]);
    let basis: Vec<_> = r["invariants"]
        .as_array()
        .map(|a| a.iter().map(|s| parse_poly(s.as_str().unwrap()).unwrap()).collect())
        .unwrap_or_default();
    let ok = code == 0 && span_contains(&basis, &poly(P2));
    let shown: Vec<String> = basis.iter().map(|p| p.to_string()).collect();
    verdict(2, "freefall d=3 basis contains the degree-L quantity", ok, &format!("basis {shown:?}"));
}

#[test]
fn criterion_3_template_sizes() {
    let reports = suite_reports();
    let full_ff3 = find(reports, "freefall", 3, ModeKind::Full).template_size;
    let full_sp1 = find(reports, "sumpower1", 3, ModeKind::Full).template_size;
    let full_sp5 = find(reports, "sumpower5", 7, ModeKind::Full).template_size;
    let gh_ff2 = find(reports, "freefall", 2, ModeKind::Gh).template_size;
    let gh_sp5 = find(reports, "sumpower5", 7, ModeKind::Gh).template_size;
    let ok = full_ff3 == 286 && full_sp1 == 35 && full_sp5 == 330 && gh_ff2 == 8 && gh_sp5 < 330;
    verdict(
        3,
        "template sizes",
        ok,
        &format!(
            "freefall d3 full {full_ff3}, sumpower1 full {full_sp1}, sumpower5 full {full_sp5}, freefall d2 gh {gh_ff2}, sumpower5 gh {gh_sp5} (reference 140)"
        ),
    );
}

#[test]
fn criterion_4_dimension_inference() {
    let inf = infer_gamma(&suite_program("freefall"), LiteralPolicy::Coalesced).unwrap();
    // Columns: acceleration, time.
    let reference: [(&str, [i64; 2]); 10] = [
        ("x", [1, 2]),
        ("x0", [1, 2]),
        ("v", [1, 1]),
        ("v0", [1, 1]),
        ("t", [0, 1]),
        ("t0", [0, 1]),
        ("a", [0, 1]),
        ("dt", [0, 1]),
        ("g", [1, 0]),
        ("rho", [0, -1]),
    ];
    let bases = inf.gamma.bases();
    let ours: Vec<Vec<i64>> = reference
        .iter()
        .map(|(v, _)| {
            let d = inf.gamma.degree(var(v)).unwrap();
            bases.iter().map(|b| d.exponent(b)).collect()
        })
        .collect();
    // Column of `bases` playing each reference column.
    let perm = [[0, 1], [1, 0]].into_iter().find(|perm| {
        bases.len() == 2
            && reference
                .iter()
                .zip(&ours)
                .all(|((_, r), o)| (0..2).all(|j| o[perm[j]] == r[j]))
    });
    let mut detail = format!("gamma {}", inf.gamma);
    let ok = match perm {
        None => false,
        Some(perm) => {
            let d1 = inf.gamma.require_gh(&poly(P1)).ok().flatten();
            let d2 = inf.gamma.require_gh(&poly(P2)).ok().flatten();
            let time_inv = GDeg::sym_pow(bases[perm[1]].clone(), -1);
            match (d1, d2) {
                (Some(d1), Some(d2)) => {
                    let ratio = d1.div(&d2);
                    detail = format!("gdeg(p1) = {d1}, gdeg(p2) = {d2}, ratio {ratio}");
                    ratio == time_inv
                }
                _ => false,
            }
        }
    };
    verdict(4, "dimension inference", ok, &detail);
}

#[test]
fn criterion_5_empirical_soundness() {
    let reports = suite_reports();
    let mut found = 0;
    let mut bad = Vec::new();
    for r in reports.iter().filter(|r| r.status == Status::Found) {
        found += 1;
        let passed = !r.check.is_empty()
            && r.check.len() == r.invariants.len()
            && r.check.iter().all(|c| c.passed && c.violations == 0 && c.vacuous + c.terminated == 100);
        if !passed || r.error.is_some() {
            bad.push(format!("{} d={} {}", r.program, r.degree, r.mode));
        }
    }
    verdict(5, "empirical soundness", found > 0 && bad.is_empty(), &format!("{found} found, failing {bad:?}"));
}

#[test]
fn criterion_6_semantic_suites() {
    let started = Instant::now();
    let results = [
        ("loop-free soundness", wp_suite::loop_free_soundness()),
        ("gh/full agreement", wp_suite::gh_full_agreement()),
        ("component correspondence", wp_suite::component_correspondence()),
    ];
    let elapsed = started.elapsed();
    let ok = results.iter().all(|(_, r)| matches!(r, Ok(n) if *n > 0)) && elapsed < Duration::from_secs(60);
    let detail: Vec<String> = results.iter().map(|(n, r)| format!("{n}: {r:?}")).collect();
    verdict(6, "semantic property suites", ok, &format!("{} in {elapsed:?}", detail.join("; ")));
}

#[test]
fn criterion_7_gh_solutions_embed() {
    let manifest = load_manifest(&suite_dir()).unwrap();
    let mut checked = Vec::new();
    let mut ok = true;
    for e in manifest.programs.iter().filter(|e| e.modes.contains(&ModeKind::Gh)) {
        let Some(target) = &e.target else { continue };
        let program = suite_program(e.file.trim_end_matches(".imp"));
        let r = check_inclusion(&program, e.degree, &parse_target(target).unwrap(), &[]).unwrap();
        if r.gh_found {
            ok &= r.satisfied && r.unmapped.is_empty();
            checked.push(format!("{} d={}: {}", e.name, e.degree, r.satisfied));
        }
    }
    verdict(7, "gh solutions satisfy the full system", ok && !checked.is_empty(), &format!("{checked:?}"));
}

#[test]
fn criterion_8_gh_solves_sumpower5_faster() {
    let program = suite_program("sumpower5");
    let fastest = |mode: ModeKind| {
        (0..3)
            .map(|_| {
                let mut opts = InferOptions::new(7, mode);
                if mode == ModeKind::Gh {
                    opts.tau = Some(TauChoice::Target(parse_target("x^7").unwrap()));
                }
                let out = infer("sumpower5", &program, &opts);
                assert_eq!(out.report.status, Status::Found);
                out.report.t_sol_ms
            })
            .fold(f64::INFINITY, f64::min)
    };
    let full = fastest(ModeKind::Full);
    let gh = fastest(ModeKind::Gh);
    verdict(8, "sumpower5 gh t_sol below full", gh < full, &format!("gh {gh:.1} ms, full {full:.1} ms"));
}

#[test]
fn criterion_9_failures_are_reported() {
    let reports = suite_reports();
    let manifest = load_manifest(&suite_dir()).unwrap();
    let expected: usize = manifest.programs.iter().map(|e| e.modes.len()).sum();
    let required = [("freefall", 2), ("freefall", 3), ("sumpower1", 3)];
    let reached = required.iter().all(|&(n, d)| {
        [ModeKind::Gh, ModeKind::Full]
            .iter()
            .all(|&m| find(reports, n, d, m).status == Status::Found)
    });
    let not_found: Vec<String> = reports
        .iter()
        .filter(|r| r.status != Status::Found)
        .map(|r| format!("{} d={} {}: {:?}", r.program, r.degree, r.mode, r.status))
        .collect();
    let ok = reports.len() == expected && reached;
    verdict(9, "honest failure reporting", ok, &format!("{} reports, not found {not_found:?}", reports.len()));
}
