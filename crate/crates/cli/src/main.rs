use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ghinv::interp::{check_postcondition, CheckOptions, DEFAULT_BUDGET};
use ghinv::pipeline::{
    aligned_vars, bench, infer, parse_target, self_check, BenchOptions, InferOptions, ModeKind, RunReport, Status,
    TauChoice,
};
use ghinv::solver::DEFAULT_CAP;
use ghinv::{infer_gamma, parse_poly, parse_program, Error, GDeg, LiteralPolicy, Program, Var};

const EXIT_NO_SOLUTION: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_CAP: u8 = 4;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "ghinv", version, about = "Algebraic invariant synthesis with generalized-homogeneous templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Gh,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiteralsArg {
    None,
    All,
    Coalesced,
}

impl From<LiteralsArg> for LiteralPolicy {
    fn from(l: LiteralsArg) -> Self {
        match l {
            LiteralsArg::None => LiteralPolicy::None,
            LiteralsArg::All => LiteralPolicy::AllOccurrences,
            LiteralsArg::Coalesced => LiteralPolicy::Coalesced,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an invariant holding at program exit.
    Infer {
        program: PathBuf,
        #[arg(long, short)]
        degree: u32,
        #[arg(long, value_enum, default_value = "gh")]
        mode: ModeArg,
        /// Monomial whose g-degree selects the template (gh mode).
        #[arg(long, conflicts_with = "tau_sweep")]
        target: Option<String>,
        /// Try every g-degree realized by a monomial of degree <= d.
        #[arg(long)]
        tau_sweep: bool,
        /// Extra multiplier polynomial for matching (repeatable).
        #[arg(long = "mult")]
        mults: Vec<String>,
        /// Report a basis of all invariants found instead of one.
        #[arg(long)]
        emit_basis: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value = "coalesced")]
        literals: LiteralsArg,
        /// Fix a variable's g-degree, e.g. `g=L*T^-2` (repeatable).
        #[arg(long = "pin")]
        pins: Vec<String>,
        /// Check each invariant empirically after synthesis.
        #[arg(long)]
        check: bool,
        /// Sample time-like variables as small naturals during the check.
        #[arg(long)]
        align: bool,
    },
    /// Print the inferred g-degree assignment and the lifted literals.
    Gamma {
        program: PathBuf,
        #[arg(long, value_enum, default_value = "coalesced")]
        literals: LiteralsArg,
        #[arg(long = "pin")]
        pins: Vec<String>,
    },
    /// Test a candidate invariant on random terminating runs.
    Check {
        program: PathBuf,
        #[arg(long)]
        invariant: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        steps: u64,
        /// Defaults to $INVGH_SEED, then 42.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        align: bool,
    },
    /// Run every program of a suite directory and write a JSON report.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn input(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        err: err.into(),
    }
}

fn classify(e: Error) -> Failure {
    let code = match &e {
        Error::Syntax { .. } | Error::InvalidName(_) | Error::Input(_) | Error::UnboundVariable(_) | Error::NotGh(_) => {
            EXIT_INPUT
        }
        Error::NoSolution | Error::EmptyTemplate { .. } => EXIT_NO_SOLUTION,
        Error::CapExceeded { .. } => EXIT_CAP,
        _ => EXIT_INTERNAL,
    };
    Failure { code, err: e.into() }
}

fn read_program(path: &Path) -> Result<Program, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    parse_program(&text)
        .map_err(|e| input(anyhow::Error::from(e).context(path.display().to_string())))
}

fn parse_pins(pins: &[String]) -> Result<Vec<(Var, GDeg)>, Failure> {
    pins.iter()
        .map(|s| {
            let (v, d) = s
                .split_once('=')
                .ok_or_else(|| input(anyhow::anyhow!("pin `{s}` must look like var=DEGREE")))?;
            let var = Var::new(v.trim()).map_err(classify)?;
            let deg: GDeg = d.parse().map_err(classify)?;
            Ok((var, deg))
        })
        .collect()
}

fn default_seed(seed: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("INVGH_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .with_context(|| format!("INVGH_SEED=`{s}` is not an integer"))
            .map_err(input),
        Err(_) => Ok(42),
    }
}

fn program_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Found => 0,
        Status::NoSolution | Status::EmptyTemplate => EXIT_NO_SOLUTION,
        Status::CapExceeded => EXIT_CAP,
        Status::Error => EXIT_INTERNAL,
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        err: e.into(),
    })?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Infer {
            program,
            degree,
            mode,
            target,
            tau_sweep,
            mults,
            emit_basis,
            cap,
            literals,
            pins,
            check,
            align,
        } => {
            let prog = read_program(&program)?;
            let mode = match mode {
                ModeArg::Full => ModeKind::Full,
                ModeArg::Gh => ModeKind::Gh,
            };
            let mut opts = InferOptions::new(degree, mode);
            opts.emit_basis = emit_basis;
            opts.cap = cap;
            opts.literal_policy = literals.into();
            opts.pins = parse_pins(&pins)?;
            for m in &mults {
                opts.extra_mults.push(parse_poly(m).map_err(classify)?);
            }
            if mode == ModeKind::Gh {
                opts.tau = match (&target, tau_sweep) {
                    (Some(t), _) => Some(TauChoice::Target(parse_target(t).map_err(classify)?)),
                    (None, true) => Some(TauChoice::Sweep),
                    (None, false) => return Err(input(anyhow::anyhow!("gh mode needs --target or --tau-sweep"))),
                };
            }
            let mut outcome = infer(&program_name(&program), &prog, &opts);
            if outcome.report.status == Status::Error {
                if let Some(msg) = &outcome.report.error {
                    eprintln!("error: {msg}");
                }
            }
            if check && outcome.report.status == Status::Found {
                let mut copts = CheckOptions {
                    seed: default_seed(None)?,
                    ..CheckOptions::default()
                };
                if align {
                    copts.aligned = aligned_vars(&prog).map_err(classify)?;
                }
                self_check(&prog, &mut outcome, &copts).map_err(classify)?;
            }
            print_json(&outcome.report)?;
            Ok(status_code(outcome.report.status))
        }
        Command::Gamma { program, literals, pins } => {
            let prog = read_program(&program)?;
            let pins = parse_pins(&pins)?;
            let inf = if pins.is_empty() {
                infer_gamma(&prog, literals.into())
            } else {
                ghinv::gdeg::infer_gamma_pinned(&prog, literals.into(), &pins)
            }
            .map_err(classify)?;
            print!("{}", inf.gamma);
            if !inf.literals.is_empty() {
                println!();
                for e in &inf.literals.entries {
                    println!("{} = {} @ {}", e.var, e.value, e.loc);
                }
            }
            Ok(0)
        }
        Command::Check {
            program,
            invariant,
            trials,
            steps,
            seed,
            align,
        } => {
            let prog = read_program(&program)?;
            let p = parse_poly(&invariant).map_err(classify)?;
            let mut opts = CheckOptions {
                trials,
                budget: steps,
                seed: default_seed(seed)?,
                aligned: Vec::new(),
            };
            if align {
                opts.aligned = aligned_vars(&prog).map_err(classify)?;
            }
            let report = check_postcondition(&prog, &p, &opts).map_err(classify)?;
            let show = |s: &ghinv::interp::State| -> serde_json::Value {
                s.iter().map(|(v, x)| (v.to_string(), serde_json::Value::String(x.to_string()))).collect()
            };
            let violations: Vec<serde_json::Value> = report
                .violations
                .iter()
                .map(|(a, b)| serde_json::json!({"initial": show(a), "final": show(b)}))
                .collect();
            print_json(&serde_json::json!({
                "program": program_name(&program),
                "invariant": invariant,
                "passed": report.passed,
                "trials": trials,
                "terminated": report.terminated_count,
                "vacuous": report.vacuous_count,
                "violations": violations,
            }))?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Bench {
            suite,
            out,
            jobs,
            cap,
            seed,
        } => {
            let opts = BenchOptions {
                jobs,
                cap,
                check: CheckOptions {
                    seed: default_seed(seed)?,
                    ..CheckOptions::default()
                },
            };
            let reports = bench(&suite, &opts).map_err(classify)?;
            let text = serde_json::to_string_pretty(&reports).map_err(|e| Failure {
                code: EXIT_INTERNAL,
                err: e.into(),
            })?;
            match &out {
                Some(path) => std::fs::write(path, text + "\n")
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(input)?,
                None => println!("{text}"),
            }
            print_table(&reports, out.is_some());
            Ok(0)
        }
    }
}

fn print_table(reports: &[RunReport], to_stdout: bool) {
    let mut lines = vec![format!(
        "{:<12} {:>3} {:>8} {:>8} {:>10} {:>10} {:<12} {:<12}",
        "program", "deg", "#m full", "#m gh", "t_sol full", "t_sol gh", "full", "gh"
    )];
    let mut seen: Vec<(&str, u32)> = Vec::new();
    for r in reports {
        let key = (r.program.as_str(), r.degree);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let find = |m: ModeKind| {
            reports
                .iter()
                .find(|x| x.program == r.program && x.degree == r.degree && x.mode == m)
        };
        let (f, g) = (find(ModeKind::Full), find(ModeKind::Gh));
        let size = |x: Option<&RunReport>| x.map_or("-".into(), |x| x.template_size.to_string());
        let time = |x: Option<&RunReport>| x.map_or("-".into(), |x| format!("{:.1}", x.t_sol_ms));
        let status = |x: Option<&RunReport>| x.map_or("-".into(), |x| format!("{:?}", x.status));
        lines.push(format!(
            "{:<12} {:>3} {:>8} {:>8} {:>10} {:>10} {:<12} {:<12}",
            r.program,
            r.degree,
            size(f),
            size(g),
            time(f),
            time(g),
            status(f),
            status(g)
        ));
    }
    for l in lines {
        if to_stdout {
            println!("{l}");
        } else {
            eprintln!("{l}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
