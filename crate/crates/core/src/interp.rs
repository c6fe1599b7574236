//! Bounded concrete execution over exact rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ast::{Program, Stmt};
use crate::error::Result;
use crate::poly::{Polynomial, Rational};
use crate::var::Var;

pub type State = BTreeMap<Var, Rational>;

pub const DEFAULT_BUDGET: u64 = 10_000;

/// Bound on the bit length of any numerator or denominator a run may
/// produce. Diverging loops over rationals grow their values geometrically,
/// which would make the step budget alone very slow to reach.
pub const DEFAULT_MAX_BITS: u64 = 512;

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Terminated { state: State, steps: u64 },
    BudgetExhausted { state: State },
    SizeExceeded { state: State },
}

enum Exhausted {
    Steps,
    Size,
}

struct Machine {
    steps: u64,
    budget: u64,
    max_bits: u64,
}

impl Machine {
    fn tick(&mut self) -> std::result::Result<(), Exhausted> {
        if self.steps >= self.budget {
            return Err(Exhausted::Steps);
        }
        self.steps += 1;
        Ok(())
    }

    fn run(&mut self, c: &Stmt, s: &mut State) -> Result<std::result::Result<(), Exhausted>> {
        match c {
            Stmt::Skip => Ok(self.tick()),
            Stmt::Assign { targets, rhs } => {
                if let Err(e) = self.tick() {
                    return Ok(Err(e));
                }
                let values = rhs.iter().map(|p| p.poly.eval(s)).collect::<Result<Vec<_>>>()?;
                let too_big = values
                    .iter()
                    .any(|v| v.numer().bits() > self.max_bits || v.denom().bits() > self.max_bits);
                for (x, v) in targets.iter().zip(values) {
                    s.insert(*x, v);
                }
                Ok(if too_big { Err(Exhausted::Size) } else { Ok(()) })
            }
            Stmt::Seq(a, b) => match self.run(a, s)? {
                Ok(()) => self.run(b, s),
                e => Ok(e),
            },
            Stmt::If {
                guard,
                then_branch,
                else_branch,
            } => {
                if let Err(e) = self.tick() {
                    return Ok(Err(e));
                }
                if guard.poly.eval(s)?.is_zero() {
                    self.run(then_branch, s)
                } else {
                    self.run(else_branch, s)
                }
            }
            Stmt::While { guard, sense, body } => loop {
                if let Err(e) = self.tick() {
                    return Ok(Err(e));
                }
                if !sense.holds(guard.poly.eval(s)?.is_zero()) {
                    return Ok(Ok(()));
                }
                if let Err(e) = self.run(body, s)? {
                    return Ok(Err(e));
                }
            },
        }
    }
}

/// Runs `c` from `state`. Each statement evaluation costs one step
/// (sequencing is free; a loop pays one step per guard test).
pub fn exec(c: &Stmt, state: &State, budget: u64) -> Result<Outcome> {
    exec_bounded(c, state, budget, DEFAULT_MAX_BITS)
}

/// Like [`exec`], but also stops once an assigned value needs more than
/// `max_bits` bits in its numerator or denominator.
pub fn exec_bounded(c: &Stmt, state: &State, budget: u64, max_bits: u64) -> Result<Outcome> {
    let mut m = Machine {
        steps: 0,
        budget,
        max_bits,
    };
    let mut s = state.clone();
    Ok(match m.run(c, &mut s)? {
        Ok(()) => Outcome::Terminated { state: s, steps: m.steps },
        Err(Exhausted::Steps) => Outcome::BudgetExhausted { state: s },
        Err(Exhausted::Size) => Outcome::SizeExceeded { state: s },
    })
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub trials: usize,
    pub budget: u64,
    pub seed: u64,
    /// Variables sampled as small naturals instead of arbitrary rationals,
    /// so that counting loops terminate often.
    pub aligned: Vec<Var>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            trials: 100,
            budget: DEFAULT_BUDGET,
            seed: 42,
            aligned: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub violations: Vec<(State, State)>,
    pub vacuous_count: usize,
    pub terminated_count: usize,
}

const HEIGHT: i64 = 10;
const ALIGNED_MAX: i64 = 4;

/// Initial state for trial `index`; depends only on `(seed, index)`.
pub fn sample_state(vars: &[Var], aligned: &[Var], seed: u64, index: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    vars.iter()
        .map(|&v| {
            let x = if aligned.contains(&v) {
                Rational::from_integer(BigInt::from(rng.random_range(0..=ALIGNED_MAX)))
            } else {
                let n = rng.random_range(-HEIGHT..=HEIGHT);
                let d = rng.random_range(1..=HEIGHT);
                Rational::new(BigInt::from(n), BigInt::from(d))
            };
            (v, x)
        })
        .collect()
}

/// Samples initial states, runs `program`, and checks that `p` evaluates
/// to 0 in every final state. Runs that exhaust the budget or the size
/// bound are vacuous.
pub fn check_postcondition(program: &Program, p: &Polynomial, opts: &CheckOptions) -> Result<CheckReport> {
    let mut vars: Vec<Var> = program.vars().to_vec();
    for v in p.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let runs = (0..opts.trials)
        .into_par_iter()
        .map(|i| {
            let init = sample_state(&vars, &opts.aligned, opts.seed, i as u64);
            let out = exec(&program.body, &init, opts.budget)?;
            Ok(match out {
                Outcome::Terminated { state, .. } => {
                    let ok = p.eval(&state)?.is_zero();
                    Some((init, state, ok))
                }
                Outcome::BudgetExhausted { .. } | Outcome::SizeExceeded { .. } => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CheckReport {
        passed: true,
        violations: Vec::new(),
        vacuous_count: 0,
        terminated_count: 0,
    };
    for r in runs {
        match r {
            None => report.vacuous_count += 1,
            Some((init, fin, ok)) => {
                report.terminated_count += 1;
                if !ok {
                    report.passed = false;
                    report.violations.push((init, fin));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::parser::{parse_poly, parse_program};
    use crate::poly::rat;

    fn var(n: &str) -> Var {
        Var::new(n).unwrap()
    }

    #[test]
    fn skip_costs_one_step() {
        let s: State = [(var("x"), rat(1))].into_iter().collect();
        assert_eq!(
            exec(&Stmt::Skip, &s, 10).unwrap(),
            Outcome::Terminated { state: s.clone(), steps: 1 }
        );
    }

    #[test]
    fn divergence_exhausts_budget() {
        let p = parse_program("while 0 == 0 { skip; }").unwrap();
        assert!(matches!(
            exec(&p.body, &State::new(), 1000).unwrap(),
            Outcome::BudgetExhausted { .. }
        ));
    }

    #[test]
    fn geometric_growth_hits_size_bound() {
        let p = parse_program("while 0 == 0 { x := 3/2*x; }").unwrap();
        let s: State = [(var("x"), rat(1))].into_iter().collect();
        assert!(matches!(
            exec_bounded(&p.body, &s, 1_000_000, 64).unwrap(),
            Outcome::SizeExceeded { .. }
        ));
    }

    #[test]
    fn unbound_variable() {
        let p = parse_program("x := y;").unwrap();
        assert_eq!(exec(&p.body, &State::new(), 10), Err(Error::UnboundVariable(var("y"))));
    }

    #[test]
    fn simultaneous_assignment_reads_prestate() {
        let p = parse_program("(x, y) := (y, x);").unwrap();
        let s: State = [(var("x"), rat(1)), (var("y"), rat(2))].into_iter().collect();
        let Outcome::Terminated { state, .. } = exec(&p.body, &s, 10).unwrap() else { panic!() };
        assert_eq!(state[&var("x")], rat(2));
        assert_eq!(state[&var("y")], rat(1));
    }

    #[test]
    fn constant_one_always_violated() {
        let p = parse_program("x := 0;").unwrap();
        let r = check_postcondition(&p, &Polynomial::one(), &CheckOptions::default()).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations.len(), 100);
        let r = check_postcondition(&p, &parse_poly("x").unwrap(), &CheckOptions::default()).unwrap();
        assert!(r.passed);
        assert_eq!(r.terminated_count, 100);
    }

    #[test]
    fn sampling_is_deterministic() {
        let vs = [var("x"), var("y")];
        assert_eq!(sample_state(&vs, &[], 7, 3), sample_state(&vs, &[], 7, 3));
        assert_ne!(sample_state(&vs, &[], 7, 3), sample_state(&vs, &[], 7, 4));
        let aligned = sample_state(&vs, &[var("x")], 7, 3);
        assert!(aligned[&var("x")].is_integer());
    }
}
