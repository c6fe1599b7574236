#![allow(dead_code)]

pub mod wp_suite;

use std::path::PathBuf;

use ghinv::gdeg::GammaAssign;
use ghinv::interp::State;
use ghinv::poly::{rat, ratio};
use ghinv::templates::{enumerate_monomials, GhFilter};
use ghinv::{parse_poly, parse_program, GDeg, Polynomial, Program, Rational, Stmt, Var, VarOrder};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn var(n: &str) -> Var {
    Var::new(n).unwrap()
}

pub fn poly(s: &str) -> Polynomial {
    parse_poly(s).unwrap()
}

pub fn suite_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../suite")
}

pub fn suite_program(name: &str) -> Program {
    let text = std::fs::read_to_string(suite_dir().join(format!("{name}.imp"))).unwrap();
    parse_program(&text).unwrap()
}

pub fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.random_range(-6..=6), rng.random_range(1..=3))
}

pub fn nonzero_rational(rng: &mut ChaCha8Rng) -> Rational {
    loop {
        let r = small_rational(rng);
        if r != rat(0) {
            return r;
        }
    }
}

/// Random polynomial over `vars` with at most `terms` terms of degree <= `deg`.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[Var], deg: u32, terms: usize) -> Polynomial {
    let order = VarOrder::new(vars.iter().copied());
    let monos = enumerate_monomials(&order, deg, None).unwrap();
    let n = rng.random_range(0..=terms);
    Polynomial::from_terms((0..n).map(|_| (monos.choose(rng).unwrap().clone(), small_rational(rng))))
}

pub fn random_state(rng: &mut ChaCha8Rng, vars: &[Var]) -> State {
    vars.iter().map(|&v| (v, small_rational(rng))).collect()
}

/// A fixed, typed variable set for random loop-free programs:
/// x : L, v : L T^-1, t : T, g : L T^-2, k : 1.
pub struct Typed {
    pub vars: Vec<Var>,
    pub gamma: GammaAssign,
}

impl Typed {
    pub fn new() -> Self {
        let names = [("x", "L"), ("v", "L * T^-1"), ("t", "T"), ("g", "L * T^-2"), ("k", "1")];
        let mut gamma = GammaAssign::new();
        let mut vars = Vec::new();
        for (n, d) in names {
            vars.push(var(n));
            gamma.insert(var(n), d.parse().unwrap());
        }
        Typed { vars, gamma }
    }

    pub fn order(&self) -> VarOrder {
        VarOrder::new(self.vars.iter().copied())
    }

    /// Every g-degree realized by a monomial of degree <= `deg`.
    pub fn degrees(&self, deg: u32) -> Vec<GDeg> {
        let mut out: Vec<GDeg> = Vec::new();
        for w in enumerate_monomials(&self.order(), deg, None).unwrap() {
            let d = self.gamma.gdeg_of_monomial(&w).unwrap();
            if !out.contains(&d) {
                out.push(d);
            }
        }
        out
    }

    /// Random nonzero GH polynomial of g-degree `tau` and degree <= `deg`,
    /// or `None` when no monomial has that g-degree.
    pub fn random_gh(&self, rng: &mut ChaCha8Rng, tau: &GDeg, deg: u32, terms: usize) -> Option<Polynomial> {
        let order = self.order();
        let filter = GhFilter {
            gamma: &self.gamma,
            tau,
        };
        let monos = enumerate_monomials(&order, deg, Some(filter)).unwrap();
        if monos.is_empty() {
            return None;
        }
        let n = rng.random_range(1..=terms);
        let mut p = Polynomial::zero();
        for _ in 0..n {
            p.add_term(monos.choose(rng).unwrap().clone(), nonzero_rational(rng));
        }
        if p.is_zero() {
            p.add_term(monos[0].clone(), rat(1));
        }
        Some(p)
    }

    /// Random polynomial mixing several homogeneous components.
    pub fn random_mixed(&self, rng: &mut ChaCha8Rng, deg: u32) -> Polynomial {
        let degrees = self.degrees(deg);
        let mut p = Polynomial::zero();
        for _ in 0..rng.random_range(1..=3) {
            let tau = degrees.choose(rng).unwrap();
            p = &p + &self.random_gh(rng, tau, deg, 2).unwrap();
        }
        p
    }

    /// Random loop-free statement that type-checks under `gamma`.
    pub fn random_stmt(&self, rng: &mut ChaCha8Rng, depth: u32) -> Stmt {
        let choice = if depth == 0 { rng.random_range(0..2) } else { rng.random_range(0..5) };
        match choice {
            0 => Stmt::Skip,
            1 => self.random_assign(rng),
            2 => Stmt::seq(self.random_stmt(rng, depth - 1), self.random_stmt(rng, depth - 1)),
            3 => {
                let degrees = self.degrees(2);
                let tau = degrees.choose(rng).unwrap();
                let guard = self.random_gh(rng, tau, 2, 2).unwrap();
                Stmt::if_zero(guard, self.random_stmt(rng, depth - 1), self.random_stmt(rng, depth - 1))
            }
            _ => Stmt::seq(self.random_assign(rng), self.random_stmt(rng, depth - 1)),
        }
    }

    fn random_assign(&self, rng: &mut ChaCha8Rng) -> Stmt {
        let n = rng.random_range(1..=2);
        let mut targets: Vec<Var> = Vec::new();
        while targets.len() < n {
            let x = *self.vars.choose(rng).unwrap();
            if !targets.contains(&x) {
                targets.push(x);
            }
        }
        let rhs = targets
            .iter()
            .map(|&x| {
                let tau = self.gamma.degree(x).unwrap().clone();
                self.random_gh(rng, &tau, 2, 3).unwrap().into()
            })
            .collect();
        Stmt::Assign { targets, rhs }
    }
}
