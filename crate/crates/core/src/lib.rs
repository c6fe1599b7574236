//! Synthesis of algebraic invariants with generalized-homogeneous
//! templates.

pub mod ast;
pub mod error;
pub mod gdeg;
pub mod interp;
pub mod linalg;
pub mod parser;
pub mod pipeline;
pub mod poly;
pub mod solver;
pub mod template;
pub mod templates;
pub mod var;
pub mod wp;

pub use ast::{lift_literals, pretty_print, LiteralPolicy, LiteralTable, Program, Sense, Stmt};
pub use error::{Error, Result};
pub use gdeg::{infer_gamma, unify, GDeg, GSym, GammaAssign};
pub use parser::{parse_poly, parse_program};
pub use poly::{Monomial, Polynomial, Rational};
pub use var::{Var, VarOrder};
