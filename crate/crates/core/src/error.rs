use thiserror::Error;

use crate::var::Var;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{line}:{column}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("invalid variable name `{0}`")]
    InvalidName(String),

    #[error("variable `{0}` is unbound")]
    UnboundVariable(Var),

    #[error("not generalized homogeneous: {0}")]
    NotGh(String),

    #[error("no monomial of degree <= {degree} has g-degree {tau}")]
    EmptyTemplate { degree: u32, tau: String },

    #[error("statement contains a loop")]
    ContainsLoop,

    #[error("g-degree constraints are unsatisfiable: {0} = 1")]
    Unsatisfiable(String),

    #[error("equality constraint too large: |G| = {lhs}, |G'| = {rhs}, cap = {cap}")]
    CapExceeded { lhs: usize, rhs: usize, cap: usize },

    #[error("no nontrivial solution")]
    NoSolution,

    #[error("cannot normalize the zero polynomial")]
    ZeroPolynomial,

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
