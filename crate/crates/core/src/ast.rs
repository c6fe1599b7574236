//! Abstract syntax of the guarded-polynomial imperative language.

use std::fmt;

use num_traits::{One, Zero};

use crate::poly::{Polynomial, Rational};
use crate::var::{Var, VarOrder};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Source-level polynomial expression. Kept alongside the normalized
/// polynomial so that individual literal occurrences can be rewritten.
#[derive(Clone, Debug)]
pub enum Expr {
    Num(Rational, Loc),
    Var(Var, Loc),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn to_poly(&self) -> Polynomial {
        match self {
            Expr::Num(c, _) => Polynomial::constant(c.clone()),
            Expr::Var(v, _) => Polynomial::var(*v),
            Expr::Neg(e) => -&e.to_poly(),
            Expr::Add(a, b) => &a.to_poly() + &b.to_poly(),
            Expr::Sub(a, b) => &a.to_poly() - &b.to_poly(),
            Expr::Mul(a, b) => &a.to_poly() * &b.to_poly(),
            Expr::Pow(a, e) => a.to_poly().pow(*e),
        }
    }

    /// Builds an expression tree spelling out `p` term by term.
    pub fn from_poly(p: &Polynomial) -> Expr {
        let loc = Loc::default();
        let mut acc: Option<Expr> = None;
        for (m, c) in p.terms() {
            let mut term: Option<Expr> = if c.is_one() && !m.is_one() {
                None
            } else {
                Some(Expr::Num(c.clone(), loc))
            };
            for (v, e) in m.factors() {
                let base = Expr::Var(v, loc);
                let factor = if e == 1 { base } else { Expr::Pow(Box::new(base), e) };
                term = Some(match term {
                    None => factor,
                    Some(t) => Expr::Mul(Box::new(t), Box::new(factor)),
                });
            }
            let term = term.expect("nonzero term");
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::Add(Box::new(a), Box::new(term)),
            });
        }
        acc.unwrap_or_else(|| Expr::Num(Rational::zero(), loc))
    }

    pub(crate) fn map_literals(&self, f: &mut impl FnMut(&Rational, Loc) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(c, loc) => f(c, *loc).unwrap_or_else(|| self.clone()),
            Expr::Var(..) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.map_literals(f))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.map_literals(f)), Box::new(b.map_literals(f))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.map_literals(f)), Box::new(b.map_literals(f))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.map_literals(f)), Box::new(b.map_literals(f))),
            Expr::Pow(a, e) => Expr::Pow(Box::new(a.map_literals(f)), *e),
        }
    }

    pub(crate) fn map_vars(&self, f: &mut impl FnMut(Var) -> Option<Var>) -> Expr {
        match self {
            Expr::Num(..) => self.clone(),
            Expr::Var(v, loc) => Expr::Var(f(*v).unwrap_or(*v), *loc),
            Expr::Neg(e) => Expr::Neg(Box::new(e.map_vars(f))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Expr::Pow(a, e) => Expr::Pow(Box::new(a.map_vars(f)), *e),
        }
    }

    pub(crate) fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(..) => {}
            Expr::Var(v, _) => f(*v),
            Expr::Neg(e) | Expr::Pow(e, _) => e.visit_vars(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }
}

/// A polynomial together with the expression it was written as. Equality
/// compares the polynomials only.
#[derive(Clone, Debug)]
pub struct PolyExpr {
    pub expr: Expr,
    pub poly: Polynomial,
}

impl PolyExpr {
    pub fn new(expr: Expr) -> Self {
        let poly = expr.to_poly();
        PolyExpr { expr, poly }
    }

    pub fn from_poly(poly: Polynomial) -> Self {
        PolyExpr {
            expr: Expr::from_poly(&poly),
            poly,
        }
    }
}

impl PartialEq for PolyExpr {
    fn eq(&self, other: &Self) -> bool {
        self.poly == other.poly
    }
}

impl From<Polynomial> for PolyExpr {
    fn from(p: Polynomial) -> Self {
        PolyExpr::from_poly(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    EqZero,
    NeqZero,
}

impl Sense {
    pub fn holds(self, value_is_zero: bool) -> bool {
        match self {
            Sense::EqZero => value_is_zero,
            Sense::NeqZero => !value_is_zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Skip,
    /// Simultaneous assignment; all right-hand sides read the pre-state.
    Assign {
        targets: Vec<Var>,
        rhs: Vec<PolyExpr>,
    },
    Seq(Box<Stmt>, Box<Stmt>),
    /// `if guard == 0 { then } else { else }`
    If {
        guard: PolyExpr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    While {
        guard: PolyExpr,
        sense: Sense,
        body: Box<Stmt>,
    },
}

impl Stmt {
    pub fn assign(x: Var, p: Polynomial) -> Stmt {
        Stmt::Assign {
            targets: vec![x],
            rhs: vec![p.into()],
        }
    }

    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of `stmts`; `Skip` when empty.
    pub fn seq_all(stmts: impl IntoIterator<Item = Stmt>) -> Stmt {
        let mut items: Vec<Stmt> = stmts.into_iter().collect();
        let mut acc = match items.pop() {
            None => return Stmt::Skip,
            Some(last) => last,
        };
        while let Some(s) = items.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    pub fn if_zero(guard: Polynomial, then_branch: Stmt, else_branch: Stmt) -> Stmt {
        Stmt::If {
            guard: guard.into(),
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    pub fn while_loop(guard: Polynomial, sense: Sense, body: Stmt) -> Stmt {
        Stmt::While {
            guard: guard.into(),
            sense,
            body: Box::new(body),
        }
    }

    pub fn contains_loop(&self) -> bool {
        match self {
            Stmt::Skip | Stmt::Assign { .. } => false,
            Stmt::Seq(a, b) => a.contains_loop() || b.contains_loop(),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => then_branch.contains_loop() || else_branch.contains_loop(),
            Stmt::While { .. } => true,
        }
    }

    /// Every polynomial in the statement, in source order.
    pub fn polys(&self) -> Vec<&PolyExpr> {
        let mut out = Vec::new();
        self.collect_polys(&mut out);
        out
    }

    fn collect_polys<'a>(&'a self, out: &mut Vec<&'a PolyExpr>) {
        match self {
            Stmt::Skip => {}
            Stmt::Assign { rhs, .. } => out.extend(rhs.iter()),
            Stmt::Seq(a, b) => {
                a.collect_polys(out);
                b.collect_polys(out);
            }
            Stmt::If {
                guard,
                then_branch,
                else_branch,
            } => {
                out.push(guard);
                then_branch.collect_polys(out);
                else_branch.collect_polys(out);
            }
            Stmt::While { guard, body, .. } => {
                out.push(guard);
                body.collect_polys(out);
            }
        }
    }

    /// Guard polynomials in source order, without duplicates.
    pub fn guards(&self) -> Vec<Polynomial> {
        fn go(s: &Stmt, out: &mut Vec<Polynomial>) {
            match s {
                Stmt::Skip | Stmt::Assign { .. } => {}
                Stmt::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Stmt::If {
                    guard,
                    then_branch,
                    else_branch,
                } => {
                    if !out.contains(&guard.poly) {
                        out.push(guard.poly.clone());
                    }
                    go(then_branch, out);
                    go(else_branch, out);
                }
                Stmt::While { guard, body, .. } => {
                    if !out.contains(&guard.poly) {
                        out.push(guard.poly.clone());
                    }
                    go(body, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Variables in order of first occurrence (assignment targets before
    /// their right-hand sides).
    pub fn vars_in_order(&self) -> VarOrder {
        fn go(s: &Stmt, out: &mut VarOrder) {
            match s {
                Stmt::Skip => {}
                Stmt::Assign { targets, rhs } => {
                    for &t in targets {
                        out.push(t);
                    }
                    for r in rhs {
                        r.expr.visit_vars(&mut |v| out.push(v));
                        for v in r.poly.vars() {
                            out.push(v);
                        }
                    }
                }
                Stmt::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Stmt::If {
                    guard,
                    then_branch,
                    else_branch,
                } => {
                    guard.expr.visit_vars(&mut |v| out.push(v));
                    for v in guard.poly.vars() {
                        out.push(v);
                    }
                    go(then_branch, out);
                    go(else_branch, out);
                }
                Stmt::While { guard, body, .. } => {
                    guard.expr.visit_vars(&mut |v| out.push(v));
                    for v in guard.poly.vars() {
                        out.push(v);
                    }
                    go(body, out);
                }
            }
        }
        let mut out = VarOrder::default();
        go(self, &mut out);
        out
    }

    /// Applies `f` to every polynomial expression.
    pub fn map_exprs(&self, f: &mut impl FnMut(&PolyExpr) -> PolyExpr) -> Stmt {
        match self {
            Stmt::Skip => Stmt::Skip,
            Stmt::Assign { targets, rhs } => Stmt::Assign {
                targets: targets.clone(),
                rhs: rhs.iter().map(&mut *f).collect(),
            },
            Stmt::Seq(a, b) => Stmt::seq(a.map_exprs(f), b.map_exprs(f)),
            Stmt::If {
                guard,
                then_branch,
                else_branch,
            } => Stmt::If {
                guard: f(guard),
                then_branch: Box::new(then_branch.map_exprs(f)),
                else_branch: Box::new(else_branch.map_exprs(f)),
            },
            Stmt::While { guard, sense, body } => Stmt::While {
                guard: f(guard),
                sense: *sense,
                body: Box::new(body.map_exprs(f)),
            },
        }
    }

    fn flatten<'a>(&'a self, out: &mut Vec<&'a Stmt>) {
        match self {
            Stmt::Seq(a, b) => {
                a.flatten(out);
                b.flatten(out);
            }
            s => out.push(s),
        }
    }

    fn pretty(&self, order: &VarOrder, indent: usize, out: &mut String) {
        let pad = "    ".repeat(indent);
        let mut items = Vec::new();
        self.flatten(&mut items);
        for s in items {
            match s {
                Stmt::Skip => {
                    out.push_str(&pad);
                    out.push_str("skip;\n");
                }
                Stmt::Assign { targets, rhs } => {
                    out.push_str(&pad);
                    if targets.len() == 1 {
                        out.push_str(&format!("{} := {};\n", targets[0], rhs[0].poly.fmt_with(order)));
                    } else {
                        let lhs: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
                        let rs: Vec<String> = rhs.iter().map(|r| r.poly.fmt_with(order)).collect();
                        out.push_str(&format!("({}) := ({});\n", lhs.join(", "), rs.join(", ")));
                    }
                }
                Stmt::If {
                    guard,
                    then_branch,
                    else_branch,
                } => {
                    out.push_str(&format!("{pad}if {} == 0 {{\n", guard.poly.fmt_with(order)));
                    then_branch.pretty(order, indent + 1, out);
                    out.push_str(&format!("{pad}}} else {{\n"));
                    else_branch.pretty(order, indent + 1, out);
                    out.push_str(&format!("{pad}}}\n"));
                }
                Stmt::While { guard, sense, body } => {
                    let op = match sense {
                        Sense::EqZero => "==",
                        Sense::NeqZero => "!=",
                    };
                    out.push_str(&format!("{pad}while {} {op} 0 {{\n", guard.poly.fmt_with(order)));
                    body.pretty(order, indent + 1, out);
                    out.push_str(&format!("{pad}}}\n"));
                }
                Stmt::Seq(..) => unreachable!("flattened"),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub body: Stmt,
    /// Declaration order: first occurrence in the source.
    pub vars: VarOrder,
}

impl Program {
    pub fn new(body: Stmt) -> Self {
        let vars = body.vars_in_order();
        Program { body, vars }
    }

    pub fn vars(&self) -> &[Var] {
        self.vars.vars()
    }
}

/// Canonical source text: polynomials in graded-lex order over the
/// program's declaration order.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    p.body.pretty(&p.vars, 0, &mut out);
    out
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

/// One lifted literal occurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct LiteralEntry {
    pub var: Var,
    pub value: Rational,
    pub loc: Loc,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LiteralTable {
    pub entries: Vec<LiteralEntry>,
}

impl LiteralTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct lifted variables with their values, in first-occurrence order.
    pub fn bindings(&self) -> Vec<(Var, Rational)> {
        let mut out: Vec<(Var, Rational)> = Vec::new();
        for e in &self.entries {
            if !out.iter().any(|(v, _)| *v == e.var) {
                out.push((e.var, e.value.clone()));
            }
        }
        out
    }

    /// Substitution putting the original literal values back.
    pub fn restore(&self) -> std::collections::HashMap<Var, Polynomial> {
        self.bindings()
            .into_iter()
            .map(|(v, c)| (v, Polynomial::constant(c)))
            .collect()
    }
}

/// How numeric literals are treated before degree inference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LiteralPolicy {
    /// Literals stay constants (g-degree 1).
    None,
    /// Every nonzero literal occurrence becomes its own fresh variable.
    AllOccurrences,
    /// As `AllOccurrences`, then occurrences with equal value and equal
    /// inferred degree are merged into one variable. Lifting itself
    /// behaves like `AllOccurrences`; merging happens during inference.
    #[default]
    Coalesced,
}

/// The first `n` names `k1, k2, ...` that do not clash with `p`'s variables.
pub fn fresh_names(p: &Program, n: usize) -> Vec<Var> {
    let mut out = Vec::with_capacity(n);
    let mut i = 1usize;
    while out.len() < n {
        let v = Var::intern(&format!("k{i}"));
        i += 1;
        if !p.vars.contains(v) {
            out.push(v);
        }
    }
    out
}

/// Replaces nonzero literal occurrences by fresh variables. Literal 0 is
/// never lifted. The lifted program declares the original variables
/// first, then the fresh ones in occurrence order.
pub fn lift_literals(p: &Program, policy: LiteralPolicy) -> (Program, LiteralTable) {
    if policy == LiteralPolicy::None {
        return (p.clone(), LiteralTable::default());
    }
    let mut count = 0usize;
    p.body.map_exprs(&mut |e| {
        e.expr.map_literals(&mut |c, _| {
            if !c.is_zero() {
                count += 1;
            }
            None
        });
        e.clone()
    });
    let names = fresh_names(p, count);
    let mut entries = Vec::new();
    let body = p.body.map_exprs(&mut |e| {
        let expr = e.expr.map_literals(&mut |c, loc| {
            if c.is_zero() {
                return None;
            }
            let var = names[entries.len()];
            entries.push(LiteralEntry {
                var,
                value: c.clone(),
                loc,
            });
            Some(Expr::Var(var, loc))
        });
        PolyExpr::new(expr)
    });
    let mut vars = p.vars.clone();
    for &v in &names {
        vars.push(v);
    }
    (Program { body, vars }, LiteralTable { entries })
}
