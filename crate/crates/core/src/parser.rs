//! Lexer and recursive-descent parser for programs and polynomials.

use num_bigint::BigInt;
use num_traits::{Num, Zero};

use crate::ast::{Expr, Loc, PolyExpr, Program, Sense, Stmt};
use crate::error::{Error, Result};
use crate::poly::{Polynomial, Rational};
use crate::var::Var;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational),
    Skip,
    If,
    Else,
    While,
    Semi,
    Assign,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    EqEq,
    NotEq,
    Plus,
    Minus,
    Star,
    Caret,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            t => format!("`{}`", t.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Skip => "skip",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Semi => ";",
            Tok::Assign => ":=",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Caret => "^",
            Tok::Ident(_) => "identifier",
            Tok::Num(_) => "number",
            Tok::Eof => "end of input",
        }
    }
}

fn syntax(loc: Loc, expected: &[&str], found: impl Into<String>) -> Error {
    Error::Syntax {
        line: loc.line,
        column: loc.column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Loc)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let loc = Loc { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "skip" => Tok::Skip,
                "if" => Tok::If,
                "else" => Tok::Else,
                "while" => Tok::While,
                _ => Tok::Ident(word),
            };
            out.push((tok, loc));
            continue;
        }
        if c.is_ascii_digit() {
            let digits = |i: &mut usize| {
                let s = *i;
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
                chars[s..*i].iter().collect::<String>()
            };
            let int_part = digits(&mut i);
            let mut value = Rational::from_integer(BigInt::from_str_radix(&int_part, 10).unwrap());
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let frac = digits(&mut i);
                let num = BigInt::from_str_radix(&format!("{int_part}{frac}"), 10).unwrap();
                let den = BigInt::from(10u32).pow(frac.len() as u32);
                value = Rational::new(num, den);
            }
            if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let den_text = digits(&mut i);
                let den = BigInt::from_str_radix(&den_text, 10).unwrap();
                if den.is_zero() {
                    return Err(syntax(loc, &["nonzero denominator"], format!("{int_part}/{den_text}")));
                }
                value /= Rational::from_integer(den);
            }
            col += i - start;
            out.push((Tok::Num(value), loc));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let tok2 = match two.as_str() {
            ":=" => Some(Tok::Assign),
            "==" => Some(Tok::EqEq),
            "!=" => Some(Tok::NotEq),
            _ => None,
        };
        if let Some(t) = tok2 {
            out.push((t, loc));
            i += 2;
            col += 2;
            continue;
        }
        let tok = match c {
            ';' => Tok::Semi,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            _ => return Err(syntax(loc, &["token"], format!("character `{c}`"))),
        };
        out.push((tok, loc));
        i += 1;
        col += 1;
    }
    out.push((Tok::Eof, Loc { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Loc) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(syntax(self.loc(), expected, self.peek().describe()))
    }

    fn expect(&mut self, t: Tok) -> Result<Loc> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            self.fail(&[t.text()])
        }
    }

    fn ident(&mut self) -> Result<(Var, Loc)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let loc = self.bump().1;
                Ok((Var::intern(&name), loc))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn program(&mut self) -> Result<Program> {
        let mut stmts = vec![self.stmt()?];
        while *self.peek() != Tok::Eof {
            stmts.push(self.stmt()?);
        }
        Ok(Program::new(Stmt::seq_all(stmts)))
    }

    fn block(&mut self) -> Result<Stmt> {
        self.expect(Tok::LBrace)?;
        let mut stmts = vec![self.stmt()?];
        while *self.peek() != Tok::RBrace {
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Stmt::seq_all(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt> {
        match self.peek() {
            Tok::Skip => {
                self.bump();
                self.expect(Tok::Semi)?;
                Ok(Stmt::Skip)
            }
            Tok::If => {
                self.bump();
                let guard = self.poly()?;
                self.expect(Tok::EqEq)?;
                self.zero()?;
                let then_branch = self.block()?;
                self.expect(Tok::Else)?;
                let else_branch = self.block()?;
                Ok(Stmt::If {
                    guard,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            Tok::While => {
                self.bump();
                let guard = self.poly()?;
                let sense = match self.peek() {
                    Tok::EqEq => Sense::EqZero,
                    Tok::NotEq => Sense::NeqZero,
                    _ => return self.fail(&["==", "!="]),
                };
                self.bump();
                self.zero()?;
                let body = self.block()?;
                Ok(Stmt::While {
                    guard,
                    sense,
                    body: Box::new(body),
                })
            }
            Tok::Ident(_) => {
                let (x, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let rhs = self.poly()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Assign {
                    targets: vec![x],
                    rhs: vec![rhs],
                })
            }
            Tok::LParen => {
                let start = self.loc();
                self.bump();
                let mut targets = vec![self.ident()?.0];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    targets.push(self.ident()?.0);
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Assign)?;
                self.expect(Tok::LParen)?;
                let mut rhs = vec![self.poly()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    rhs.push(self.poly()?);
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                if rhs.len() != targets.len() {
                    return Err(syntax(
                        start,
                        &[&format!("{} right-hand sides", targets.len())],
                        format!("{}", rhs.len()),
                    ));
                }
                for (i, t) in targets.iter().enumerate() {
                    if targets[..i].contains(t) {
                        return Err(syntax(start, &["distinct assignment targets"], format!("repeated `{t}`")));
                    }
                }
                Ok(Stmt::Assign { targets, rhs })
            }
            _ => self.fail(&["skip", "if", "while", "identifier", "("]),
        }
    }

    fn zero(&mut self) -> Result<()> {
        match self.peek() {
            Tok::Num(n) if n.is_zero() => {
                self.bump();
                Ok(())
            }
            _ => self.fail(&["0"]),
        }
    }

    fn poly(&mut self) -> Result<PolyExpr> {
        Ok(PolyExpr::new(self.sum()?))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = Expr::Add(Box::new(acc), Box::new(self.product()?));
                }
                Tok::Minus => {
                    self.bump();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.product()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = Expr::Mul(Box::new(acc), Box::new(self.unary()?));
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        match self.peek().clone() {
            Tok::Num(n) if n.is_integer() => {
                let e: u32 = n
                    .to_integer()
                    .try_into()
                    .map_err(|_| syntax(self.loc(), &["small exponent"], n.to_string()))?;
                self.bump();
                Ok(Expr::Pow(Box::new(base), e))
            }
            _ => self.fail(&["nonnegative integer exponent"]),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                let loc = self.bump().1;
                Ok(Expr::Num(n, loc))
            }
            Tok::Ident(_) => {
                let (v, loc) = self.ident()?;
                Ok(Expr::Var(v, loc))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.fail(&["number", "identifier", "("]),
        }
    }
}

pub fn parse_program(src: &str) -> Result<Program> {
    Parser::new(src)?.program()
}

pub fn parse_poly_expr(src: &str) -> Result<PolyExpr> {
    let mut p = Parser::new(src)?;
    let e = p.poly()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

pub fn parse_poly(src: &str) -> Result<Polynomial> {
    Ok(parse_poly_expr(src)?.poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::pretty_print;

    #[test]
    fn skip_program() {
        let p = parse_program("skip;").unwrap();
        assert_eq!(p.body, Stmt::Skip);
        assert!(p.vars.is_empty());
    }

    #[test]
    fn missing_comparison_is_error() {
        match parse_program("while x { skip; }") {
            Err(Error::Syntax {
                line,
                column,
                expected,
                ..
            }) => {
                assert_eq!((line, column), (1, 9));
                assert_eq!(expected, vec!["==".to_string(), "!=".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_comparisons_rejected() {
        assert!(parse_program("if x == 1 { skip; } else { skip; }").is_err());
        assert!(parse_program("while x != 0 { skip; }").is_ok());
        assert!(parse_program("while x < 0 { skip; }").is_err());
    }

    #[test]
    fn simultaneous_assignment() {
        let p = parse_program("(x, y) := (y, x);").unwrap();
        match &p.body {
            Stmt::Assign { targets, rhs } => {
                assert_eq!(targets.len(), 2);
                assert_eq!(rhs[0].poly, parse_poly("y").unwrap());
            }
            s => panic!("{s:?}"),
        }
        assert!(parse_program("(x, x) := (1, 2);").is_err());
        assert!(parse_program("(x, y) := (1);").is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(parse_poly("3/2").unwrap(), Polynomial::constant(crate::poly::ratio(3, 2)));
        assert_eq!(parse_poly("0.25").unwrap(), Polynomial::constant(crate::poly::ratio(1, 4)));
        assert!(parse_poly("1/0").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse_poly("-x^2").unwrap(), -&parse_poly("x*x").unwrap());
        assert_eq!(
            parse_poly("2*(x+1)^2 - 1").unwrap(),
            parse_poly("2*x^2 + 4*x + 1").unwrap()
        );
    }

    #[test]
    fn comments_and_declaration_order() {
        let p = parse_program("# header\nz := y; # trailing\nx := z + w;\n").unwrap();
        let names: Vec<&str> = p.vars().iter().map(|v| v.name()).collect();
        assert_eq!(names, vec!["z", "y", "x", "w"]);
    }

    #[test]
    fn round_trip_freefall() {
        let src = "(x, v, t) := (x0, v0, t0);\nwhile t - a != 0 {\n  (x, v, t) := (x + v*dt, v - g*dt - rho*v*dt, t + dt);\n}\n";
        let p = parse_program(src).unwrap();
        let text = pretty_print(&p);
        let q = parse_program(&text).unwrap();
        assert_eq!(p.body, q.body);
        assert_eq!(pretty_print(&q), text);
    }
}
