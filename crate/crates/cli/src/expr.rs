//! Field expressions: lexer, recursive-descent parser, printers and evaluators.
//!
//! Precedence from tightest: `^` (right associative), unary `-`, `* /`, `+ -` (left associative).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use fiskit_core::logforms::{cq, Cq, Monomial, Poly};
use fiskit_core::{Chart, ScalarField, C64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{CliError, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs2,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs2" => Func::Abs2,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs2 => "abs2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    /// Nonnegative literal, kept with its source text for exact evaluation.
    Num { text: String, value: f64 },
    Imag,
    Var { name: String, pos: Pos },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.prec(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }

    /// Fully parenthesized prefix form, used by golden tests.
    pub fn sexpr(&self) -> String {
        match self {
            Expr::Num { text, .. } => text.clone(),
            Expr::Imag => "i".into(),
            Expr::Var { name, .. } => name.clone(),
            Expr::Neg(a) => format!("(neg {})", a.sexpr()),
            Expr::Bin(op, a, b) => format!("({} {} {})", op.symbol(), a.sexpr(), b.sexpr()),
            Expr::Call(f, a) => format!("({} {})", f.name(), a.sexpr()),
        }
    }

    /// Identifiers referenced, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<(String, Pos)> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids(&self, out: &mut Vec<(String, Pos)>) {
        match self {
            Expr::Var { name, pos } => {
                if !out.iter().any(|(n, _)| n == name) {
                    out.push((name.clone(), *pos));
                }
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_ids(out),
            Expr::Bin(_, a, b) => {
                a.collect_ids(out);
                b.collect_ids(out);
            }
            Expr::Num { .. } | Expr::Imag => {}
        }
    }
}

/// Infix printer with the fewest parentheses that reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(e: &Expr, paren: bool) -> String {
            if paren {
                format!("({e})")
            } else {
                e.to_string()
            }
        }
        match self {
            Expr::Num { text, .. } => write!(f, "{text}"),
            Expr::Imag => write!(f, "i"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "-{}", wrap(a, a.prec() < 3)),
            Expr::Bin(op, a, b) => {
                let p = op.prec();
                let (lp, rp) = if *op == BinOp::Pow { (a.prec() <= p, b.prec() < 3) } else { (a.prec() < p, b.prec() <= p) };
                let sep = if p == 1 { format!(" {} ", op.symbol()) } else { op.symbol().to_string() };
                write!(f, "{}{}{}", wrap(a, lp), sep, wrap(b, rp))
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), pos: Pos { line: 1, column: 1 } }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, CliError> {
        let mut out = Vec::new();
        loop {
            while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
                self.bump();
            }
            let start = self.pos;
            let Some(&c) = self.chars.peek() else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            if c.is_ascii_digit() || c == '.' {
                let mut text = String::new();
                while let Some(&d) = self.chars.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        text.push(d);
                        self.bump();
                    } else if (d == 'e' || d == 'E') && !text.contains(['e', 'E']) {
                        text.push(d);
                        self.bump();
                        if let Some(&s) = self.chars.peek() {
                            if s == '+' || s == '-' {
                                text.push(s);
                                self.bump();
                            }
                        }
                    } else {
                        break;
                    }
                }
                if text.parse::<f64>().is_err() {
                    return Err(CliError::syntax(start, format!("malformed number `{text}`")));
                }
                out.push((Tok::Num(text), start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut text = String::new();
                while let Some(&d) = self.chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        text.push(d);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(text), start));
            } else if "+-*/^(),".contains(c) {
                self.bump();
                out.push((Tok::Sym(c), start));
            } else {
                return Err(CliError::syntax(start, format!("unexpected character `{c}`")));
            }
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, CliError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, CliError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, CliError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, CliError> {
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, CliError> {
        let (tok, pos) = self.next();
        match tok {
            Tok::Num(text) => {
                let value = text.parse().expect("lexer validated the literal");
                Ok(Expr::Num { text, value })
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(CliError::syntax(self.pos(), format!("expected `(` after `{name}`")));
                    }
                    let arg = self.expr()?;
                    if *self.peek() == Tok::Sym(',') {
                        return Err(CliError::syntax(self.pos(), format!("`{name}` takes one argument")));
                    }
                    if !self.eat(')') {
                        return Err(CliError::syntax(self.pos(), "expected `)`".into()));
                    }
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "i" {
                    Ok(Expr::Imag)
                } else if *self.peek() == Tok::Sym('(') {
                    Err(CliError::syntax(pos, format!("unknown function `{name}`")))
                } else {
                    Ok(Expr::Var { name, pos })
                }
            }
            Tok::Sym('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(CliError::syntax(self.pos(), "expected `)`".into()));
                }
                Ok(inner)
            }
            Tok::Sym(c) => Err(CliError::syntax(pos, format!("unexpected `{c}`"))),
            Tok::End => Err(CliError::syntax(pos, "unexpected end of expression".into())),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, CliError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(CliError::syntax(p.pos(), "trailing input".into()));
    }
    Ok(e)
}

/// Names visible to grid evaluation.
#[derive(Debug, Clone)]
pub struct Env {
    chart: Arc<Chart>,
    params: BTreeMap<String, C64>,
    fields: BTreeMap<String, ScalarField>,
}

impl Env {
    pub fn new(chart: Arc<Chart>) -> Self {
        Env { chart, params: BTreeMap::new(), fields: BTreeMap::new() }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn with_param(mut self, name: &str, value: C64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn set_param(&mut self, name: &str, value: C64) {
        self.params.insert(name.into(), value);
    }

    pub fn set_field(&mut self, name: &str, value: ScalarField) {
        self.fields.insert(name.into(), value);
    }

    pub fn field(&self, name: &str) -> Option<&ScalarField> {
        self.fields.get(name)
    }

    fn axis(&self, name: &str) -> Option<usize> {
        self.chart.axes().iter().position(|a| a.name == name)
    }

    /// Whether a name resolves; `x` is accepted as the coordinate vector inside `abs2`.
    pub fn resolves(&self, name: &str) -> bool {
        name == "pi" || name == "x" || self.axis(name).is_some() || self.params.contains_key(name) || self.fields.contains_key(name)
    }

    /// Reports the first identifier that does not resolve.
    pub fn check(&self, e: &Expr) -> Result<(), CliError> {
        for (name, pos) in e.identifiers() {
            if !self.resolves(&name) {
                return Err(CliError::UnknownIdentifier { name, pos });
            }
        }
        Ok(())
    }
}

fn integer_exponent(e: &Expr, env: &Env) -> Result<i32, CliError> {
    let constant = e.identifiers().iter().all(|(n, _)| n == "pi" || env.params.contains_key(n));
    let v = if constant { eval_point(e, env, &[], 0)? } else { C64::new(f64::NAN, 0.0) };
    if v.im != 0.0 || v.re.fract() != 0.0 || v.re.abs() > 64.0 {
        return Err(CliError::Domain { point: None, function: format!("exponent `{e}` must be a constant integer") });
    }
    Ok(v.re as i32)
}

fn on_cut(z: C64) -> bool {
    z.re <= 0.0 && z.im.abs() <= 1e-14 * z.norm().max(f64::MIN_POSITIVE)
}

fn eval_point(e: &Expr, env: &Env, x: &[f64], p: usize) -> Result<C64, CliError> {
    let err = |function: &str| CliError::Domain { point: Some(p), function: function.into() };
    Ok(match e {
        Expr::Num { value, .. } => C64::new(*value, 0.0),
        Expr::Imag => C64::new(0.0, 1.0),
        Expr::Var { name, pos } => {
            if name == "pi" {
                C64::new(std::f64::consts::PI, 0.0)
            } else if let Some(a) = env.axis(name) {
                C64::new(x[a], 0.0)
            } else if let Some(v) = env.params.get(name) {
                *v
            } else if let Some(f) = env.fields.get(name) {
                f.at(p)
            } else {
                return Err(CliError::UnknownIdentifier { name: name.clone(), pos: *pos });
            }
        }
        Expr::Neg(a) => -eval_point(a, env, x, p)?,
        Expr::Bin(op, a, b) => {
            let u = eval_point(a, env, x, p)?;
            match op {
                BinOp::Add => u + eval_point(b, env, x, p)?,
                BinOp::Sub => u - eval_point(b, env, x, p)?,
                BinOp::Mul => u * eval_point(b, env, x, p)?,
                BinOp::Div => {
                    let v = eval_point(b, env, x, p)?;
                    if v.norm() == 0.0 {
                        return Err(err("division by zero"));
                    }
                    u / v
                }
                BinOp::Pow => {
                    let n = integer_exponent(b, env)?;
                    if n < 0 && u.norm() == 0.0 {
                        return Err(err("negative power of zero"));
                    }
                    u.powi(n)
                }
            }
        }
        Expr::Call(Func::Abs2, a) if matches!(&**a, Expr::Var { name, .. } if name == "x" && env.axis("x").is_none() && !env.params.contains_key("x")) => {
            C64::new(x.iter().map(|v| v * v).sum(), 0.0)
        }
        Expr::Call(f, a) => {
            let u = eval_point(a, env, x, p)?;
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Log => {
                    if on_cut(u) {
                        return Err(err("log"));
                    }
                    u.ln()
                }
                Func::Sqrt => {
                    if on_cut(u) && u.norm() != 0.0 {
                        return Err(err("sqrt"));
                    }
                    u.sqrt()
                }
                Func::Abs2 => C64::new(u.norm_sqr(), 0.0),
            }
        }
    })
}

/// Pointwise evaluation on every grid point of the environment's chart.
pub fn evaluate(e: &Expr, env: &Env) -> Result<ScalarField, CliError> {
    env.check(e)?;
    let chart = env.chart.clone();
    let data = (0..chart.len()).map(|p| eval_point(e, env, &chart.point(p), p)).collect::<Result<Vec<_>, _>>()?;
    Ok(ScalarField::from_vec(&chart, data)?)
}

fn decimal_to_rational(text: &str) -> Result<BigRational, CliError> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i64>().map_err(|_| CliError::Validation(format!("bad exponent in `{text}`")))?),
        None => (text, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| CliError::Validation(format!("bad number `{text}`")))? };
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Variables of exact evaluation: `z1..zm`, `zbar1..zbarm`, `t1..tk`.
fn exact_var(name: &str, m: usize, k: usize) -> Option<Poly> {
    let index = |prefix: &str, limit: usize| -> Option<usize> {
        let i: usize = name.strip_prefix(prefix)?.parse().ok()?;
        (1..=limit).contains(&i).then_some(i - 1)
    };
    if let Some(i) = index("zbar", m) {
        return Some(Poly::zbar(m, k, i));
    }
    if let Some(i) = index("z", m) {
        return Some(Poly::z(m, k, i));
    }
    index("t", k).map(|i| Poly::t(m, k, i))
}

fn single_term(p: &Poly) -> Option<(Monomial, Cq)> {
    if p.terms().len() == 1 {
        p.terms().iter().next().map(|(m, c)| (m.clone(), c.clone()))
    } else {
        None
    }
}

fn monomial_inverse(p: &Poly, e: &Expr) -> Result<Poly, CliError> {
    let Some((mono, c)) = single_term(p) else {
        return Err(CliError::Validation(format!("exact division only by monomials, got `{e}`")));
    };
    if mono.zbar.iter().chain(&mono.t).any(|&x| x != 0) {
        return Err(CliError::Validation(format!("cannot divide by z̄ or t in `{e}`")));
    }
    let inv = Monomial { z: mono.z.iter().map(|x| -x).collect(), zbar: mono.zbar.clone(), t: mono.t.clone() };
    Ok(Poly::term(p.m(), p.k(), inv, Cq::one() / c))
}

/// Exact Laurent polynomial value of an expression in `z`, `zbar`, `t` and `i`.
pub fn to_poly(e: &Expr, m: usize, k: usize) -> Result<Poly, CliError> {
    Ok(match e {
        Expr::Num { text, .. } => Poly::constant(m, k, cq(decimal_to_rational(text)?, BigRational::zero())),
        Expr::Imag => Poly::constant(m, k, cq(BigRational::zero(), BigRational::one())),
        Expr::Var { name, pos } => exact_var(name, m, k).ok_or_else(|| CliError::UnknownIdentifier { name: name.clone(), pos: *pos })?,
        Expr::Neg(a) => to_poly(a, m, k)?.neg(),
        Expr::Bin(op, a, b) => {
            let u = to_poly(a, m, k)?;
            match op {
                BinOp::Add => u.add(&to_poly(b, m, k)?),
                BinOp::Sub => u.sub(&to_poly(b, m, k)?),
                BinOp::Mul => u.mul(&to_poly(b, m, k)?),
                BinOp::Div => u.mul(&monomial_inverse(&to_poly(b, m, k)?, b)?),
                BinOp::Pow => {
                    let n = to_poly(b, m, k)?;
                    let Some(c) = n.is_constant().then(|| n.constant_term()) else {
                        return Err(CliError::Validation(format!("exponent `{b}` must be a constant integer")));
                    };
                    if !c.im.is_zero() || !c.re.is_integer() {
                        return Err(CliError::Validation(format!("exponent `{b}` must be a constant integer")));
                    }
                    let n: i64 = c.re.to_integer().try_into().map_err(|_| CliError::Validation("exponent too large".into()))?;
                    if n.abs() > 64 {
                        return Err(CliError::Validation("exponent too large".into()));
                    }
                    let base = if n < 0 { monomial_inverse(&u, a)? } else { u };
                    (0..n.abs()).fold(Poly::one(m, k), |acc, _| acc.mul(&base))
                }
            }
        }
        Expr::Call(f, _) => return Err(CliError::Validation(format!("`{}` is not available in exact expressions", f.name()))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> String {
        parse(text).unwrap().sexpr()
    }

    #[test]
    fn precedence_basics() {
        assert_eq!(s("sin(x1) + i*cos(x2)"), "(+ (sin x1) (* i (cos x2)))");
        assert_eq!(s("x1 ^ 2 ^ 3"), "(^ x1 (^ 2 3))");
        assert_eq!(s("-x1^2"), "(neg (^ x1 2))");
    }

    #[test]
    fn errors_carry_positions() {
        match parse("1 +\n  * 2") {
            Err(CliError::Syntax { pos, .. }) => assert_eq!((pos.line, pos.column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("foo(1)"), Err(CliError::Syntax { .. })));
        assert!(matches!(parse("(1"), Err(CliError::Syntax { .. })));
    }

    #[test]
    fn grid_evaluation() {
        let chart = Chart::torus(2, 8).unwrap();
        let env = Env::new(chart.clone());
        let f = evaluate(&parse("2+sin(x1)").unwrap(), &env).unwrap();
        for p in 0..chart.len() {
            assert_eq!(f.at(p), C64::new(2.0 + chart.point(p)[0].sin(), 0.0));
        }
        let u = evaluate(&parse("exp(i*x1)").unwrap(), &env).unwrap();
        assert!(u.data().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert!(evaluate(&parse("i").unwrap(), &env).unwrap().data().iter().all(|z| *z == C64::new(0.0, 1.0)));
    }

    #[test]
    fn domain_errors() {
        let env = Env::new(Chart::torus(1, 8).unwrap());
        assert!(matches!(evaluate(&parse("log(x1)").unwrap(), &env), Err(CliError::Domain { point: Some(0), .. })));
        assert!(matches!(evaluate(&parse("sqrt(-1 - x1)").unwrap(), &env), Err(CliError::Domain { .. })));
        assert!(matches!(evaluate(&parse("x1^x1").unwrap(), &env), Err(CliError::Domain { point: None, .. })));
        assert!(matches!(evaluate(&parse("y").unwrap(), &env), Err(CliError::UnknownIdentifier { .. })));
    }

    #[test]
    fn ball_weight_expression() {
        let chart = Chart::torus(2, 8).unwrap();
        let env = Env::new(chart.clone()).with_param("eps", C64::new(10.0, 0.0));
        let f = evaluate(&parse("-log(eps^2 - abs2(x))").unwrap(), &env).unwrap();
        for p in 0..chart.len() {
            let x = chart.point(p);
            assert!((f.at(p).re + (100.0 - x[0] * x[0] - x[1] * x[1]).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_values() {
        let p = to_poly(&parse("z2/z1 + 0.5*zbar1 - 3e-1").unwrap(), 2, 0).unwrap();
        assert_eq!(p.to_string(), "z1^-1*z2 - 3/10 + 1/2*zbar1");
        assert!(to_poly(&parse("1/(z1+z2)").unwrap(), 2, 0).is_err());
        assert!(to_poly(&parse("sin(z1)").unwrap(), 1, 0).is_err());
        assert_eq!(to_poly(&parse("z1^-2").unwrap(), 1, 0).unwrap(), Poly::z_pow(1, 0, 0, -2));
    }
}
