//! A small expression language for the right-hand sides `f(t, y, z)`.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := signed (('*' | '/') signed)*
//! signed := '-' signed | power
//! power  := atom ('^' signed)?
//! atom   := number | 't' | 'y' | 'z' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'log' | 'sqrt'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-y^2`
//! is `-(y^2)` and `2^-1` is `0.5`. `log` is the natural logarithm.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    Y,
    Z,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::Y => "y",
            Var::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Point at which an expression is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub y: f64,
    pub z: f64,
}

impl EvalPoint {
    pub fn new(t: f64, y: f64, z: f64) -> Self {
        Self { t, y, z }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    UnexpectedToken(String),
    UnknownIdentifier(String),
    InvalidNumber(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} at byte {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Empty => "empty expression".into(),
        ParseErrorKind::UnexpectedChar(c) => format!("unexpected character '{c}'"),
        ParseErrorKind::UnexpectedEnd => "unexpected end of input".into(),
        ParseErrorKind::UnexpectedToken(t) => format!("unexpected '{t}'"),
        ParseErrorKind::UnknownIdentifier(s) => format!("unknown identifier '{s}'"),
        ParseErrorKind::InvalidNumber(s) => format!("invalid number '{s}'"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    /// Negative base with a non-integer exponent.
    PowerDomain,
    NonFinite,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogOfNonPositive => "log of a non-positive value",
            DomainErrorKind::SqrtOfNegative => "sqrt of a negative value",
            DomainErrorKind::PowerDomain => "non-integer power of a negative value",
            DomainErrorKind::NonFinite => "non-finite result",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: DomainErrorKind,
    /// The offending subexpression, printed.
    pub subexpr: String,
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => f.write_str(s),
            Token::Plus => f.write_str("+"),
            Token::Minus => f.write_str("-"),
            Token::Star => f.write_str("*"),
            Token::Slash => f.write_str("/"),
            Token::Caret => f.write_str("^"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        let start = pos;
        let single = match c {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            pos += 1;
        } else if c.is_ascii_whitespace() {
            pos += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            // optional exponent, only when followed by digits
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut look = pos + 1;
                if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                    look += 1;
                }
                if look < bytes.len() && bytes[look].is_ascii_digit() {
                    pos = look;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
            }
            let text = &src[start..pos];
            let value: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                offset: start,
            })?;
            out.push((Token::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            out.push((Token::Ident(src[start..pos].to_string()), start));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError {
                kind: ParseErrorKind::UnexpectedChar(ch),
                offset: start,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |&(_, o)| o)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.tokens.get(self.pos) {
            None => ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                offset: self.end,
            },
            Some((t, o)) => ParseError {
                kind: ParseErrorKind::UnexpectedToken(t.to_string()),
                offset: *o,
            },
        }
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinaryOp::Add,
                Some(Token::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.signed()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinaryOp::Mul,
                Some(Token::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.signed()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn signed(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            let inner = self.signed()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exponent = self.signed()?;
            return Ok(Expr::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Var(Var::T)),
                "y" => Ok(Expr::Var(Var::Y)),
                "z" => Ok(Expr::Var(Var::Z)),
                "exp" | "log" | "sqrt" => {
                    let op = match name.as_str() {
                        "exp" => UnaryOp::Exp,
                        "log" => UnaryOp::Log,
                        _ => UnaryOp::Sqrt,
                    };
                    self.expect(Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(Expr::Unary(op, Box::new(arg)))
                }
                _ => Err(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name),
                    offset,
                }),
            },
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected())
            }
            None => Err(ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                offset: self.end,
            }),
        }
    }
}

/// Parses an expression in `t`, `y` and `z`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        end: source.len(),
    };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn check(kind: DomainErrorKind, e: &Expr) -> EvalError {
    EvalError {
        kind,
        subexpr: e.to_string(),
    }
}

fn finite(v: f64, e: &Expr) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(check(DomainErrorKind::NonFinite, e))
    }
}

fn power(base: f64, exponent: f64, e: &Expr) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(check(DomainErrorKind::DivisionByZero, e));
        }
        return Ok(base.powi(exponent as i32));
    }
    if base > 0.0 {
        Ok((exponent * base.ln()).exp())
    } else if base == 0.0 && exponent > 0.0 {
        Ok(0.0)
    } else if base == 0.0 {
        Err(check(DomainErrorKind::DivisionByZero, e))
    } else {
        Err(check(DomainErrorKind::PowerDomain, e))
    }
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    /// Evaluates the expression. Domain violations and non-finite
    /// intermediate values are errors.
    pub fn eval(&self, p: &EvalPoint) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::T) => p.t,
            Expr::Var(Var::Y) => p.y,
            Expr::Var(Var::Z) => p.z,
            Expr::Unary(op, a) => {
                let a = a.eval(p)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Log => {
                        if a <= 0.0 {
                            return Err(check(DomainErrorKind::LogOfNonPositive, self));
                        }
                        a.ln()
                    }
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(check(DomainErrorKind::SqrtOfNegative, self));
                        }
                        a.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(p)?;
                let b = b.eval(p)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(check(DomainErrorKind::DivisionByZero, self));
                        }
                        a / b
                    }
                    BinaryOp::Pow => power(a, b, self)?,
                }
            }
        };
        finite(v, self)
    }

    /// Evaluates an expression that must not reference `t`, `y` or `z`.
    pub fn eval_constant(&self) -> Result<f64, EvalError> {
        self.eval(&EvalPoint::new(f64::NAN, f64::NAN, f64::NAN))
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    pub fn is_constant(&self) -> bool {
        !(self.depends_on(Var::T) || self.depends_on(Var::Y) || self.depends_on(Var::Z))
    }

    /// Symbolic partial derivative. Only literal zeros and ones are folded.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                match op {
                    UnaryOp::Neg => neg(da),
                    UnaryOp::Exp => mul(self.clone(), da),
                    UnaryOp::Log => div(da, (**a).clone()),
                    UnaryOp::Sqrt => div(da, mul(Expr::Const(2.0), self.clone())),
                }
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => add(da, db),
                    BinaryOp::Sub => sub(da, db),
                    BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                    BinaryOp::Div => div(
                        sub(mul(da, b.clone()), mul(a, db)),
                        pow(b, Expr::Const(2.0)),
                    ),
                    BinaryOp::Pow => {
                        if is_zero(&db) {
                            // b * a^(b - 1) * a'
                            let lowered = match b {
                                Expr::Const(c) => Expr::Const(c - 1.0),
                                ref other => sub(other.clone(), Expr::Const(1.0)),
                            };
                            mul(mul(b, pow(a, lowered)), da)
                        } else {
                            // a^b * (b' ln a + b a' / a)
                            mul(
                                self.clone(),
                                add(
                                    mul(db, Expr::Unary(UnaryOp::Log, Box::new(a.clone()))),
                                    div(mul(b, da), a),
                                ),
                            )
                        }
                    }
                }
            }
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn bin(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if is_zero(&a) => b,
        (a, b) if is_zero(&b) => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) => bin(BinaryOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if is_zero(&b) => a,
        (a, b) if is_zero(&a) => neg(b),
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, b) => bin(BinaryOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if is_zero(&a) => Expr::Const(0.0),
        (_, b) if is_zero(&b) => Expr::Const(0.0),
        (a, b) if is_one(&a) => b,
        (a, b) if is_one(&b) => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, b) => bin(BinaryOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if is_zero(&a) => Expr::Const(0.0),
        (a, b) if is_one(&b) => a,
        (a, b) => bin(BinaryOp::Div, a, b),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, b) if is_zero(&b) => Expr::Const(1.0),
        (a, b) if is_one(&b) => a,
        (a, b) => bin(BinaryOp::Pow, a, b),
    }
}

// ---------------------------------------------------------------------------
// Printing

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Expr::Unary(UnaryOp::Neg, _) => 3,
        Expr::Const(c) if c.is_sign_negative() => 3,
        Expr::Binary(BinaryOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints in the same grammar [`parse`] accepts; `parse(e.to_string())`
/// evaluates identically to `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{:?}", c.abs())
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_child(f, a, 3)
            }
            Expr::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Exp => "exp",
                    UnaryOp::Log => "log",
                    _ => "sqrt",
                };
                write!(f, "{name}({a})")
            }
            Expr::Binary(op, a, b) => {
                let own = precedence(self);
                let (left_min, right_min) = match op {
                    BinaryOp::Pow => (5, 3),
                    _ => (own, own + 1),
                };
                write_child(f, a, left_min)?;
                if *op == BinaryOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                write_child(f, b, right_min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(y: f64, z: f64) -> EvalPoint {
        EvalPoint::new(0.3, y, z)
    }

    fn ev(src: &str, p: EvalPoint) -> f64 {
        parse(src).unwrap().eval(&p).unwrap()
    }

    #[test]
    fn parse_and_eval_examples() {
        assert_eq!(ev("-4*(y + z)", at(1.0, 1.0)), -8.0);
        assert_eq!(ev("z^5*(y^2+3)", at(1.0, 1.0)), 4.0);
        assert_eq!(ev("exp(0)", at(0.0, 0.0)), 1.0);
        assert_eq!(ev("18*y - 4*y*log(z)", at(1.0, 1.0)), 18.0);
        assert_eq!(ev("t^2", EvalPoint::new(0.5, 0.0, 0.0)), 0.25);
        let r2 = ev("sqrt(1+t^2)", EvalPoint::new(1.0, 0.0, 0.0));
        assert!((r2 - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        let p = at(3.0, 2.0);
        assert_eq!(ev("-y^2", p), -9.0);
        assert_eq!(ev("(-y)^2", p), 9.0);
        assert_eq!(ev("2^3^2", p), 512.0);
        assert_eq!(ev("2^-1", p), 0.5);
        assert_eq!(ev("8/4/2", p), 1.0);
        assert_eq!(ev("1 - 2 - 3", p), -4.0);
        assert_eq!(ev("2*-z", p), -4.0);
        assert_eq!(ev("--y", p), 3.0);
        assert_eq!(ev("1.5e2 + .5", p), 150.5);
    }

    #[test]
    fn fractional_powers() {
        let p = at(4.0, -8.0);
        assert_eq!(ev("y^0.5", p), 2.0);
        assert_eq!(ev("z^3", p), -512.0);
        let e = parse("z^0.5").unwrap().eval(&p).unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::PowerDomain);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse("").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Empty);
        let e = parse("   ").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Empty);
        let e = parse("y + x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("x".into()));
        assert_eq!(e.offset, 4);
        let e = parse("sin(y)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("sin".into()));
        let e = parse("(y + 1").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(e.offset, 6);
        let e = parse("y + * 2").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedToken("*".into()));
        assert_eq!(e.offset, 4);
        let e = parse("y $ 2").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(e.offset, 2);
        let e = parse("1.2.3").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::InvalidNumber(_)));
        let e = parse("y z").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(e.to_string().contains("byte 2"));
    }

    #[test]
    fn domain_errors_name_subexpression() {
        let e = parse("1 + log(y - 1)")
            .unwrap()
            .eval(&at(1.0, 0.0))
            .unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::LogOfNonPositive);
        assert_eq!(e.subexpr, "log(y - 1.0)");
        let e = parse("y/(z - 2)").unwrap().eval(&at(1.0, 2.0)).unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::DivisionByZero);
        let e = parse("sqrt(-y)").unwrap().eval(&at(1.0, 0.0)).unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::SqrtOfNegative);
        let e = parse("exp(exp(y))")
            .unwrap()
            .eval(&at(10.0, 0.0))
            .unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::NonFinite);
        let e = parse("z^-2").unwrap().eval(&at(1.0, 0.0)).unwrap_err();
        assert_eq!(e.kind, DomainErrorKind::DivisionByZero);
    }

    #[test]
    fn derivative_examples() {
        let d = parse("-4*(y+z)").unwrap().differentiate(Var::Y);
        for &(y, z) in &[(0.0, 0.0), (3.0, -1.0), (-2.5, 7.0)] {
            assert_eq!(d.eval(&at(y, z)).unwrap(), -4.0);
        }
        let d = parse("z^3*(y^2+1)").unwrap().differentiate(Var::Z);
        assert_eq!(d.eval(&at(0.0, 1.0)).unwrap(), 3.0);
        let d = parse("exp(y-1)").unwrap().differentiate(Var::Y);
        assert_eq!(d.eval(&at(1.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn derivative_folds_literal_zeros() {
        assert_eq!(
            parse("t^2 + 3").unwrap().differentiate(Var::Y),
            Expr::Const(0.0)
        );
        assert_eq!(parse("y").unwrap().differentiate(Var::Y), Expr::Const(1.0));
    }

    #[test]
    fn derivative_of_variable_exponent() {
        // d/dy y^y = y^y (ln y + 1)
        let d = parse("y^y").unwrap().differentiate(Var::Y);
        let y: f64 = 1.7;
        let want = y.powf(y) * (y.ln() + 1.0);
        assert!((d.eval(&at(y, 0.0)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn display_roundtrip_examples() {
        for src in [
            "-4*(y + z)",
            "-y^2",
            "(-y)^2",
            "2^3^2",
            "(2^3)^2",
            "1 - (2 - 3)",
            "8/(4/2)",
            "-(y + z)*3",
            "2^-1",
            "exp(-(z-1))",
            "1e-300*y",
        ] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            let p = at(1.3, 0.7);
            assert_eq!(e.eval(&p), back.eval(&p), "{src} -> {printed}");
        }
        assert_eq!(parse("-4*(y + z)").unwrap().to_string(), "-4.0 * (y + z)");
        assert_eq!(Expr::Const(-2.0).to_string(), "-2.0");
    }

    #[test]
    fn constants() {
        let e = parse("1 - 2*log(2)").unwrap();
        assert!(e.is_constant());
        assert!((e.eval_constant().unwrap() - (1.0 - 2.0 * 2f64.ln())).abs() < 1e-15);
        assert!(!parse("y + 1").unwrap().is_constant());
    }
}
