//! Coupled Lane-Emden problems
//!
//! ```text
//! -(t^k1 y')' = t^(-omega1) f1(t, y, z)
//! -(t^k2 z')' = t^(-omega2) f2(t, y, z),   0 < t <= 1
//! ```
//!
//! with one of three boundary-condition families, and the line-oriented
//! `key = value` problem-file format.
//!
//! Only `k >= 0` and `omega < 1` are enforced. The convergence results for
//! the two-point BVP family are stated for `k >= 1`, and those for the
//! four-point family for `0 <= k1 < 1`; these narrower ranges are not checked.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::expr::{self, EvalError, EvalPoint, Expr, ParseError};

/// Four-point problems with `|1 - n1 n2 v1 v2|` below this are rejected.
pub const FOUR_POINT_DENOMINATOR_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("line {line}: `{key}`: {source}")]
    Expr {
        key: String,
        line: usize,
        source: ParseError,
    },
    #[error("line {line}: `{key}` must be a constant expression")]
    NotConstant { key: String, line: usize },
    #[error("line {line}: `{key}`: {source}")]
    Value {
        key: String,
        line: usize,
        source: EvalError,
    },
    #[error("line {line}: `{key}`: {message}")]
    BadValue {
        key: String,
        line: usize,
        message: String,
    },
    #[error("`{key}`: {message}")]
    Invariant { key: String, message: String },
    #[error("no built-in example {0} (expected 1..=6)")]
    UnknownExample(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryConditions {
    /// `y(0) = gamma1, y'(0) = 0, z(0) = gamma2, z'(0) = 0`
    Ivp { gamma1: f64, gamma2: f64 },
    /// `y'(0) = 0, y(1) = delta1, z'(0) = 0, z(1) = delta2`
    Bvp { delta1: f64, delta2: f64 },
    /// `y(0) = 0, y(1) = n1 z(v1), z(0) = 0, z(1) = n2 y(v2)`
    FourPoint { n1: f64, n2: f64, v1: f64, v2: f64 },
}

impl BoundaryConditions {
    pub fn kind(&self) -> &'static str {
        match self {
            BoundaryConditions::Ivp { .. } => "ivp",
            BoundaryConditions::Bvp { .. } => "bvp",
            BoundaryConditions::FourPoint { .. } => "fourpoint",
        }
    }

    fn validate(&self) -> Result<(), ProblemError> {
        let values: Vec<(&str, f64)> = match *self {
            BoundaryConditions::Ivp { gamma1, gamma2 } => {
                vec![("gamma1", gamma1), ("gamma2", gamma2)]
            }
            BoundaryConditions::Bvp { delta1, delta2 } => {
                vec![("delta1", delta1), ("delta2", delta2)]
            }
            BoundaryConditions::FourPoint { n1, n2, v1, v2 } => {
                vec![("n1", n1), ("n2", n2), ("v1", v1), ("v2", v2)]
            }
        };
        for (key, v) in values {
            if !v.is_finite() {
                return Err(invariant(key, "must be finite"));
            }
        }
        if let BoundaryConditions::FourPoint { n1, n2, v1, v2 } = *self {
            for (key, v) in [("v1", v1), ("v2", v2)] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(invariant(key, format!("must lie in (0, 1), got {v}")));
                }
            }
            if (1.0 - n1 * n2 * v1 * v2).abs() < FOUR_POINT_DENOMINATOR_EPS {
                return Err(invariant(
                    "n1",
                    "n1*n2*v1*v2 = 1 makes the four-point problem singular",
                ));
            }
        }
        Ok(())
    }
}

/// Starting point for Newton on the wavelet coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// Every one of the `4M` coefficients set to the same value.
    Uniform(f64),
    /// An explicit `(a_1..a_2M, b_1..b_2M)` vector; its length fixes `M`.
    Explicit(Vec<f64>),
}

impl InitialGuess {
    /// Coefficient vector of length `len`, or `None` when an explicit guess
    /// has the wrong length.
    pub fn vector(&self, len: usize) -> Option<Vec<f64>> {
        match self {
            InitialGuess::Uniform(v) => Some(vec![*v; len]),
            InitialGuess::Explicit(v) if v.len() == len => Some(v.clone()),
            InitialGuess::Explicit(_) => None,
        }
    }
}

impl Default for InitialGuess {
    fn default() -> Self {
        InitialGuess::Uniform(0.0)
    }
}

/// Closed-form reference solution in `t`, used for error reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub y: Expr,
    pub z: Expr,
}

impl ExactSolution {
    pub fn eval(&self, t: f64) -> Result<(f64, f64), EvalError> {
        let p = EvalPoint::new(t, f64::NAN, f64::NAN);
        Ok((self.y.eval(&p)?, self.z.eval(&p)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub label: String,
    pub k1: f64,
    pub k2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub f1: Expr,
    pub f2: Expr,
    pub bc: BoundaryConditions,
    pub guess: InitialGuess,
    pub exact: Option<ExactSolution>,
}

fn invariant(key: &str, message: impl Into<String>) -> ProblemError {
    ProblemError::Invariant {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ProblemSpec {
    /// Checks `k >= 0`, `omega < 1` and the boundary-condition constraints.
    pub fn validate(&self) -> Result<(), ProblemError> {
        for (key, k) in [("k1", self.k1), ("k2", self.k2)] {
            if !(k.is_finite() && k >= 0.0) {
                return Err(invariant(
                    key,
                    format!("must be a finite value >= 0, got {k}"),
                ));
            }
        }
        for (key, w) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(w.is_finite() && w < 1.0) {
                return Err(invariant(
                    key,
                    format!("must be a finite value < 1, got {w}"),
                ));
            }
        }
        if let InitialGuess::Explicit(v) = &self.guess {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invariant("guess", "must be finite"));
            }
        }
        if let InitialGuess::Uniform(v) = self.guess {
            if !v.is_finite() {
                return Err(invariant("guess", "must be finite"));
            }
        }
        self.bc.validate()
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "label = {}", self.label)?;
        writeln!(f, "k1 = {:?}", self.k1)?;
        writeln!(f, "k2 = {:?}", self.k2)?;
        writeln!(f, "omega1 = {:?}", self.omega1)?;
        writeln!(f, "omega2 = {:?}", self.omega2)?;
        writeln!(f, "f1 = {}", self.f1)?;
        writeln!(f, "f2 = {}", self.f2)?;
        writeln!(f, "bc = {}", self.bc.kind())?;
        match self.bc {
            BoundaryConditions::Ivp { gamma1, gamma2 } => {
                writeln!(f, "gamma1 = {gamma1:?}")?;
                writeln!(f, "gamma2 = {gamma2:?}")?;
            }
            BoundaryConditions::Bvp { delta1, delta2 } => {
                writeln!(f, "delta1 = {delta1:?}")?;
                writeln!(f, "delta2 = {delta2:?}")?;
            }
            BoundaryConditions::FourPoint { n1, n2, v1, v2 } => {
                writeln!(f, "n1 = {n1:?}")?;
                writeln!(f, "n2 = {n2:?}")?;
                writeln!(f, "v1 = {v1:?}")?;
                writeln!(f, "v2 = {v2:?}")?;
            }
        }
        match &self.guess {
            InitialGuess::Uniform(g) => writeln!(f, "guess = {g:?}")?,
            InitialGuess::Explicit(v) => {
                let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                writeln!(f, "guess = [{}]", items.join(", "))?;
            }
        }
        if let Some(exact) = &self.exact {
            writeln!(f, "exact_y = {}", exact.y)?;
            writeln!(f, "exact_z = {}", exact.z)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Problem files

const KNOWN_KEYS: &[&str] = &[
    "label", "k1", "k2", "omega1", "omega2", "f1", "f2", "bc", "gamma1", "gamma2", "delta1",
    "delta2", "n1", "n2", "v1", "v2", "guess", "exact_y", "exact_z",
];

struct Entries<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &str) -> Result<(usize, &'a str), ProblemError> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| ProblemError::MissingKey {
                key: key.to_string(),
            })
    }

    fn expr(&self, key: &str) -> Result<Expr, ProblemError> {
        let (line, text) = self.raw(key)?;
        expr::parse(text).map_err(|source| ProblemError::Expr {
            key: key.to_string(),
            line,
            source,
        })
    }

    fn constant(&self, key: &str) -> Result<f64, ProblemError> {
        let (line, text) = self.raw(key)?;
        constant_value(key, line, text)
    }
}

fn constant_value(key: &str, line: usize, text: &str) -> Result<f64, ProblemError> {
    let e = expr::parse(text).map_err(|source| ProblemError::Expr {
        key: key.to_string(),
        line,
        source,
    })?;
    if !e.is_constant() {
        return Err(ProblemError::NotConstant {
            key: key.to_string(),
            line,
        });
    }
    e.eval_constant().map_err(|source| ProblemError::Value {
        key: key.to_string(),
        line,
        source,
    })
}

fn parse_guess(line: usize, text: &str) -> Result<InitialGuess, ProblemError> {
    let trimmed = text.trim();
    let Some(inner) = trimmed.strip_prefix('[') else {
        return constant_value("guess", line, trimmed).map(InitialGuess::Uniform);
    };
    let inner = inner
        .strip_suffix(']')
        .ok_or_else(|| ProblemError::BadValue {
            key: "guess".into(),
            line,
            message: "unterminated `[`".into(),
        })?;
    let values = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| constant_value("guess", line, s))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(ProblemError::BadValue {
            key: "guess".into(),
            line,
            message: "empty coefficient vector".into(),
        });
    }
    Ok(InitialGuess::Explicit(values))
}

/// Parses the text of a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ProblemError> {
    let mut map = HashMap::new();
    for (n, raw_line) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ProblemError::Syntax { line })?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ProblemError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
        if map.insert(key, (line, value)).is_some() {
            return Err(ProblemError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
    }
    let entries = Entries { map };

    let (bc_line, bc_kind) = entries.raw("bc")?;
    let (bc, bc_keys): (BoundaryConditions, &[&str]) = match bc_kind.to_ascii_lowercase().as_str() {
        "ivp" => (
            BoundaryConditions::Ivp {
                gamma1: entries.constant("gamma1")?,
                gamma2: entries.constant("gamma2")?,
            },
            &["gamma1", "gamma2"],
        ),
        "bvp" => (
            BoundaryConditions::Bvp {
                delta1: entries.constant("delta1")?,
                delta2: entries.constant("delta2")?,
            },
            &["delta1", "delta2"],
        ),
        "fourpoint" => (
            BoundaryConditions::FourPoint {
                n1: entries.constant("n1")?,
                n2: entries.constant("n2")?,
                v1: entries.constant("v1")?,
                v2: entries.constant("v2")?,
            },
            &["n1", "n2", "v1", "v2"],
        ),
        other => {
            return Err(ProblemError::BadValue {
                key: "bc".into(),
                line: bc_line,
                message: format!("expected ivp, bvp or fourpoint, got `{other}`"),
            })
        }
    };
    for key in [
        "gamma1", "gamma2", "delta1", "delta2", "n1", "n2", "v1", "v2",
    ] {
        if !bc_keys.contains(&key) {
            if let Some(&(line, _)) = entries.map.get(key) {
                return Err(ProblemError::BadValue {
                    key: key.to_string(),
                    line,
                    message: format!("not used by bc = {}", bc.kind()),
                });
            }
        }
    }

    let guess = match entries.map.get("guess") {
        Some(&(line, text)) => parse_guess(line, text)?,
        None => InitialGuess::default(),
    };
    let exact = match (
        entries.map.contains_key("exact_y"),
        entries.map.contains_key("exact_z"),
    ) {
        (false, false) => None,
        _ => Some(ExactSolution {
            y: entries.expr("exact_y")?,
            z: entries.expr("exact_z")?,
        }),
    };
    let label = entries
        .map
        .get("label")
        .map(|&(_, l)| l.to_string())
        .unwrap_or_default();

    let spec = ProblemSpec {
        label,
        k1: entries.constant("k1")?,
        k2: entries.constant("k2")?,
        omega1: entries.constant("omega1")?,
        omega2: entries.constant("omega2")?,
        f1: entries.expr("f1")?,
        f2: entries.expr("f2")?,
        bc,
        guess,
        exact,
    };
    spec.validate()?;
    Ok(spec)
}

/// Reads and parses a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem(&text)
}

// ---------------------------------------------------------------------------
// Built-in examples

const BUILTIN: [&str; 6] = [
    include_str!("../examples/ex1.problem"),
    include_str!("../examples/ex2.problem"),
    include_str!("../examples/ex3.problem"),
    include_str!("../examples/ex4.problem"),
    include_str!("../examples/ex5.problem"),
    include_str!("../examples/ex6.problem"),
];

/// Alternate uniform guesses used to probe sensitivity to the starting point.
pub fn perturbed_guesses(n: usize) -> Result<[f64; 2], ProblemError> {
    Ok(match n {
        1 => [1.01, 1.1],
        2 => [0.01, 0.1],
        3 => [0.82, 0.78],
        4 => [0.35, 0.28],
        5 => [1.29, 1.21],
        6 => [1.79, 1.71],
        _ => return Err(ProblemError::UnknownExample(n)),
    })
}

/// Built-in example `n` (1..=6): 1-2 are IVPs, 3-4 two-point BVPs and 5-6
/// four-point BVPs. Each carries its closed-form solution.
pub fn builtin_example(n: usize) -> Result<ProblemSpec, ProblemError> {
    let text = n
        .checked_sub(1)
        .and_then(|i| BUILTIN.get(i))
        .ok_or(ProblemError::UnknownExample(n))?;
    parse_problem(text)
}

/// Exact `(y(t), z(t))` of built-in example `n`.
pub fn exact_solution(n: usize, t: f64) -> Result<(f64, f64), ProblemError> {
    let spec = builtin_example(n)?;
    let exact = spec.exact.expect("built-in examples carry exact solutions");
    exact.eval(t).map_err(|source| ProblemError::Value {
        key: "exact".into(),
        line: 0,
        source,
    })
}
