//! Error tables, convergence studies and their CSV forms.

use std::io::{self, Write};
use std::ops::RangeInclusive;

use crate::assembler::SolutionPair;
use crate::expr::EvalError;
use crate::haar::{build_grid, HaarError};
use crate::newton::{solve, NewtonConfig, NewtonError, NewtonReport};
use crate::problem::ProblemSpec;

/// Abscissae of the error table, `0, 0.1, ..., 1`.
pub fn sample_points() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("exact solution at t = {t}: {source}")]
    Exact { t: f64, source: EvalError },
    #[error("problem has no exact solution; convergence orders need one")]
    NoExact,
    #[error(transparent)]
    Haar(#[from] HaarError),
    #[error("level {level}: {source}")]
    Newton { level: u32, source: NewtonError },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precision {
    /// Six significant digits.
    Short,
    /// Shortest round-trip representation.
    Full,
}

/// C-style `%g` with six significant digits.
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_value(v: f64, precision: Precision) -> String {
    match precision {
        Precision::Short => format_g(v),
        Precision::Full => format!("{v:e}"),
    }
}

fn format_error(v: Option<f64>, precision: Precision) -> String {
    match (v, precision) {
        (None, _) => String::new(),
        (Some(e), Precision::Short) => format!("{e:.5e}"),
        (Some(e), Precision::Full) => format!("{e:e}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub exact: Option<(f64, f64)>,
}

impl Sample {
    pub fn errors(&self) -> Option<(f64, f64)> {
        self.exact
            .map(|(y, z)| ((self.y - y).abs(), (self.z - z).abs()))
    }
}

/// Approximation sampled on [`sample_points`], with errors when the problem
/// carries an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub samples: Vec<Sample>,
}

impl ErrorReport {
    pub fn new(sp: &SolutionPair) -> Result<Self, ReportError> {
        let exact = sp.spec().exact.as_ref();
        let samples = sample_points()
            .into_iter()
            .map(|t| {
                let s = sp.eval(t);
                let exact = exact
                    .map(|e| e.eval(t))
                    .transpose()
                    .map_err(|source| ReportError::Exact { t, source })?;
                Ok(Sample {
                    t,
                    y: s.y,
                    z: s.z,
                    exact,
                })
            })
            .collect::<Result<_, ReportError>>()?;
        Ok(Self { samples })
    }

    /// Maximum sampled errors in `y` and `z`.
    pub fn linf(&self) -> Option<(f64, f64)> {
        self.samples
            .iter()
            .try_fold((0.0f64, 0.0f64), |(my, mz), s| {
                let (ey, ez) = s.errors()?;
                Some((my.max(ey), mz.max(ez)))
            })
    }

    pub fn write_csv<W: Write>(&self, mut w: W, precision: Precision) -> io::Result<()> {
        writeln!(
            w,
            "t,y_computed,z_computed,y_exact,z_exact,y_abserr,z_abserr"
        )?;
        for s in &self.samples {
            let (ye, ze) = match s.exact {
                Some((y, z)) => (format_value(y, precision), format_value(z, precision)),
                None => (String::new(), String::new()),
            };
            let errs = s.errors();
            writeln!(
                w,
                "{},{},{},{ye},{ze},{},{}",
                format_g(s.t),
                format_value(s.y, precision),
                format_value(s.z, precision),
                format_error(errs.map(|e| e.0), precision),
                format_error(errs.map(|e| e.1), precision),
            )?;
        }
        let linf = self.linf();
        writeln!(w, "Linf_y,{}", format_error(linf.map(|e| e.0), precision))?;
        writeln!(w, "Linf_z,{}", format_error(linf.map(|e| e.1), precision))
    }
}

/// `log2(coarse / fine)`, or `None` when either error is at rounding level.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    let floor = 10.0 * f64::EPSILON;
    (coarse > floor && fine > floor).then(|| (coarse / fine).log2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub linf_y: f64,
    pub linf_z: f64,
    pub order_y: Option<f64>,
    pub order_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Builds rows from `(level, linf_y, linf_z)` sorted by level. Orders are
    /// only reported between consecutive levels.
    pub fn from_errors(errors: &[(u32, f64, f64)]) -> Self {
        let rows = errors
            .iter()
            .enumerate()
            .map(|(i, &(level, ey, ez))| {
                let prev = i
                    .checked_sub(1)
                    .map(|p| errors[p])
                    .filter(|p| p.0 + 1 == level);
                ConvergenceRow {
                    level,
                    linf_y: ey,
                    linf_z: ez,
                    order_y: prev.and_then(|p| observed_order(p.1, ey)),
                    order_z: prev.and_then(|p| observed_order(p.2, ez)),
                }
            })
            .collect();
        Self { rows }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "J,linf_y,linf_z,order_y,order_z")?;
        let order = |o: Option<f64>| o.map(|v| format!("{v:.4}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.5e},{:.5e},{},{}",
                r.level,
                r.linf_y,
                r.linf_z,
                order(r.order_y),
                order(r.order_z)
            )?;
        }
        Ok(())
    }
}

/// Solves `spec` at every level in `levels`, one thread per level.
///
/// Results come back ordered by level whatever order the threads finish in.
pub fn convergence_study(
    spec: &ProblemSpec,
    levels: RangeInclusive<u32>,
    cfg: &NewtonConfig,
) -> Result<(ConvergenceReport, Vec<NewtonReport>), ReportError> {
    if spec.exact.is_none() {
        return Err(ReportError::NoExact);
    }
    let results: Vec<Result<(u32, f64, f64, NewtonReport), ReportError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = levels
                .map(|level| {
                    scope.spawn(move || {
                        let grid = build_grid(level)?;
                        let (sp, report) = solve(spec, &grid, cfg)
                            .map_err(|source| ReportError::Newton { level, source })?;
                        let (ey, ez) = ErrorReport::new(&sp)?.linf().ok_or(ReportError::NoExact)?;
                        Ok((level, ey, ez, report))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        });
    let mut errors = Vec::new();
    let mut reports = Vec::new();
    for r in results {
        let (level, ey, ez, report) = r?;
        errors.push((level, ey, ez));
        reports.push(report);
    }
    Ok((ConvergenceReport::from_errors(&errors), reports))
}
