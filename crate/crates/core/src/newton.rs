//! Newton iteration on the collocation system.

use std::str::FromStr;

use crate::assembler::{
    reconstruct, AssemblyError, CoefficientVector, Discretization, SolutionPair,
};
use crate::haar::CollocationGrid;
use crate::linalg::{DenseMatrix, LinalgError, LuDecomposition};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    #[default]
    Analytic,
    /// Forward differences.
    FiniteDifference,
}

impl FromStr for JacobianMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Self::Analytic),
            "fd" | "finite-difference" => Ok(Self::FiniteDifference),
            other => Err(format!(
                "unknown jacobian mode `{other}` (expected analytic or fd)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Stop once the residual infinity norm drops to this.
    pub tol_residual: f64,
    /// Stop once the Newton step infinity norm drops to this.
    pub tol_step: f64,
    pub max_iter: usize,
    pub jacobian: JacobianMode,
    /// Relative finite-difference step, scaled by `max(1, |c_j|)`.
    pub fd_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-12,
            tol_step: 1e-14,
            max_iter: 100,
            jacobian: JacobianMode::Analytic,
            fd_step: f64::EPSILON.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    /// Number of Newton steps taken.
    pub iterations: usize,
    /// Residual infinity norm at the returned coefficients.
    pub final_residual: f64,
    pub converged: bool,
    /// Residual norm before each step, one entry per iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum NewtonError {
    #[error("singular Jacobian at iteration {iteration}: {source}")]
    SingularJacobian {
        iteration: usize,
        source: LinalgError,
    },
    #[error("iteration {iteration}: {source}")]
    Assembly {
        iteration: usize,
        source: AssemblyError,
    },
    #[error("initial guess has length {got}, expected {expected}")]
    GuessLength { expected: usize, got: usize },
    #[error(transparent)]
    Setup(#[from] AssemblyError),
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian of the residual.
pub fn finite_difference_jacobian(
    disc: &Discretization,
    c: &CoefficientVector,
    fd_step: f64,
) -> Result<DenseMatrix, AssemblyError> {
    let base = disc.residual(c)?;
    let n = disc.unknowns();
    let mut flat = c.to_flat();
    let mut jac = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let orig = flat[j];
        let h = fd_step * orig.abs().max(1.0);
        flat[j] = orig + h;
        let shifted = disc.residual(&CoefficientVector::from_flat(&flat)?)?;
        flat[j] = orig;
        let h = (orig + h) - orig;
        for (i, (s, b)) in shifted.iter().zip(&base).enumerate() {
            jac[(i, j)] = (s - b) / h;
        }
    }
    Ok(jac)
}

/// Jacobian of the collocation residual of `spec` on `grid` at `c`.
pub fn jacobian(
    spec: &ProblemSpec,
    grid: &CollocationGrid,
    c: &CoefficientVector,
    mode: JacobianMode,
) -> Result<DenseMatrix, AssemblyError> {
    let disc = Discretization::new(spec, grid)?;
    match mode {
        JacobianMode::Analytic => disc.jacobian(c),
        JacobianMode::FiniteDifference => {
            finite_difference_jacobian(&disc, c, NewtonConfig::default().fd_step)
        }
    }
}

/// Runs Newton from the guess stored in `spec`.
///
/// Hitting `max_iter` is not an error: the report comes back with
/// `converged == false`.
pub fn solve(
    spec: &ProblemSpec,
    grid: &CollocationGrid,
    cfg: &NewtonConfig,
) -> Result<(SolutionPair, NewtonReport), NewtonError> {
    let disc = Discretization::new(spec, grid)?;
    let n = disc.unknowns();
    let start = spec.guess.vector(n).ok_or(NewtonError::GuessLength {
        expected: n,
        got: match &spec.guess {
            crate::problem::InitialGuess::Explicit(v) => v.len(),
            crate::problem::InitialGuess::Uniform(_) => n,
        },
    })?;
    let mut flat = start;
    let mut history = Vec::new();
    let mut converged = false;
    let assembly = |iteration| move |source| NewtonError::Assembly { iteration, source };

    for iteration in 1..=cfg.max_iter {
        let c = CoefficientVector::from_flat(&flat)?;
        let r = disc.residual(&c).map_err(assembly(iteration))?;
        let rnorm = inf_norm(&r);
        if rnorm <= cfg.tol_residual {
            converged = true;
            break;
        }
        let jac = match cfg.jacobian {
            JacobianMode::Analytic => disc.jacobian(&c),
            JacobianMode::FiniteDifference => finite_difference_jacobian(&disc, &c, cfg.fd_step),
        }
        .map_err(assembly(iteration))?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = LuDecomposition::new(&jac)
            .and_then(|lu| lu.solve(&neg))
            .map_err(|source| NewtonError::SingularJacobian { iteration, source })?;
        for (x, d) in flat.iter_mut().zip(&step) {
            *x += d;
        }
        history.push(rnorm);
        let snorm = inf_norm(&step);
        log::debug!("newton iteration {iteration}: residual {rnorm:e}, step {snorm:e}");
        if snorm <= cfg.tol_step {
            converged = true;
            break;
        }
    }

    let c = CoefficientVector::from_flat(&flat)?;
    let iterations = history.len();
    let final_residual = inf_norm(&disc.residual(&c).map_err(assembly(iterations + 1))?);
    if !converged && final_residual <= cfg.tol_residual {
        converged = true;
    }
    log::info!(
        "newton {} after {iterations} iterations, residual {final_residual:e}",
        if converged {
            "converged"
        } else {
            "did not converge"
        }
    );
    let sp = reconstruct(spec, grid, c)?;
    Ok((
        sp,
        NewtonReport {
            iterations,
            final_residual,
            converged,
            history,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::build_grid;
    use crate::problem::{builtin_example, InitialGuess};

    #[test]
    fn analytic_matches_finite_difference_on_example_two() {
        let spec = builtin_example(2).unwrap();
        let grid = build_grid(3).unwrap();
        let n = 2 * grid.size();
        let c = CoefficientVector::from_flat(&vec![0.0; n]).unwrap();
        let ja = jacobian(&spec, &grid, &c, JacobianMode::Analytic).unwrap();
        let jf = jacobian(&spec, &grid, &c, JacobianMode::FiniteDifference).unwrap();
        let scale = 1.0 + ja.max_abs();
        for (a, f) in ja.as_slice().iter().zip(jf.as_slice()) {
            assert!((a - f).abs() <= 1e-6 * scale, "{a} vs {f}");
        }
    }

    #[test]
    fn linear_problem_jacobian_independent_of_point() {
        let spec = builtin_example(1).unwrap();
        let grid = build_grid(2).unwrap();
        let n = 2 * grid.size();
        let c0 = CoefficientVector::from_flat(&vec![0.0; n]).unwrap();
        let c1 = CoefficientVector::from_flat(&(0..n).map(|i| i as f64 - 3.5).collect::<Vec<_>>())
            .unwrap();
        let j0 = jacobian(&spec, &grid, &c0, JacobianMode::Analytic).unwrap();
        let j1 = jacobian(&spec, &grid, &c1, JacobianMode::Analytic).unwrap();
        assert_eq!(j0, j1);
    }

    #[test]
    fn zero_rhs_ivp_jacobian() {
        let mut spec = builtin_example(1).unwrap();
        spec.f1 = crate::expr::parse("0").unwrap();
        spec.f2 = crate::expr::parse("0").unwrap();
        let grid = build_grid(2).unwrap();
        let m2 = grid.size();
        let jac = jacobian(
            &spec,
            &grid,
            &CoefficientVector::zeros(m2),
            JacobianMode::Analytic,
        )
        .unwrap();
        for (block, k) in [(0, spec.k1), (1, spec.k2)] {
            for c in 0..m2 {
                let x = grid.points()[c];
                for i in 0..m2 {
                    let want =
                        x.powf(k) * grid.h()[(i, c)] + k * x.powf(k - 1.0) * grid.p1()[(i, c)];
                    let got = jac[(block * m2 + c, block * m2 + i)];
                    assert!((got - want).abs() < 1e-14);
                    assert_eq!(jac[(block * m2 + c, (1 - block) * m2 + i)], 0.0);
                }
            }
        }
    }

    fn linf_error(n: usize, level: u32) -> (f64, f64, NewtonReport) {
        let spec = builtin_example(n).unwrap();
        let grid = build_grid(level).unwrap();
        let (sp, report) = solve(&spec, &grid, &NewtonConfig::default()).unwrap();
        let exact = spec.exact.as_ref().unwrap();
        let (mut ey, mut ez) = (0.0f64, 0.0f64);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let (y, z) = exact.eval(t).unwrap();
            ey = ey.max((sp.y(t) - y).abs());
            ez = ez.max((sp.z(t) - z).abs());
        }
        (ey, ez, report)
    }

    #[test]
    fn solves_example_one_exactly() {
        let (ey, ez, report) = linf_error(1, 3);
        assert!(report.converged);
        assert!(ey <= 1e-12 && ez <= 1e-12, "{ey} {ez}");
    }

    #[test]
    fn example_two_error_level_four() {
        let (ey, ez, report) = linf_error(2, 4);
        assert!(report.converged);
        assert!((ey / 6.87997e-6 - 1.0).abs() < 0.01, "{ey}");
        assert!((ez / 3.28838e-5 - 1.0).abs() < 0.01, "{ez}");
    }

    #[test]
    fn example_six_exact() {
        let (ey, ez, report) = linf_error(6, 3);
        assert!(report.converged);
        assert!(ey <= 1e-10 && ez <= 1e-10);
    }

    #[test]
    fn history_matches_iterations_and_decreases() {
        let (_, _, report) = linf_error(2, 3);
        assert_eq!(report.history.len(), report.iterations);
        assert!(report.iterations >= 2 && report.iterations <= 10);
        assert!(report.final_residual <= report.history[report.iterations - 1]);
    }

    #[test]
    fn deterministic() {
        let spec = builtin_example(4).unwrap();
        let grid = build_grid(3).unwrap();
        let cfg = NewtonConfig::default();
        let (a, ra) = solve(&spec, &grid, &cfg).unwrap();
        let (b, rb) = solve(&spec, &grid, &cfg).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
        assert_eq!(ra, rb);
    }

    #[test]
    fn guess_length_checked() {
        let mut spec = builtin_example(2).unwrap();
        spec.guess = InitialGuess::Explicit(vec![0.0; 3]);
        let grid = build_grid(1).unwrap();
        assert!(matches!(
            solve(&spec, &grid, &NewtonConfig::default()),
            Err(NewtonError::GuessLength {
                expected: 8,
                got: 3
            })
        ));
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let spec = builtin_example(3).unwrap();
        let grid = build_grid(3).unwrap();
        let cfg = NewtonConfig {
            max_iter: 1,
            ..NewtonConfig::default()
        };
        let (_, report) = solve(&spec, &grid, &cfg).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn jacobian_mode_parsing() {
        assert!("bogus".parse::<JacobianMode>().is_err());
        assert_eq!(
            "fd".parse::<JacobianMode>(),
            Ok(JacobianMode::FiniteDifference)
        );
        assert_eq!(
            "Analytic".parse::<JacobianMode>(),
            Ok(JacobianMode::Analytic)
        );
    }
}
