//! Haar wavelet collocation for coupled singular Lane-Emden systems
//!
//! ```text
//! -(t^k1 y')' = t^(-omega1) f1(t, y, z)
//! -(t^k2 z')' = t^(-omega2) f2(t, y, z),   0 < t <= 1
//! ```
//!
//! with initial, two-point or four-point boundary conditions.
//!
//! ```
//! use haarlane::{build_grid, builtin_example, solve, NewtonConfig};
//!
//! let spec = builtin_example(2).unwrap();
//! let grid = build_grid(3).unwrap();
//! let (sol, report) = solve(&spec, &grid, &NewtonConfig::default()).unwrap();
//! assert!(report.converged);
//! assert!((sol.y(0.5) - 1.25f64.sqrt()).abs() < 1e-4);
//! ```

pub mod assembler;
pub mod expr;
pub mod haar;
pub mod linalg;
pub mod newton;
pub mod problem;
pub mod report;

pub use assembler::{
    boundary_residual, reconstruct, residual, AssemblyError, BoundaryDefect, CoefficientVector,
    Discretization, SolutionPair, State,
};
pub use expr::{parse, EvalPoint, Expr, Var};
pub use haar::{build_grid, haar_eval, haar_integral, CollocationGrid, GridMatrix, WaveletIndex};
pub use linalg::{lu_solve, DenseMatrix, LuDecomposition};
pub use newton::{jacobian, solve, JacobianMode, NewtonConfig, NewtonError, NewtonReport};
pub use problem::{
    builtin_example, exact_solution, load_problem, parse_problem, BoundaryConditions, InitialGuess,
    ProblemError, ProblemSpec,
};
pub use report::{convergence_study, ConvergenceReport, ErrorReport, Precision};
