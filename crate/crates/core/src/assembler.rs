//! Discrete collocation system and solution reconstruction.
//!
//! The second derivatives are expanded in the Haar basis,
//! `y'' = sum a_i h_i` and `z'' = sum b_i h_i`. Integrating twice and imposing
//! the boundary conditions expresses `y, y', z, z'` as affine functions of the
//! coefficients `(a, b)`; those maps are what [`StateForms`] holds. Each
//! equation is collocated in the expanded form
//!
//! ```text
//! R(t) = t^k y'' + k t^(k-1) y' + t^(-omega) f(t, y, z)
//! ```
//!
//! at the `2M` midpoints, giving `4M` equations in `4M` unknowns ordered
//! `(a_1..a_2M, b_1..b_2M)`.

use crate::expr::{EvalError, EvalPoint, Expr, Var};
use crate::haar::{integrals_at, CollocationGrid};
use crate::linalg::DenseMatrix;
use crate::problem::{BoundaryConditions, ProblemError, ProblemSpec};

#[derive(Debug, thiserror::Error)]
pub enum AssemblyError {
    #[error("equation {equation} at collocation point {point} (t = {t}): {source}")]
    Eval {
        /// 1 for the `y` equation, 2 for the `z` equation.
        equation: u8,
        /// 1-based collocation index.
        point: usize,
        t: f64,
        source: EvalError,
    },
    #[error("coefficient vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Wavelet coefficients of `y''` (`a`) and `z''` (`b`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, AssemblyError> {
        if a.len() != b.len() || a.len() < 2 || !a.len().is_power_of_two() {
            return Err(AssemblyError::Dimension {
                expected: 2 * a.len().max(2).next_power_of_two(),
                got: a.len() + b.len(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn zeros(basis_len: usize) -> Self {
        Self {
            a: vec![0.0; basis_len],
            b: vec![0.0; basis_len],
        }
    }

    /// Splits `(a_1..a_2M, b_1..b_2M)`.
    pub fn from_flat(v: &[f64]) -> Result<Self, AssemblyError> {
        let half = v.len() / 2;
        if !v.len().is_multiple_of(2) {
            return Err(AssemblyError::Dimension {
                expected: v.len() + 1,
                got: v.len(),
            });
        }
        Self::new(v[..half].to_vec(), v[half..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        [self.a.as_slice(), self.b.as_slice()].concat()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `2M`.
    pub fn basis_len(&self) -> usize {
        self.a.len()
    }
}

/// `constant + a . ca + b . cb`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl AffineForm {
    fn zeros(n: usize, constant: f64) -> Self {
        Self {
            constant,
            a: vec![0.0; n],
            b: vec![0.0; n],
        }
    }

    pub fn apply(&self, c: &CoefficientVector) -> f64 {
        let sa: f64 = self.a.iter().zip(&c.a).map(|(w, x)| w * x).sum();
        let sb: f64 = self.b.iter().zip(&c.b).map(|(w, x)| w * x).sum();
        self.constant + sa + sb
    }
}

/// Affine maps from coefficients to `y, y', z, z'` at one abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct StateForms {
    pub y: AffineForm,
    pub dy: AffineForm,
    pub z: AffineForm,
    pub dz: AffineForm,
}

/// Reconstructed values at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub y: f64,
    pub dy: f64,
    pub z: f64,
    pub dz: f64,
}

/// Boundary data needed to turn `P1`, `P2` samples into [`StateForms`].
#[derive(Debug, Clone)]
struct BoundaryMap {
    bc: BoundaryConditions,
    /// `P_{2,i}(1)`
    p2_one: Vec<f64>,
    /// `P_{2,i}(v2) - v2 P_{2,i}(1)` (four-point only)
    sa: Vec<f64>,
    /// `P_{2,i}(v1) - v1 P_{2,i}(1)` (four-point only)
    sb: Vec<f64>,
}

impl BoundaryMap {
    fn new(bc: BoundaryConditions, n: usize) -> Self {
        let p2_one = integrals_at(n, 2, 1.0);
        let (sa, sb) = match bc {
            BoundaryConditions::FourPoint { v1, v2, .. } => {
                let at_v1 = integrals_at(n, 2, v1);
                let at_v2 = integrals_at(n, 2, v2);
                let sa = at_v2
                    .iter()
                    .zip(&p2_one)
                    .map(|(p, one)| p - v2 * one)
                    .collect();
                let sb = at_v1
                    .iter()
                    .zip(&p2_one)
                    .map(|(p, one)| p - v1 * one)
                    .collect();
                (sa, sb)
            }
            _ => (Vec::new(), Vec::new()),
        };
        Self { bc, p2_one, sa, sb }
    }

    fn len(&self) -> usize {
        self.p2_one.len()
    }

    /// Forms at abscissa `t` given `P_{1,i}(t)` and `P_{2,i}(t)`.
    fn forms(&self, t: f64, p1: &[f64], p2: &[f64]) -> StateForms {
        let n = self.len();
        match self.bc {
            BoundaryConditions::Ivp { gamma1, gamma2 } => {
                let mut y = AffineForm::zeros(n, gamma1);
                let mut dy = AffineForm::zeros(n, 0.0);
                let mut z = AffineForm::zeros(n, gamma2);
                let mut dz = AffineForm::zeros(n, 0.0);
                y.a.copy_from_slice(p2);
                dy.a.copy_from_slice(p1);
                z.b.copy_from_slice(p2);
                dz.b.copy_from_slice(p1);
                StateForms { y, dy, z, dz }
            }
            BoundaryConditions::Bvp { delta1, delta2 } => {
                let shifted: Vec<f64> = p2
                    .iter()
                    .zip(&self.p2_one)
                    .map(|(p, one)| p - one)
                    .collect();
                let mut y = AffineForm::zeros(n, delta1);
                let mut dy = AffineForm::zeros(n, 0.0);
                let mut z = AffineForm::zeros(n, delta2);
                let mut dz = AffineForm::zeros(n, 0.0);
                y.a.copy_from_slice(&shifted);
                dy.a.copy_from_slice(p1);
                z.b.copy_from_slice(&shifted);
                dz.b.copy_from_slice(p1);
                StateForms { y, dy, z, dz }
            }
            BoundaryConditions::FourPoint { n1, n2, v1, v2 } => {
                let denom = 1.0 - n1 * n2 * v1 * v2;
                // slopes y'(0) = ya.sa.a + yb.sb.b, z'(0) = za.sa.a + zb.sb.b
                let ya = n1 * n2 * v1 / denom;
                let yb = n1 / denom;
                let za = n2 / denom;
                let zb = n2 * v2 * n1 / denom;
                let mut y = AffineForm::zeros(n, 0.0);
                let mut dy = AffineForm::zeros(n, 0.0);
                let mut z = AffineForm::zeros(n, 0.0);
                let mut dz = AffineForm::zeros(n, 0.0);
                for i in 0..n {
                    let (sa, sb, one) = (self.sa[i], self.sb[i], self.p2_one[i]);
                    y.a[i] = t * ya * sa + (p2[i] - t * one);
                    y.b[i] = t * yb * sb;
                    dy.a[i] = ya * sa + (p1[i] - one);
                    dy.b[i] = yb * sb;
                    z.a[i] = t * za * sa;
                    z.b[i] = t * zb * sb + (p2[i] - t * one);
                    dz.a[i] = za * sa;
                    dz.b[i] = zb * sb + (p1[i] - one);
                }
                StateForms { y, dy, z, dz }
            }
        }
    }

    fn forms_at(&self, t: f64) -> StateForms {
        let n = self.len();
        self.forms(t, &integrals_at(n, 1, t), &integrals_at(n, 2, t))
    }
}

/// One collocated equation: `t^k u'' + k t^(k-1) u' + t^(-omega) f`.
#[derive(Debug, Clone)]
struct Equation {
    f: Expr,
    df_dy: Expr,
    df_dz: Expr,
    /// `x_c^k`
    w_second: Vec<f64>,
    /// `k x_c^(k-1)`, exactly zero when `k = 0`
    w_first: Vec<f64>,
    /// `x_c^(-omega)`
    w_rhs: Vec<f64>,
}

impl Equation {
    fn new(f: &Expr, k: f64, omega: f64, points: &[f64]) -> Self {
        Self {
            f: f.clone(),
            df_dy: f.differentiate(Var::Y),
            df_dz: f.differentiate(Var::Z),
            w_second: points.iter().map(|x| x.powf(k)).collect(),
            w_first: points
                .iter()
                .map(|x| if k == 0.0 { 0.0 } else { k * x.powf(k - 1.0) })
                .collect(),
            w_rhs: points.iter().map(|x| x.powf(-omega)).collect(),
        }
    }
}

/// The collocation system of one problem on one grid. Immutable once built;
/// residual and Jacobian evaluations only read from it.
#[derive(Debug, Clone)]
pub struct Discretization {
    n: usize,
    points: Vec<f64>,
    /// `H^T`: row `c` holds `h_i(x_c)`.
    h_t: DenseMatrix,
    forms: Vec<StateForms>,
    eq1: Equation,
    eq2: Equation,
}

impl Discretization {
    pub fn new(spec: &ProblemSpec, grid: &CollocationGrid) -> Result<Self, AssemblyError> {
        spec.validate()?;
        let n = grid.size();
        let map = BoundaryMap::new(spec.bc, n);
        let points = grid.points().to_vec();
        let forms = points
            .iter()
            .enumerate()
            .map(|(c, &x)| map.forms(x, &grid.p1().column(c), &grid.p2().column(c)))
            .collect();
        Ok(Self {
            n,
            h_t: grid.h().transpose(),
            forms,
            eq1: Equation::new(&spec.f1, spec.k1, spec.omega1, &points),
            eq2: Equation::new(&spec.f2, spec.k2, spec.omega2, &points),
            points,
        })
    }

    /// Number of unknowns, `4M`.
    pub fn unknowns(&self) -> usize {
        2 * self.n
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Reconstruction maps at collocation point `c` (0-based).
    pub fn forms(&self, c: usize) -> &StateForms {
        &self.forms[c]
    }

    fn check(&self, c: &CoefficientVector) -> Result<(), AssemblyError> {
        if c.basis_len() != self.n {
            return Err(AssemblyError::Dimension {
                expected: 2 * self.n,
                got: 2 * c.basis_len(),
            });
        }
        Ok(())
    }

    fn state(&self, idx: usize, c: &CoefficientVector) -> State {
        let f = &self.forms[idx];
        State {
            y: f.y.apply(c),
            dy: f.dy.apply(c),
            z: f.z.apply(c),
            dz: f.dz.apply(c),
        }
    }

    fn second_derivatives(&self, idx: usize, c: &CoefficientVector) -> (f64, f64) {
        let h = self.h_t.row(idx);
        let ypp = h.iter().zip(&c.a).map(|(w, x)| w * x).sum();
        let zpp = h.iter().zip(&c.b).map(|(w, x)| w * x).sum();
        (ypp, zpp)
    }

    fn eval_err(&self, equation: u8, idx: usize) -> impl FnOnce(EvalError) -> AssemblyError {
        let t = self.points[idx];
        move |source| AssemblyError::Eval {
            equation,
            point: idx + 1,
            t,
            source,
        }
    }

    /// Residual vector of length `4M`: the `y` equation at every point,
    /// followed by the `z` equation.
    pub fn residual(&self, c: &CoefficientVector) -> Result<Vec<f64>, AssemblyError> {
        self.check(c)?;
        let mut r = vec![0.0; 2 * self.n];
        for idx in 0..self.n {
            let x = self.points[idx];
            let s = self.state(idx, c);
            let (ypp, zpp) = self.second_derivatives(idx, c);
            let p = EvalPoint::new(x, s.y, s.z);
            let f1 = self.eq1.f.eval(&p).map_err(self.eval_err(1, idx))?;
            let f2 = self.eq2.f.eval(&p).map_err(self.eval_err(2, idx))?;
            r[idx] = self.eq1.w_second[idx] * ypp
                + self.eq1.w_first[idx] * s.dy
                + self.eq1.w_rhs[idx] * f1;
            r[self.n + idx] = self.eq2.w_second[idx] * zpp
                + self.eq2.w_first[idx] * s.dz
                + self.eq2.w_rhs[idx] * f2;
        }
        Ok(r)
    }

    /// Analytic Jacobian of [`Discretization::residual`].
    pub fn jacobian(&self, c: &CoefficientVector) -> Result<DenseMatrix, AssemblyError> {
        self.check(c)?;
        let n = self.n;
        let mut jac = DenseMatrix::zeros(2 * n, 2 * n);
        for idx in 0..n {
            let s = self.state(idx, c);
            let p = EvalPoint::new(self.points[idx], s.y, s.z);
            let forms = &self.forms[idx];
            let h = self.h_t.row(idx);
            for (eq_no, eq, deriv) in [(1u8, &self.eq1, &forms.dy), (2u8, &self.eq2, &forms.dz)] {
                let fy = eq.df_dy.eval(&p).map_err(self.eval_err(eq_no, idx))?;
                let fz = eq.df_dz.eval(&p).map_err(self.eval_err(eq_no, idx))?;
                let (w2, w1, wr) = (eq.w_second[idx], eq.w_first[idx], eq.w_rhs[idx]);
                let row_idx = if eq_no == 1 { idx } else { n + idx };
                let row = jac.row_mut(row_idx);
                for i in 0..n {
                    let chain_a = wr * (fy * forms.y.a[i] + fz * forms.z.a[i]);
                    let chain_b = wr * (fy * forms.y.b[i] + fz * forms.z.b[i]);
                    row[i] = w1 * deriv.a[i] + chain_a;
                    row[n + i] = w1 * deriv.b[i] + chain_b;
                }
                // u'' = H^T a (first equation) or H^T b (second)
                let offset = if eq_no == 1 { 0 } else { n };
                for i in 0..n {
                    row[offset + i] += w2 * h[i];
                }
            }
        }
        Ok(jac)
    }
}

/// Collocation residual of `spec` on `grid` at coefficients `c`.
pub fn residual(
    spec: &ProblemSpec,
    grid: &CollocationGrid,
    c: &CoefficientVector,
) -> Result<Vec<f64>, AssemblyError> {
    Discretization::new(spec, grid)?.residual(c)
}

/// Approximate solution `y^M, z^M` built from wavelet coefficients. Can be
/// evaluated anywhere on `[0, 1]`, not only at collocation points.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    spec: ProblemSpec,
    level: u32,
    coeffs: CoefficientVector,
    map: BoundaryMap,
}

impl SolutionPair {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coefficients(&self) -> &CoefficientVector {
        &self.coeffs
    }

    /// All four forms at `t`.
    pub fn forms_at(&self, t: f64) -> StateForms {
        self.map.forms_at(t)
    }

    pub fn eval(&self, t: f64) -> State {
        let f = self.map.forms_at(t);
        State {
            y: f.y.apply(&self.coeffs),
            dy: f.dy.apply(&self.coeffs),
            z: f.z.apply(&self.coeffs),
            dz: f.dz.apply(&self.coeffs),
        }
    }

    pub fn y(&self, t: f64) -> f64 {
        self.eval(t).y
    }

    pub fn dy(&self, t: f64) -> f64 {
        self.eval(t).dy
    }

    pub fn z(&self, t: f64) -> f64 {
        self.eval(t).z
    }

    pub fn dz(&self, t: f64) -> f64 {
        self.eval(t).dz
    }
}

/// Builds the evaluable approximation for coefficients `c`.
pub fn reconstruct(
    spec: &ProblemSpec,
    grid: &CollocationGrid,
    c: CoefficientVector,
) -> Result<SolutionPair, AssemblyError> {
    spec.validate()?;
    if c.basis_len() != grid.size() {
        return Err(AssemblyError::Dimension {
            expected: 2 * grid.size(),
            got: 2 * c.basis_len(),
        });
    }
    Ok(SolutionPair {
        spec: spec.clone(),
        level: grid.level(),
        map: BoundaryMap::new(spec.bc, grid.size()),
        coeffs: c,
    })
}

/// `|lhs - rhs|` of one boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDefect {
    pub condition: &'static str,
    pub defect: f64,
}

/// Defects of the four conditions of the active boundary-condition family.
pub fn boundary_residual(sp: &SolutionPair) -> Vec<BoundaryDefect> {
    let at0 = sp.eval(0.0);
    let at1 = sp.eval(1.0);
    let d = |condition, defect: f64| BoundaryDefect {
        condition,
        defect: defect.abs(),
    };
    match sp.spec.bc {
        BoundaryConditions::Ivp { gamma1, gamma2 } => vec![
            d("y(0) = gamma1", at0.y - gamma1),
            d("y'(0) = 0", at0.dy),
            d("z(0) = gamma2", at0.z - gamma2),
            d("z'(0) = 0", at0.dz),
        ],
        BoundaryConditions::Bvp { delta1, delta2 } => vec![
            d("y'(0) = 0", at0.dy),
            d("y(1) = delta1", at1.y - delta1),
            d("z'(0) = 0", at0.dz),
            d("z(1) = delta2", at1.z - delta2),
        ],
        BoundaryConditions::FourPoint { n1, n2, v1, v2 } => vec![
            d("y(0) = 0", at0.y),
            d("y(1) = n1 z(v1)", at1.y - n1 * sp.z(v1)),
            d("z(0) = 0", at0.z),
            d("z(1) = n2 y(v2)", at1.z - n2 * sp.y(v2)),
        ],
    }
}
