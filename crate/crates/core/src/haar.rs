//! Haar functions on `[0, 1]`, their repeated integrals, and the sampled
//! collocation matrices `H`, `P1`, `P2`.
//!
//! Wavelets are numbered `i = 1, 2, ..., 2M` with `M = 2^J`. Index 1 is the
//! scaling function (identically one on `[0, 1]`); index `i >= 2` is the
//! wavelet at dilation level `j` and translation `k` with `i = 2^j + k + 1`.
//! Every breakpoint is a dyadic rational and is produced from integers, so the
//! sampled matrices are exact in double precision for all supported levels.

use std::fmt;

use crate::linalg::DenseMatrix;

/// Largest resolution level [`CollocationGrid::new`] accepts.
///
/// At `J = 11` each of the three `2M x 2M` matrices takes 128 MiB.
pub const MAX_LEVEL: u32 = 11;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HaarError {
    #[error("wavelet index must be >= 1, got {0}")]
    InvalidIndex(usize),
    #[error("translation k = {k} out of range for level j = {level}")]
    InvalidTranslation { level: u32, k: usize },
    #[error("resolution level {level} exceeds the supported maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },
    #[error("cannot allocate {bytes} bytes for the level-{level} collocation matrices")]
    Allocation { level: u32, bytes: usize },
}

/// Position of one function in the Haar family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveletIndex(usize);

impl WaveletIndex {
    pub fn new(i: usize) -> Result<Self, HaarError> {
        if i == 0 {
            return Err(HaarError::InvalidIndex(i));
        }
        Ok(Self(i))
    }

    /// The wavelet at dilation `level` and translation `k`.
    pub fn from_level(level: u32, k: usize) -> Result<Self, HaarError> {
        let m = 1usize
            .checked_shl(level)
            .ok_or(HaarError::InvalidTranslation { level, k })?;
        if k >= m {
            return Err(HaarError::InvalidTranslation { level, k });
        }
        Ok(Self(m + k + 1))
    }

    pub fn scaling() -> Self {
        Self(1)
    }

    /// 1-based wavelet number.
    pub fn get(self) -> usize {
        self.0
    }

    /// `(j, k)` for a wavelet, `None` for the scaling function.
    pub fn level_translation(self) -> Option<(u32, usize)> {
        if self.0 == 1 {
            return None;
        }
        let n = self.0 - 1;
        let level = usize::BITS - 1 - n.leading_zeros();
        Some((level, n - (1usize << level)))
    }

    pub fn support(self) -> Support {
        match self.level_translation() {
            None => Support {
                eta1: 0.0,
                eta2: 1.0,
                eta3: 1.0,
            },
            Some((level, k)) => {
                // breakpoints are (2k, 2k+1, 2k+2) / 2^(j+1)
                let denom = 2f64.powi(level as i32 + 1);
                let k = k as f64;
                Support {
                    eta1: 2.0 * k / denom,
                    eta2: (2.0 * k + 1.0) / denom,
                    eta3: (2.0 * k + 2.0) / denom,
                }
            }
        }
    }
}

impl fmt::Display for WaveletIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level_translation() {
            None => write!(f, "h1"),
            Some((j, k)) => write!(f, "h{} (j={j}, k={k})", self.0),
        }
    }
}

/// Breakpoints `eta1 < eta2 < eta3` of a Haar function.
///
/// For the scaling function `eta2 = eta3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl Support {
    pub fn width(&self) -> f64 {
        self.eta3 - self.eta1
    }
}

/// Value of `h_i(x)`: `1` on `[eta1, eta2)`, `-1` on `[eta2, eta3)`, `0`
/// elsewhere. The scaling function is `1` on the closed interval `[0, 1]`.
pub fn haar_eval(idx: WaveletIndex, x: f64) -> f64 {
    if idx.get() == 1 {
        return if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
    }
    let s = idx.support();
    if s.eta1 <= x && x < s.eta2 {
        1.0
    } else if s.eta2 <= x && x < s.eta3 {
        -1.0
    } else {
        0.0
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// The `order`-fold integral of `h_i` from `0` to `x`.
///
/// `order = 0` returns [`haar_eval`].
pub fn haar_integral(idx: WaveletIndex, order: u32, x: f64) -> f64 {
    if order == 0 {
        return haar_eval(idx, x);
    }
    let v = order as i32;
    let norm = factorial(order);
    if idx.get() == 1 {
        return if x <= 0.0 { 0.0 } else { x.powi(v) / norm };
    }
    let s = idx.support();
    if x < s.eta1 {
        0.0
    } else if x <= s.eta2 {
        (x - s.eta1).powi(v) / norm
    } else if x <= s.eta3 {
        ((x - s.eta1).powi(v) - 2.0 * (x - s.eta2).powi(v)) / norm
    } else {
        // (u+d)^v - 2u^v + (u-d)^v summed by even binomial terms, which avoids
        // cancellation between the three powers
        let u = x - s.eta2;
        let d = s.eta2 - s.eta1;
        let mut binom = 1.0;
        let mut sum = 0.0;
        for m in 1..=order {
            binom = binom * f64::from(order - m + 1) / f64::from(m);
            if m % 2 == 0 {
                sum += binom * u.powi(v - m as i32) * d.powi(m as i32);
            }
        }
        2.0 * sum / norm
    }
}

/// `P_{order,i}(x)` for every `i = 1..=n_basis`.
pub fn integrals_at(n_basis: usize, order: u32, x: f64) -> Vec<f64> {
    (1..=n_basis)
        .map(|i| haar_integral(WaveletIndex(i), order, x))
        .collect()
}

/// Uniform midpoint collocation grid at resolution `J` together with the
/// sampled matrices (row = wavelet, column = collocation point).
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    level: u32,
    points: Vec<f64>,
    h: DenseMatrix,
    p1: DenseMatrix,
    p2: DenseMatrix,
}

impl CollocationGrid {
    pub fn new(level: u32) -> Result<Self, HaarError> {
        if level > MAX_LEVEL {
            return Err(HaarError::LevelTooLarge {
                level,
                max: MAX_LEVEL,
            });
        }
        let n = 2usize << level;
        let alloc = |level| {
            DenseMatrix::try_zeros(n, n).ok_or(HaarError::Allocation {
                level,
                bytes: 3 * n * n * std::mem::size_of::<f64>(),
            })
        };
        let mut h = alloc(level)?;
        let mut p1 = alloc(level)?;
        let mut p2 = alloc(level)?;

        // x_c = (2c - 1) / (4M), c = 1..2M
        let denom = (2 * n) as f64;
        let points: Vec<f64> = (1..=n).map(|c| (2 * c - 1) as f64 / denom).collect();

        for i in 0..n {
            let idx = WaveletIndex(i + 1);
            for (c, &x) in points.iter().enumerate() {
                h[(i, c)] = haar_eval(idx, x);
                p1[(i, c)] = haar_integral(idx, 1, x);
                p2[(i, c)] = haar_integral(idx, 2, x);
            }
        }
        Ok(Self {
            level,
            points,
            h,
            p1,
            p2,
        })
    }

    /// Resolution level `J`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// `M = 2^J`.
    pub fn m(&self) -> usize {
        1usize << self.level
    }

    /// Number of basis functions and collocation points, `2M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn p1(&self) -> &DenseMatrix {
        &self.p1
    }

    pub fn p2(&self) -> &DenseMatrix {
        &self.p2
    }

    pub fn matrix(&self, which: GridMatrix) -> &DenseMatrix {
        match which {
            GridMatrix::H => &self.h,
            GridMatrix::P1 => &self.p1,
            GridMatrix::P2 => &self.p2,
        }
    }
}

/// Builds the collocation grid at resolution `level`.
pub fn build_grid(level: u32) -> Result<CollocationGrid, HaarError> {
    CollocationGrid::new(level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMatrix {
    H,
    P1,
    P2,
}

impl std::str::FromStr for GridMatrix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" | "h" => Ok(Self::H),
            "P1" | "p1" => Ok(Self::P1),
            "P2" | "p2" => Ok(Self::P2),
            other => Err(format!("unknown matrix '{other}', expected H, P1 or P2")),
        }
    }
}

impl fmt::Display for GridMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::H => "H",
            Self::P1 => "P1",
            Self::P2 => "P2",
        })
    }
}
