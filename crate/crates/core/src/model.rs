//! Domain types shared by every module.
//!
//! Curves in a [`LineEnsemble`] are stored top first: `curves[0]` is curve 1
//! in the usual numbering, and larger indices lie further down.

use crate::error::{Error, Result};
use crate::stats::MeanAccumulator;

/// Exponents above this value make `H` saturate to `+inf`.
pub const DEFAULT_EXP_CAP: f64 = 700.0;

/// Uniform grid on `[a, b]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b || n < 2 {
            return Err(Error::InvalidGrid { a, b, n });
        }
        Ok(Grid { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; a grid has at least two points.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.n - 1) as f64
    }

    /// `u_j = a + j (b - a)/(n - 1)`, with the last point pinned to `b`.
    pub fn point(&self, j: usize) -> f64 {
        assert!(j < self.n, "grid index {j} out of range (n = {})", self.n);
        if j == self.n - 1 {
            self.b
        } else {
            self.a + j as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Index of the grid point equal to `u` up to rounding, if any.
    pub fn index_of(&self, u: f64) -> Option<usize> {
        let delta = self.spacing();
        let x = (u - self.a) / delta;
        if !x.is_finite() || x < -0.5 || x > (self.n - 1) as f64 + 0.5 {
            return None;
        }
        let j = x.round() as usize;
        let tol = 1e-9 * delta + 1e-12 * u.abs();
        ((self.point(j) - u).abs() <= tol).then_some(j)
    }

    pub fn require_index(&self, u: f64) -> Result<usize> {
        self.index_of(u).ok_or_else(|| {
            Error::GridMismatch(format!(
                "{u} is not a point of the grid on [{}, {}] with {} points",
                self.a, self.b, self.n
            ))
        })
    }

    /// The grid restricted to indices `i0..=i1`.
    pub fn sub_grid(&self, i0: usize, i1: usize) -> Result<Grid> {
        if i1 >= self.n || i0 >= i1 {
            return Err(Error::GridMismatch(format!("index range {i0}..={i1} is not a sub-grid of {} points", self.n)));
        }
        Grid::new(self.point(i0), self.point(i1), i1 - i0 + 1)
    }

    /// Same point set up to rounding.
    pub fn approx_eq(&self, other: &Grid) -> bool {
        let tol = 1e-9 * self.spacing();
        self.n == other.n && (self.a - other.a).abs() <= tol && (self.b - other.b).abs() <= tol
    }
}

/// A real-valued curve sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: Grid,
    values: Vec<f64>,
}

impl Path {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Path { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Path::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Path::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Upper or lower bounding curve of a Gibbs block.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCurve {
    PlusInfinity,
    MinusInfinity,
    Curve(Path),
}

impl BoundaryCurve {
    /// Value at grid index `j`, with the infinite sentinels mapped to `±inf`.
    pub fn value(&self, j: usize) -> f64 {
        match self {
            BoundaryCurve::PlusInfinity => f64::INFINITY,
            BoundaryCurve::MinusInfinity => f64::NEG_INFINITY,
            BoundaryCurve::Curve(p) => p.values[j],
        }
    }

    pub fn as_path(&self) -> Option<&Path> {
        match self {
            BoundaryCurve::Curve(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, BoundaryCurve::Curve(_))
    }
}

/// `k` curves on a common grid, top curve first.
#[derive(Debug, Clone, PartialEq)]
pub struct LineEnsemble {
    grid: Grid,
    curves: Vec<Vec<f64>>,
}

impl LineEnsemble {
    pub fn new(grid: Grid, curves: Vec<Vec<f64>>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidSpec("a line ensemble needs at least one curve".into()));
        }
        for c in &curves {
            if c.len() != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), found: c.len() });
            }
        }
        Ok(LineEnsemble { grid, curves })
    }

    /// Curves interpolating linearly between `x[i]` and `y[i]`.
    pub fn linear(grid: Grid, x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
        }
        let last = (grid.len() - 1) as f64;
        let curves = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| (0..grid.len()).map(|j| xi + (yi - xi) * j as f64 / last).collect())
            .collect();
        LineEnsemble::new(grid, curves)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.curves.len()
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        &self.curves[i]
    }

    pub fn curve_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.curves[i]
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    pub fn path(&self, i: usize) -> Result<Path> {
        Path::new(self.grid, self.curves[i].clone())
    }

    pub fn into_curves(self) -> Vec<Vec<f64>> {
        self.curves
    }

    /// True when every curve is strictly above the next one at every grid point.
    pub fn is_strictly_ordered(&self) -> bool {
        self.curves.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a > b))
    }
}

/// Pairwise interaction `H` applied to the gap `lower - upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hamiltonian {
    /// `e^x`
    Exp,
    /// `e^{t^{1/3} x}`
    ScaledExp(f64),
    /// `0` for `x <= 0`, `+inf` otherwise.
    Ordered,
}

impl Hamiltonian {
    /// `H_t` for a given `t > 0`.
    pub fn scaled(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::NonPositiveT(t));
        }
        Ok(Hamiltonian::ScaledExp(t))
    }

    /// Exponential rate `s` with `H(x) = e^{s x}`, or `None` for the ordered case.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            Hamiltonian::Exp => Some(1.0),
            Hamiltonian::ScaledExp(t) => Some(t.cbrt()),
            Hamiltonian::Ordered => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_capped(x, DEFAULT_EXP_CAP)
    }

    /// Evaluates `H(x)`, returning `+inf` once the exponent exceeds `cap`.
    pub fn eval_capped(&self, x: f64, cap: f64) -> f64 {
        match self.rate() {
            Some(s) => exp_capped(s * x, cap),
            None => {
                if x <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self, Hamiltonian::Ordered)
    }
}

#[inline]
pub(crate) fn exp_capped(e: f64, cap: f64) -> f64 {
    if e > cap {
        f64::INFINITY
    } else {
        e.exp()
    }
}

/// Entrance and exit values plus the bounding curves `f` (above) and `g` (below).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub upper: BoundaryCurve,
    pub lower: BoundaryCurve,
}

impl BoundaryData {
    pub fn new(x: Vec<f64>, y: Vec<f64>, upper: BoundaryCurve, lower: BoundaryCurve) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
        }
        if x.is_empty() {
            return Err(Error::InvalidSpec("boundary data needs at least one curve".into()));
        }
        if matches!(upper, BoundaryCurve::MinusInfinity) {
            return Err(Error::InvalidSpec("-inf is not a legal upper boundary".into()));
        }
        if matches!(lower, BoundaryCurve::PlusInfinity) {
            return Err(Error::InvalidSpec("+inf is not a legal lower boundary".into()));
        }
        if let (Some(f), Some(g)) = (upper.as_path(), lower.as_path()) {
            if !f.grid().approx_eq(g.grid()) {
                return Err(Error::GridMismatch("upper and lower boundary curves use different grids".into()));
            }
        }
        Ok(BoundaryData { x, y, upper, lower })
    }

    /// Free boundary: `f = +inf`, `g = -inf`.
    pub fn free(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        BoundaryData::new(x, y, BoundaryCurve::PlusInfinity, BoundaryCurve::MinusInfinity)
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }
}

/// Monte Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_accumulator(acc: &MeanAccumulator, seed: u64) -> Self {
        McEstimate { mean: acc.mean(), stderr: acc.stderr(), n_samples: acc.count(), seed }
    }

    /// `|self - other| <= z * sqrt(se1^2 + se2^2)`.
    pub fn agrees_with(&self, other: &McEstimate, z: f64) -> bool {
        (self.mean - other.mean).abs() <= z * self.stderr.hypot(other.stderr)
    }
}
