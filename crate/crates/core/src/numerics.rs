//! Shared numerical substrate: monotone root finding, tridiagonal solves,
//! weighted quadrature, interpolation and finite-difference stencils.

use std::fmt;

/// Convergence control for iterative routines.
///
/// `abs + rel` must be positive; defaults are tight enough that root finding
/// bottoms out at f64 resolution before hitting `max_iters`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_iters: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-14, rel: 1e-12, max_iters: 200 }
    }
}

impl Tolerance {
    /// Residual threshold for a given target magnitude.
    pub fn threshold(&self, target: f64) -> f64 {
        self.abs + self.rel * target.abs()
    }
}

/// 1-D grid with strictly increasing nodes, uniform unless stated otherwise.
#[derive(Debug, Clone)]
pub struct Grid1D {
    pub lower: f64,
    pub upper: f64,
    nodes: Vec<f64>,
    uniform: bool,
}

impl Grid1D {
    /// Uniform grid with `n >= 5` nodes spanning `[lower, upper]`.
    pub fn uniform(lower: f64, upper: f64, n: usize) -> Self {
        assert!(n >= 5, "grid needs at least 5 nodes, got {n}");
        assert!(upper > lower, "degenerate grid [{lower}, {upper}]");
        let h = (upper - lower) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| lower + i as f64 * h).collect();
        nodes[n - 1] = upper;
        Grid1D { lower, upper, nodes, uniform: true }
    }

    /// Grid from explicit strictly increasing nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Self {
        assert!(nodes.len() >= 5, "grid needs at least 5 nodes");
        assert!(
            nodes.windows(2).all(|w| w[1] > w[0]),
            "grid nodes must be strictly increasing"
        );
        let lower = nodes[0];
        let upper = nodes[nodes.len() - 1];
        let h0 = nodes[1] - nodes[0];
        let uniform = nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-12 * h0.max(1.0));
        Grid1D { lower, upper, nodes, uniform }
    }

    /// Symmetric sinh-stretched grid on `[-half_width, half_width]`: node
    /// spacing grows roughly like `stretch * |x|` away from the origin.
    /// `n` should be odd so the origin is a node.
    pub fn sinh_stretched(half_width: f64, n: usize, stretch: f64) -> Self {
        assert!(n >= 5 && n % 2 == 1, "stretched grid wants odd n >= 5");
        let m = (n - 1) as f64 / 2.0;
        let scale = half_width / stretch.sinh();
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let xi = (i as f64 - m) / m;
            nodes.push(scale * (stretch * xi).sinh());
        }
        nodes[(n - 1) / 2] = 0.0;
        Grid1D::from_nodes(nodes)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Spacing of a uniform grid.
    pub fn step(&self) -> f64 {
        debug_assert!(self.uniform, "step() on non-uniform grid");
        self.nodes[1] - self.nodes[0]
    }

    /// Index of the last node `<= x`, clamped to `[0, n-2]`.
    pub fn cell_of(&self, x: f64) -> usize {
        if self.uniform {
            let h = self.step();
            let i = ((x - self.lower) / h).floor() as isize;
            i.clamp(0, self.nodes.len() as isize - 2) as usize
        } else {
            match self.nodes.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
                Ok(i) => i.min(self.nodes.len() - 2),
                Err(i) => i.saturating_sub(1).min(self.nodes.len() - 2),
            }
        }
    }
}

/// Tridiagonal system `A x = rhs` with `diag` of length n and off-diagonals
/// of length n-1.
#[derive(Debug, Clone)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, rhs: Vec<f64>) -> Self {
        let n = diag.len();
        assert_eq!(lower.len(), n - 1, "lower diagonal length");
        assert_eq!(upper.len(), n - 1, "upper diagonal length");
        assert_eq!(rhs.len(), n, "rhs length");
        TridiagonalSystem { lower, diag, upper, rhs }
    }

    /// Residual `max_i |(A x - rhs)_i|` for a candidate solution.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let n = self.diag.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            worst = worst.max((v - self.rhs[i]).abs());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// Function values at the bracket ends do not straddle the target.
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64, target: f64 },
    /// Iteration budget exhausted before meeting the tolerance.
    MaxIters { last: f64, residual: f64 },
    /// Elimination hit a vanishing pivot.
    ZeroPivot { index: usize },
    /// Quadrature grid does not reach the required weight cutoff.
    DomainTooSmall { required: f64, lower: f64, upper: f64 },
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericsError::NoBracket { lo, hi, f_lo, f_hi, target } => write!(
                f,
                "no bracket: f({lo}) = {f_lo}, f({hi}) = {f_hi} do not straddle {target}"
            ),
            NumericsError::MaxIters { last, residual } => {
                write!(f, "max iterations reached at x = {last} (residual {residual:e})")
            }
            NumericsError::ZeroPivot { index } => write!(f, "zero pivot at row {index}"),
            NumericsError::DomainTooSmall { required, lower, upper } => write!(
                f,
                "grid [{lower}, {upper}] does not cover |Y| <= {required}"
            ),
        }
    }
}

impl std::error::Error for NumericsError {}

/// Solves `f(x) = target` for strictly monotone `f` on a bracket.
///
/// Bisection narrows the bracket to width 1e-3, then Newton steps with the
/// analytic derivative `df` finish the job; any Newton step leaving the
/// bracket falls back to a bisection step, so convergence is guaranteed.
pub fn invert_monotone(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    bracket: (f64, f64),
    target: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError> {
    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut g_lo = f(lo) - target;
    let g_hi = f(hi) - target;
    let thresh = tol.threshold(target);
    if g_lo.abs() <= thresh {
        return Ok(lo);
    }
    if g_hi.abs() <= thresh {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(NumericsError::NoBracket {
            lo,
            hi,
            f_lo: g_lo + target,
            f_hi: g_hi + target,
            target,
        });
    }

    let mut x = 0.5 * (lo + hi);
    let mut g = f(x) - target;
    for _ in 0..tol.max_iters {
        if g.abs() <= thresh {
            return Ok(x);
        }
        // Maintain the bracket around the sign change.
        if g.signum() == g_lo.signum() {
            lo = x;
            g_lo = g;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= f64::EPSILON * (lo.abs() + hi.abs() + 1.0) {
            // Bracket exhausted at f64 resolution; accept the midpoint.
            return Ok(0.5 * (lo + hi));
        }
        let mut next = if width < 1e-3 {
            let d = df(x);
            let newton = x - g / d;
            if d != 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            next = 0.5 * (lo + hi);
        }
        x = next;
        g = f(x) - target;
    }
    if g.abs() <= thresh {
        Ok(x)
    } else {
        Err(NumericsError::MaxIters { last: x, residual: g.abs() })
    }
}

/// Thomas algorithm for a tridiagonal system.
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>, NumericsError> {
    let n = sys.diag.len();
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let pivot0 = sys.diag[0];
    if pivot0.abs() < f64::MIN_POSITIVE {
        return Err(NumericsError::ZeroPivot { index: 0 });
    }
    c[0] = sys.upper[0] / pivot0;
    d[0] = sys.rhs[0] / pivot0;
    for i in 1..n {
        let pivot = sys.diag[i] - sys.lower[i - 1] * c[i - 1];
        if pivot.abs() < f64::MIN_POSITIVE {
            return Err(NumericsError::ZeroPivot { index: i });
        }
        if i < n - 1 {
            c[i] = sys.upper[i] / pivot;
        }
        d[i] = (sys.rhs[i] - sys.lower[i - 1] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Pairwise sum in a fixed order; deterministic and accurate to O(log n) ulps.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Weight for [`weighted_inner_product`].
pub enum Weight<'a> {
    /// rho(Y) = exp(-Y^2/4), the Gaussian weight of the L^2_rho spaces.
    GaussianRho,
    Custom(&'a dyn Fn(f64) -> f64),
}

/// Cutoff beyond which exp(-Y^2/4) < 1e-16; quadrature grids must reach it.
pub const RHO_CUTOFF: f64 = 13.0;

/// Value plus a step-doubling error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
}

/// Composite-Simpson inner product `int f g w dY` over the grid.
///
/// For the Gaussian weight the grid must cover `|Y| <= 13` where the weight
/// has decayed below 1e-16; the integrand beyond the grid is dropped.
pub fn weighted_inner_product(
    f: &[f64],
    g: &[f64],
    weight: Weight<'_>,
    grid: &Grid1D,
) -> Result<QuadratureResult, NumericsError> {
    assert_eq!(f.len(), grid.n(), "field/grid size mismatch");
    assert_eq!(g.len(), grid.n(), "field/grid size mismatch");
    if let Weight::GaussianRho = weight {
        if grid.lower > -RHO_CUTOFF || grid.upper < RHO_CUTOFF {
            return Err(NumericsError::DomainTooSmall {
                required: RHO_CUTOFF,
                lower: grid.lower,
                upper: grid.upper,
            });
        }
    }
    let w = |y: f64| match &weight {
        Weight::GaussianRho => (-y * y / 4.0).exp(),
        Weight::Custom(func) => func(y),
    };
    let integrand: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(f.iter().zip(g.iter()))
        .map(|(&y, (&a, &b))| a * b * w(y))
        .collect();
    let fine = integrate_samples(grid, &integrand);
    let coarse = integrate_coarse(grid, &integrand);
    Ok(QuadratureResult { value: fine, error_estimate: (fine - coarse).abs() / 15.0 })
}

/// Integrates samples over the grid: composite Simpson on uniform grids
/// (trapezoid patch on the last cell if the count is even), trapezoid
/// otherwise.
pub fn integrate_samples(grid: &Grid1D, values: &[f64]) -> f64 {
    let n = grid.n();
    assert_eq!(values.len(), n);
    if grid.is_uniform() && n >= 3 {
        let h = grid.step();
        let m = if n % 2 == 1 { n } else { n - 1 };
        let mut terms = Vec::with_capacity(m + 1);
        terms.push(values[0] * h / 3.0);
        for j in 1..m - 1 {
            let c = if j % 2 == 1 { 4.0 } else { 2.0 };
            terms.push(values[j] * c * h / 3.0);
        }
        terms.push(values[m - 1] * h / 3.0);
        if m < n {
            terms.push(0.5 * h * (values[n - 2] + values[n - 1]));
        }
        pairwise_sum(&terms)
    } else {
        let nodes = grid.nodes();
        let terms: Vec<f64> = (0..n - 1)
            .map(|i| 0.5 * (nodes[i + 1] - nodes[i]) * (values[i] + values[i + 1]))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Same integral on the coarsened grid (every other node) for error estimates.
fn integrate_coarse(grid: &Grid1D, values: &[f64]) -> f64 {
    let n = grid.n();
    let coarse_nodes: Vec<f64> = grid.nodes().iter().copied().step_by(2).collect();
    let coarse_vals: Vec<f64> = values.iter().copied().step_by(2).collect();
    if coarse_nodes.len() < 5 || *coarse_nodes.last().unwrap() < grid.upper {
        // Fall back to trapezoid over everything when coarsening misses the end.
        let nodes = grid.nodes();
        let terms: Vec<f64> = (0..n - 1)
            .map(|i| 0.5 * (nodes[i + 1] - nodes[i]) * (values[i] + values[i + 1]))
            .collect();
        return pairwise_sum(&terms);
    }
    let coarse = Grid1D::from_nodes(coarse_nodes);
    integrate_samples(&coarse, &coarse_vals)
}

/// Cubic Hermite interpolant through `(x_i, y_i)` with prescribed slopes.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    dys: Vec<f64>,
}

impl CubicHermite {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, dys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && ys.len() == dys.len());
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "nodes must increase");
        CubicHermite { xs, ys, dys }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.ys[i] + h10 * h * self.dys[i] + h01 * self.ys[i + 1] + h11 * h * self.dys[i + 1]
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (d00, d10, d01, d11) = hermite_basis_derivative(t);
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h + d10 * self.dys[i] + d11 * self.dys[i + 1]
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_basis_derivative(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

/// Monotone cubic interpolation (Fritsch-Carlson limited slopes) on
/// arbitrary strictly increasing nodes. Does not overshoot the data.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    interp: CubicHermite,
}

impl MonotoneCubic {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n);
        let mut slopes = vec![0.0; n];
        let mut secants = vec![0.0; n - 1];
        for i in 0..n - 1 {
            secants[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (s0, s1) = (secants[i - 1], secants[i]);
            slopes[i] = if s0 * s1 <= 0.0 {
                0.0
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / s0 + w1 / s1)
            };
        }
        // Fritsch-Carlson limiting at the boundaries.
        for (i, s) in [(0usize, secants[0]), (n - 1, secants[n - 2])] {
            if slopes[i] * s <= 0.0 {
                slopes[i] = 0.0;
            } else if slopes[i].abs() > 3.0 * s.abs() {
                slopes[i] = 3.0 * s;
            }
        }
        MonotoneCubic { interp: CubicHermite::new(xs.to_vec(), ys.to_vec(), slopes) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.interp.domain();
        self.interp.eval(x.clamp(lo, hi))
    }
}

/// Centered 4th-order first derivative with Richardson extrapolation over
/// steps `h` and `h/2`.
pub fn fd_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h);
    let full = d(h);
    let half = d(h / 2.0);
    (16.0 * half - full) / 15.0
}

/// Centered 4th-order second derivative with Richardson extrapolation.
pub fn fd_second_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| {
        (-(f(x + 2.0 * h) + f(x - 2.0 * h)) + 16.0 * (f(x + h) + f(x - h)) - 30.0 * f(x))
            / (12.0 * h * h)
    };
    let full = d(h);
    let half = d(h / 2.0);
    (16.0 * half - full) / 15.0
}
