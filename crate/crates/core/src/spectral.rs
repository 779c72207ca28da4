//! Linearized operators of the renormalized flows, eigen-residual
//! verification, the weighted Lyapunov norms, and the commuting vector
//! field A.

use crate::field::Field2D;
use crate::numerics::{fd_derivative, fd_second_derivative, pairwise_sum};
use crate::profiles::{f_k, psi, theta, ProfileHandle};
use std::fmt;

/// Which linearized operator to apply.
#[derive(Debug, Clone, Copy)]
pub enum OperatorKind {
    /// Shock linearization (1-alpha_i) + dPsi_i + (alpha_i X + Psi_i) d_X.
    HX { i: u32 },
    /// Transverse transport 1 + (Z/2k) d_Z - 2 F_k(aZ).
    HZ { k: u32, a: f64 },
    /// Gaussian-frame heat linearization -1 + (Y/2) d_Y - d_YY.
    HRho,
    /// Forced-equation transport 4 - 4 F_k(aZ) + (Z/2k) d_Z.
    MZ { k: u32, a: f64 },
    /// Forced-equation Gaussian frame (Y/2) d_Y - d_YY.
    MRho,
    /// 2-D renormalized linearization -1/2 + (3/2)X d_X + (Z/2k) d_Z
    /// + Theta d_X + d_X Theta.
    LZ { k: u32 },
}

/// Derivative source for operator application.
#[derive(Debug, Clone, Copy)]
pub enum DerivativeMode {
    /// Use the target's analytic derivatives.
    Analytic,
    /// Centered 4th-order stencils with Richardson extrapolation, step h.
    FiniteDifference { h: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub mode: DerivativeMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    /// Analytic mode requested a derivative order the target cannot supply.
    InsufficientDerivatives { requested: usize, available: usize },
    /// Grid-sampled input too coarse: stencil step-doubling disagreement.
    GridTooCoarse { disagreement: f64 },
    /// Integrand does not vanish fast enough at the X = 0 axis.
    AxisOrderViolation { row: usize, ratio_near: f64, ratio_far: f64 },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::InsufficientDerivatives { requested, available } => write!(
                f,
                "operator needs derivative order {requested}, target provides {available}"
            ),
            SpectralError::GridTooCoarse { disagreement } => {
                write!(f, "stencil step-doubling disagreement {disagreement:e} > 1e-4")
            }
            SpectralError::AxisOrderViolation { row, ratio_near, ratio_far } => write!(
                f,
                "field/weight ratio grows toward the axis in row {row}: |r| = {ratio_near:e} near vs {ratio_far:e} off-axis"
            ),
        }
    }
}

impl std::error::Error for SpectralError {}

/// A scalar function of one variable with derivatives up to `max_order`.
pub trait Scalar1D {
    fn eval(&self, x: f64, order: usize) -> f64;
    fn max_order(&self) -> usize;
}

/// A scalar function of (X, Z) with partial derivatives.
pub trait Scalar2D {
    fn eval(&self, x: f64, z: f64, order: (usize, usize)) -> f64;
}

impl Scalar1D for ProfileHandle {
    fn eval(&self, x: f64, order: usize) -> f64 {
        self.eval1d(x, order)
    }
    fn max_order(&self) -> usize {
        match self {
            ProfileHandle::Psi { .. } => 4,
            ProfileHandle::Psi1Closed => 0,
            ProfileHandle::PhiX { .. } => 1,
            ProfileHandle::FK { .. }
            | ProfileHandle::PhiZ { .. }
            | ProfileHandle::PsiEll { .. }
            | ProfileHandle::Hermite { .. } => 2,
            _ => 0,
        }
    }
}

/// Closure-backed 1-D target: `f(x, order)` with a declared max order.
pub struct Analytic1D<F: Fn(f64, usize) -> f64> {
    pub f: F,
    pub max_order: usize,
}

impl<F: Fn(f64, usize) -> f64> Scalar1D for Analytic1D<F> {
    fn eval(&self, x: f64, order: usize) -> f64 {
        (self.f)(x, order)
    }
    fn max_order(&self) -> usize {
        self.max_order
    }
}

impl Scalar2D for ProfileHandle {
    fn eval(&self, x: f64, z: f64, order: (usize, usize)) -> f64 {
        self.eval2d(x, z, order)
    }
}

fn derivative_order_needed(kind: OperatorKind) -> usize {
    match kind {
        OperatorKind::HRho | OperatorKind::MRho => 2,
        _ => 1,
    }
}

/// Applies a 1-D operator to the target at the given points.
pub fn apply_operator_1d(
    spec: &OperatorSpec,
    target: &dyn Scalar1D,
    points: &[f64],
) -> Result<Vec<f64>, SpectralError> {
    let need = derivative_order_needed(spec.kind);
    if let DerivativeMode::Analytic = spec.mode {
        if target.max_order() < need {
            return Err(SpectralError::InsufficientDerivatives {
                requested: need,
                available: target.max_order(),
            });
        }
    }
    let deriv = |x: f64, order: usize| -> f64 {
        match spec.mode {
            DerivativeMode::Analytic => target.eval(x, order),
            DerivativeMode::FiniteDifference { h } => match order {
                0 => target.eval(x, 0),
                1 => fd_derivative(|t| target.eval(t, 0), x, h),
                _ => fd_second_derivative(|t| target.eval(t, 0), x, h),
            },
        }
    };
    let out = points
        .iter()
        .map(|&x| {
            let u = deriv(x, 0);
            let u1 = deriv(x, 1);
            match spec.kind {
                OperatorKind::HX { i } => {
                    let alpha = 1.0 + 1.0 / (2.0 * i as f64);
                    let p = psi(i, x, 0);
                    let dp = psi(i, x, 1);
                    (1.0 - alpha) * u + dp * u + (alpha * x + p) * u1
                }
                OperatorKind::HZ { k, a } => {
                    u + x / (2.0 * k as f64) * u1 - 2.0 * f_k(k, a, x, 0) * u
                }
                OperatorKind::HRho => -u + 0.5 * x * u1 - deriv(x, 2),
                OperatorKind::MZ { k, a } => {
                    4.0 * u - 4.0 * f_k(k, a, x, 0) * u + x / (2.0 * k as f64) * u1
                }
                OperatorKind::MRho => 0.5 * x * u1 - deriv(x, 2),
                OperatorKind::LZ { .. } => unreachable!("LZ acts on 2-D targets"),
            }
        })
        .collect();
    Ok(out)
}

/// Applies the 2-D operator L_Z to the target at the given (X, Z) points.
pub fn apply_operator_2d(
    spec: &OperatorSpec,
    target: &dyn Scalar2D,
    points: &[(f64, f64)],
) -> Result<Vec<f64>, SpectralError> {
    let OperatorKind::LZ { k } = spec.kind else {
        panic!("only LZ acts on 2-D targets");
    };
    let deriv = |x: f64, z: f64, order: (usize, usize)| -> f64 {
        match spec.mode {
            DerivativeMode::Analytic => target.eval(x, z, order),
            DerivativeMode::FiniteDifference { h } => match order {
                (0, 0) => target.eval(x, z, (0, 0)),
                (1, 0) => fd_derivative(|t| target.eval(t, z, (0, 0)), x, h),
                (0, 1) => fd_derivative(|t| target.eval(x, t, (0, 0)), z, h),
                _ => panic!("unexpected derivative request"),
            },
        }
    };
    Ok(points
        .iter()
        .map(|&(x, z)| {
            let u = deriv(x, z, (0, 0));
            let ux = deriv(x, z, (1, 0));
            let uz = deriv(x, z, (0, 1));
            let th = theta(1, k, 1.0, 1.0, x, z, (0, 0));
            let thx = theta(1, k, 1.0, 1.0, x, z, (1, 0));
            -0.5 * u + 1.5 * x * ux + z / (2.0 * k as f64) * uz + th * ux + thx * u
        })
        .collect())
}

/// Max relative eigen-residual max |op(phi) - nu phi| / denom with
/// denom = |nu| max|phi| + eps for nu != 0 and max|phi| + eps for a
/// kernel mode (the displayed formula degenerates at nu = 0).
pub fn eigen_residual_1d(
    spec: &OperatorSpec,
    eigenfunction: &dyn Scalar1D,
    claimed: f64,
    points: &[f64],
) -> Result<f64, SpectralError> {
    let applied = apply_operator_1d(spec, eigenfunction, points)?;
    Ok(relative_residual(
        &applied,
        &points.iter().map(|&x| eigenfunction.eval(x, 0)).collect::<Vec<_>>(),
        claimed,
    ))
}

/// Same for the 2-D operator.
pub fn eigen_residual_2d(
    spec: &OperatorSpec,
    eigenfunction: &dyn Scalar2D,
    claimed: f64,
    points: &[(f64, f64)],
) -> Result<f64, SpectralError> {
    let applied = apply_operator_2d(spec, eigenfunction, points)?;
    Ok(relative_residual(
        &applied,
        &points
            .iter()
            .map(|&(x, z)| eigenfunction.eval(x, z, (0, 0)))
            .collect::<Vec<_>>(),
        claimed,
    ))
}

fn relative_residual(applied: &[f64], values: &[f64], claimed: f64) -> f64 {
    const EPS_FLOOR: f64 = 1e-30;
    let max_phi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if claimed == 0.0 { 1.0 } else { claimed.abs() };
    let denom = scale * max_phi + EPS_FLOOR;
    let mut worst = 0.0f64;
    for (a, v) in applied.iter().zip(values) {
        worst = worst.max((a - claimed * v).abs());
    }
    worst / denom
}

/// Weight and exponent for the 2q Lyapunov norm; the measure is fixed to
/// dX dY / (|X| <Y>).
#[derive(Debug, Clone, Copy)]
pub struct WeightSpec {
    /// Weight profile, default phi_{4,0}.
    pub weight: ProfileHandle,
    pub q: u32,
}

impl WeightSpec {
    pub fn standard(k: u32) -> Self {
        WeightSpec { weight: ProfileHandle::PhiJl2D { k, j: 4, l: 0 }, q: 6 }
    }
}

/// Result of a weighted-norm evaluation: the norm plus an estimate of the
/// untruncated integrand tail beyond the grid.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNorm {
    pub value: f64,
    pub tail_estimate: f64,
}

/// ( intint field^2q / weight^2q dX dY/(|X| <Y>) )^(1/(2q)) on the grid.
///
/// The field lives on an (X, Z) grid at renormalized time s; the measure's
/// Y is reconstructed through Y = e^((k-1)s/(2k)) Z. The axis column X = 0
/// is excluded and the two adjacent half-cells are integrated assuming the
/// ratio field/weight vanishes linearly, which the near-axis ratio check
/// enforces. Sums are evaluated in scaled form so q = 6 cannot overflow.
pub fn weighted_norm(
    field: &Field2D,
    s: f64,
    k: u32,
    spec: &WeightSpec,
) -> Result<WeightedNorm, SpectralError> {
    let xg = &field.xgrid;
    let zg = &field.zgrid;
    let nx = xg.n();
    let nz = zg.n();
    let stretch = ((k as f64 - 1.0) / (2.0 * k as f64) * s).exp(); // Y = stretch * Z
    let two_q = 2.0 * spec.q as f64;

    // Ratio field/weight on the grid (axis column excluded).
    let mut ratio = vec![0.0f64; nx * nz];
    let mut max_ratio = 0.0f64;
    for jz in 0..nz {
        let z = zg.nodes()[jz];
        for ix in 0..nx {
            let x = xg.nodes()[ix];
            if x == 0.0 {
                continue;
            }
            let w = spec.weight.eval2d(x, z, (0, 0));
            let r = field.at(ix, jz) / w;
            ratio[jz * nx + ix] = r;
            max_ratio = max_ratio.max(r.abs());
        }
    }
    if max_ratio == 0.0 {
        return Ok(WeightedNorm { value: 0.0, tail_estimate: 0.0 });
    }

    // Near-axis order check: the ratio must not grow toward the axis.
    // Only significant content counts; fields whose near-axis values sit
    // at the numerical noise floor (far below the global ratio scale) are
    // integrable regardless of their apparent local slope.
    let axis = xg.cell_of(0.0);
    let (i_near, i_far) = (axis + 1, (axis + 4).min(nx - 1));
    for jz in 0..nz {
        let near = ratio[jz * nx + i_near].abs();
        let far = ratio[jz * nx + i_far].abs();
        if near > 2.0 * far + 1e-9 * max_ratio && near > 0.05 * max_ratio {
            return Err(SpectralError::AxisOrderViolation {
                row: jz,
                ratio_near: near,
                ratio_far: far,
            });
        }
    }

    // Trapezoid cell weights in X and Y, with the measure factors.
    let mut terms: Vec<f64> = Vec::with_capacity(nx * nz);
    let mut tail = 0.0f64;
    for jz in 0..nz {
        let z = zg.nodes()[jz];
        let y = stretch * z;
        let dy = stretch * half_cell(zg.nodes(), jz);
        let row_measure = dy / (1.0 + y * y).sqrt();
        for ix in 0..nx {
            let x = xg.nodes()[ix];
            let r = ratio[jz * nx + ix];
            if x == 0.0 || r == 0.0 {
                continue;
            }
            let scaled = (r.abs() / max_ratio).powf(two_q);
            let dx = half_cell(xg.nodes(), ix);
            let mut cell = scaled * dx / x.abs() * row_measure;
            // Half-cell between the axis and its first neighbours, assuming
            // ratio ~ r * (x/x1): integral of (x/x1)^2q dx/x = 1/(2q).
            let is_axis_neighbour = (ix > 0 && xg.nodes()[ix - 1] == 0.0)
                || (ix + 1 < nx && xg.nodes()[ix + 1] == 0.0);
            if is_axis_neighbour {
                cell += scaled / two_q * row_measure;
            }
            terms.push(cell);
        }
        // Tail estimate: last-column integrand times one more cell width.
        let r_edge = ratio[jz * nx + nx - 1].abs().max(ratio[jz * nx].abs());
        let dx_edge = xg.nodes()[nx - 1] - xg.nodes()[nx - 2];
        tail += (r_edge / max_ratio).powf(two_q) * dx_edge / xg.nodes()[nx - 1].abs()
            * row_measure;
    }
    let sum = pairwise_sum(&terms);
    let value = max_ratio * sum.powf(1.0 / two_q);
    let tail_estimate = max_ratio * tail.powf(1.0 / two_q);
    Ok(WeightedNorm { value, tail_estimate })
}

fn half_cell(nodes: &[f64], i: usize) -> f64 {
    let n = nodes.len();
    let left = if i == 0 { 0.0 } else { 0.5 * (nodes[i] - nodes[i - 1]) };
    let right = if i + 1 == n { 0.0 } else { 0.5 * (nodes[i + 1] - nodes[i]) };
    left + right
}

/// Coefficient of the commuting vector field A:
/// (3/2)X + F_k^(-3/2)(Z) Psi_1(F_k^(3/2)(Z) X).
///
/// Evaluated as X/2 - F^(-3/2) Psi_1^3(F^(3/2) X), which is algebraically
/// identical through the implicit equation and keeps the two-sided bound
/// |X|/2 <= |coeff| <= 3|X|/2 to rounding even where Psi_1 ~ -F^(3/2) X.
pub fn vector_field_a_coefficient(k: u32, x: f64, z: f64) -> f64 {
    let f = f_k(k, 1.0, z, 0);
    let p = psi(1, f.powf(1.5) * x, 0);
    0.5 * x - f.powf(-1.5) * p * p * p
}

/// (A field)(X,Z) = coefficient * d_X field, on an analytic target.
pub fn vector_field_a(
    k: u32,
    target: &dyn Scalar2D,
    points: &[(f64, f64)],
) -> Vec<f64> {
    points
        .iter()
        .map(|&(x, z)| vector_field_a_coefficient(k, x, z) * target.eval(x, z, (1, 0)))
        .collect()
}

/// (A field) on a grid-sampled field, with a step-doubling coarseness check
/// on the X-derivative stencils.
pub fn vector_field_a_field(k: u32, field: &Field2D) -> Result<Field2D, SpectralError> {
    let nx = field.xgrid.n();
    let nz = field.zgrid.n();
    let xs = field.xgrid.nodes();
    let mut out = field.clone();
    let mut worst_disagreement = 0.0f64;
    let scale = field.max_abs().max(1e-300);
    for jz in 0..nz {
        let row = field.row(jz).to_vec();
        for ix in 0..nx {
            let d_fine = nonuniform_dx(xs, &row, ix, 1);
            if ix >= 2 && ix + 2 < nx {
                let d_coarse = nonuniform_dx(xs, &row, ix, 2);
                worst_disagreement = worst_disagreement.max((d_fine - d_coarse).abs() / scale);
            }
            let z = field.zgrid.nodes()[jz];
            *out.at_mut(ix, jz) = vector_field_a_coefficient(k, xs[ix], z) * d_fine;
        }
    }
    if worst_disagreement > 1e-4 {
        return Err(SpectralError::GridTooCoarse { disagreement: worst_disagreement });
    }
    Ok(out)
}

/// Three-point first derivative on possibly non-uniform nodes, with
/// `stride` controlling the stencil spacing for step-doubling checks.
pub fn nonuniform_dx(xs: &[f64], vals: &[f64], i: usize, stride: usize) -> f64 {
    let n = xs.len();
    let (il, ir) = if i < stride {
        (0, 2 * stride.min((n - 1) / 2))
    } else if i + stride >= n {
        (n - 1 - 2 * stride.min((n - 1) / 2), n - 1)
    } else {
        (i - stride, i + stride)
    };
    let im = i.clamp(il + 1, ir - 1);
    let (x0, x1, x2) = (xs[il], xs[im], xs[ir]);
    let (f0, f1, f2) = (vals[il], vals[im], vals[ir]);
    let x = xs[i];
    // Derivative of the quadratic through the three nodes.
    let l0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    f0 * l0 + f1 * l1 + f2 * l2
}

/// One labelled eigen-residual verification.
#[derive(Debug, Clone)]
pub struct EigenCheck {
    pub label: String,
    pub claimed: f64,
    pub residual_analytic: f64,
    pub residual_fd: f64,
}

/// Runs the full catalogue of claimed eigenpairs: the shock operator
/// spectrum and its symmetry modes, the transverse transport operators,
/// the Gaussian-frame operators, and the 2-D products under L_Z.
pub fn eigen_matrix(k: u32) -> Vec<EigenCheck> {
    let mut checks = Vec::new();
    let fd = DerivativeMode::FiniteDifference { h: 1e-3 };

    let x_grid: Vec<f64> = (0..=1000).map(|n| -50.0 + 0.1 * n as f64).collect();
    for i in 1..=2u32 {
        let two_i = 2.0 * i as f64;
        for j in 0..=6u32 {
            let nu = (j as f64 - two_i - 1.0) / two_i;
            let handle = ProfileHandle::PhiX { i, j };
            checks.push(run_check_1d(
                format!("H_X(i={i}) phi_X{j}"),
                OperatorKind::HX { i },
                &handle,
                nu,
                &x_grid,
                fd,
            ));
        }
    }

    // Symmetry-generator modes of H_X.
    for i in 1..=3u32 {
        let alpha = 1.0 + 1.0 / (2.0 * i as f64);
        let modes: [(&str, f64, Box<dyn Fn(f64, usize) -> f64>); 4] = [
            (
                "dPsi",
                -alpha,
                Box::new(move |x, o| psi(i, x, o + 1)),
            ),
            (
                "LambdaAlphaPsi",
                -1.0,
                Box::new(move |x, o| match o {
                    0 => (1.0 - alpha) * psi(i, x, 0) + alpha * x * psi(i, x, 1),
                    _ => psi(i, x, 1) + alpha * x * psi(i, x, 2),
                }),
            ),
            (
                "dPsi+1",
                -(alpha - 1.0),
                Box::new(move |x, o| match o {
                    0 => psi(i, x, 1) + 1.0,
                    _ => psi(i, x, 2),
                }),
            ),
            (
                "LambdaMuPsi",
                0.0,
                Box::new(move |x, o| match o {
                    0 => psi(i, x, 0) - x * psi(i, x, 1),
                    _ => -x * psi(i, x, 2),
                }),
            ),
        ];
        for (name, nu, f) in modes {
            let target = Analytic1D { f, max_order: 1 };
            checks.push(run_check_1d(
                format!("H_X(i={i}) {name}"),
                OperatorKind::HX { i },
                &target,
                nu,
                &x_grid,
                fd,
            ));
        }
    }

    let z_grid: Vec<f64> = (0..=600).map(|n| -6.0 + 0.02 * n as f64).collect();
    for l in 0..=6u32 {
        let nu = (l as f64 - 2.0 * k as f64) / (2.0 * k as f64);
        let handle = ProfileHandle::PhiZ { k, a: 1.0, l };
        checks.push(run_check_1d(
            format!("H_Z(k={k}) phi_Z{l}"),
            OperatorKind::HZ { k, a: 1.0 },
            &handle,
            nu,
            &z_grid,
            fd,
        ));

        let nu = l as f64 / (2.0 * k as f64);
        let handle = ProfileHandle::PsiEll { k, a: 1.0, l };
        checks.push(run_check_1d(
            format!("M_Z(k={k}) psi_{l}"),
            OperatorKind::MZ { k, a: 1.0 },
            &handle,
            nu,
            &z_grid,
            fd,
        ));
    }

    let y_grid: Vec<f64> = (0..=600).map(|n| -6.0 + 0.02 * n as f64).collect();
    for l in 0..=6u32 {
        let handle = ProfileHandle::Hermite { l };
        checks.push(run_check_1d(
            format!("H_rho h_{l}"),
            OperatorKind::HRho,
            &handle,
            (l as f64 - 2.0) / 2.0,
            &y_grid,
            fd,
        ));
        checks.push(run_check_1d(
            format!("M_rho h_{l}"),
            OperatorKind::MRho,
            &handle,
            l as f64 / 2.0,
            &y_grid,
            fd,
        ));
    }

    // L_Z eigenpairs phi_{j,l}.
    let mut xz_points = Vec::new();
    for ix in 0..=60 {
        for jz in 0..=40 {
            xz_points.push((-15.0 + 0.5 * ix as f64, -2.0 + 0.1 * jz as f64));
        }
    }
    for j in [0u32, 1, 2, 3, 4, 6] {
        for l in [0u32, 2, 4] {
            let nu = (j as f64 - 3.0) / 2.0
                + (l as f64 - 2.0 * k as f64) / (2.0 * k as f64)
                + 1.0;
            let handle = ProfileHandle::PhiJl2D { k, j, l };
            let spec = OperatorSpec { kind: OperatorKind::LZ { k }, mode: DerivativeMode::Analytic };
            let ra = eigen_residual_2d(&spec, &handle, nu, &xz_points).unwrap();
            let spec_fd = OperatorSpec { kind: OperatorKind::LZ { k }, mode: fd };
            let rf = eigen_residual_2d(&spec_fd, &handle, nu, &xz_points).unwrap();
            checks.push(EigenCheck {
                label: format!("L_Z(k={k}) phi_({j},{l})"),
                claimed: nu,
                residual_analytic: ra,
                residual_fd: rf,
            });
        }
    }

    checks
}

fn run_check_1d(
    label: String,
    kind: OperatorKind,
    target: &dyn Scalar1D,
    nu: f64,
    points: &[f64],
    fd: DerivativeMode,
) -> EigenCheck {
    let spec = OperatorSpec { kind, mode: DerivativeMode::Analytic };
    let ra = eigen_residual_1d(&spec, target, nu, points).unwrap();
    let spec_fd = OperatorSpec { kind, mode: fd };
    let rf = eigen_residual_1d(&spec_fd, target, nu, points).unwrap();
    EigenCheck { label, claimed: nu, residual_analytic: ra, residual_fd: rf }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Symmetry;
    use crate::numerics::Grid1D;

    #[test]
    fn hx_kills_symmetry_modes() {
        // H_X(dPsi + 1) = -(alpha-1)(dPsi + 1) pointwise, i = 1.
        let spec = OperatorSpec { kind: OperatorKind::HX { i: 1 }, mode: DerivativeMode::Analytic };
        let target = Analytic1D {
            f: |x, o| match o {
                0 => psi(1, x, 1) + 1.0,
                _ => psi(1, x, 2),
            },
            max_order: 1,
        };
        let pts: Vec<f64> = (-40..=40).map(|n| n as f64 * 0.5).collect();
        let r = eigen_residual_1d(&spec, &target, -0.5, &pts).unwrap();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn h_rho_on_constant_mode() {
        // H_rho h_0 = -h_0.
        let spec = OperatorSpec { kind: OperatorKind::HRho, mode: DerivativeMode::Analytic };
        let handle = ProfileHandle::Hermite { l: 0 };
        let pts: Vec<f64> = (-60..=60).map(|n| n as f64 * 0.1).collect();
        let r = eigen_residual_1d(&spec, &handle, -1.0, &pts).unwrap();
        assert!(r < 1e-12, "residual {r:e}");
    }

    #[test]
    fn m_z_kernel_mode_vanishes_pointwise() {
        // M_Z psi_0 = 0: the drift exactly balances 4 F_k^4 (1 - F_k).
        let spec = OperatorSpec { kind: OperatorKind::MZ { k: 2, a: 1.0 }, mode: DerivativeMode::Analytic };
        let handle = ProfileHandle::PsiEll { k: 2, a: 1.0, l: 0 };
        let pts: Vec<f64> = (-300..=300).map(|n| n as f64 * 0.01).collect();
        let out = apply_operator_1d(&spec, &handle, &pts).unwrap();
        let worst = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-10, "sup |M_Z psi_0| = {worst:e}");
    }

    #[test]
    fn insufficient_derivatives_detected() {
        // phi_X exposes order 1 only; H_rho needs 2.
        let spec = OperatorSpec { kind: OperatorKind::HRho, mode: DerivativeMode::Analytic };
        let handle = ProfileHandle::PhiX { i: 1, j: 2 };
        assert!(matches!(
            apply_operator_1d(&spec, &handle, &[0.5]),
            Err(SpectralError::InsufficientDerivatives { .. })
        ));
    }

    #[test]
    fn full_eigen_matrix_passes() {
        for check in eigen_matrix(2) {
            assert!(
                check.residual_analytic < 1e-6,
                "{}: analytic residual {:e}",
                check.label,
                check.residual_analytic
            );
            assert!(
                check.residual_fd < 1e-4,
                "{}: fd residual {:e}",
                check.label,
                check.residual_fd
            );
        }
    }

    #[test]
    fn weighted_norm_of_weight_indicator() {
        // field = c * weight on a box away from the axis: norm is
        // |c| (box measure)^(1/2q) with the measure computed by the same
        // quadrature.
        let k = 2;
        let s = 10.0;
        let spec = WeightSpec::standard(k);
        let xg = Grid1D::uniform(-4.0, 4.0, 161);
        let zg = Grid1D::uniform(-1.0, 1.0, 41);
        let c = 0.37;
        let in_box = |x: f64, _z: f64| x >= 1.0 && x <= 2.0;
        let field = Field2D::from_fn(xg.clone(), zg.clone(), Symmetry::None, Symmetry::Even, |x, z| {
            if in_box(x, z) {
                c * spec.weight.eval2d(x, z, (0, 0))
            } else {
                0.0
            }
        });
        let norm = weighted_norm(&field, s, k, &spec).unwrap();
        // Direct box measure with matching trapezoid cells.
        let stretch = ((k as f64 - 1.0) / (2.0 * k as f64) * s).exp();
        let mut measure = 0.0;
        for (jz, &z) in zg.nodes().iter().enumerate() {
            let y = stretch * z;
            let dy = stretch * super::half_cell(zg.nodes(), jz);
            for (ix, &x) in xg.nodes().iter().enumerate() {
                if in_box(x, z) {
                    measure += super::half_cell(xg.nodes(), ix) / x.abs() * dy
                        / (1.0 + y * y).sqrt();
                }
            }
        }
        let expected = c * measure.powf(1.0 / 12.0);
        assert!(
            (norm.value - expected).abs() < 1e-10 * expected,
            "norm {} vs {}",
            norm.value,
            expected
        );
    }

    #[test]
    fn weighted_norm_homogeneous_and_triangle() {
        let k = 2;
        let s = 10.0;
        let spec = WeightSpec::standard(k);
        let xg = Grid1D::sinh_stretched(50.0, 129, 6.0);
        let zg = Grid1D::uniform(-2.0, 2.0, 33);
        let smooth = |x: f64, z: f64| {
            let xt = x / (1.0 + z.powi(4)).powf(1.5);
            x.powi(5) * (-xt * xt * xt * xt).exp() * (-z * z).exp() / (1.0 + x * x)
        };
        let f1 = Field2D::from_fn(xg.clone(), zg.clone(), Symmetry::Odd, Symmetry::Even, smooth);
        let f2 = Field2D::from_fn(xg.clone(), zg.clone(), Symmetry::Odd, Symmetry::Even, |x, z| {
            smooth(x, z) * 0.3 * (1.0 + 0.5 * (z + x * 0.01).cos())
        });
        let n1 = weighted_norm(&f1, s, k, &spec).unwrap().value;
        // Homogeneity: doubling the field doubles the norm exactly.
        let mut doubled = f1.clone();
        for v in doubled.values.iter_mut() {
            *v *= 2.0;
        }
        let n2 = weighted_norm(&doubled, s, k, &spec).unwrap().value;
        assert!((n2 - 2.0 * n1).abs() < 1e-12 * n1);
        // Triangle inequality.
        let nf2 = weighted_norm(&f2, s, k, &spec).unwrap().value;
        let mut sum = f1.clone();
        for (v, w) in sum.values.iter_mut().zip(f2.values.iter()) {
            *v += w;
        }
        let nsum = weighted_norm(&sum, s, k, &spec).unwrap().value;
        assert!(nsum <= n1 + nf2 + 1e-10 * (n1 + nf2), "{nsum} vs {}", n1 + nf2);
    }

    #[test]
    fn weighted_norm_axis_guard() {
        // A field ~ X^3 near the axis (ratio ~ 1/X) must be rejected.
        let k = 2;
        let spec = WeightSpec::standard(k);
        let xg = Grid1D::sinh_stretched(50.0, 129, 6.0);
        let zg = Grid1D::uniform(-2.0, 2.0, 17);
        let field = Field2D::from_fn(xg, zg, Symmetry::Odd, Symmetry::Even, |x, z| {
            x.powi(3) * (-x * x - z * z).exp()
        });
        assert!(matches!(
            weighted_norm(&field, 10.0, k, &spec),
            Err(SpectralError::AxisOrderViolation { .. })
        ));
    }

    #[test]
    fn vector_field_coefficient_two_sided_bound() {
        // (1/2)|X| <= |coeff| <= (3/2)|X| over a log-spaced sample.
        let k = 2;
        for ix in 0..100 {
            for jz in 0..100 {
                let x = 10f64.powf(-3.0 + 6.0 * ix as f64 / 99.0)
                    * if ix % 2 == 0 { 1.0 } else { -1.0 };
                let z = -4.0 + 8.0 * jz as f64 / 99.0;
                let c = vector_field_a_coefficient(k, x, z);
                assert!(
                    c.abs() >= 0.5 * x.abs() - 1e-14 && c.abs() <= 1.5 * x.abs() + 1e-14,
                    "x={x} z={z} coeff={c}"
                );
            }
        }
    }

    #[test]
    fn vector_field_on_linear_function_returns_coefficient() {
        struct Linear;
        impl Scalar2D for Linear {
            fn eval(&self, x: f64, _z: f64, order: (usize, usize)) -> f64 {
                match order {
                    (0, 0) => x,
                    (1, 0) => 1.0,
                    _ => 0.0,
                }
            }
        }
        let pts = [(0.5, 0.2), (-3.0, 1.0), (8.0, -2.0)];
        let out = vector_field_a(2, &Linear, &pts);
        for (v, &(x, z)) in out.iter().zip(&pts) {
            assert_eq!(*v, vector_field_a_coefficient(2, x, z));
        }
    }

    #[test]
    fn commutator_with_transport_vanishes() {
        // [A, (3/2)X d_X + Theta d_X + (Z/2k) d_Z] f = 0 analytically; the
        // evaluation below assembles both orders of application from exact
        // derivatives of a smooth compactly-concentrated test function.
        let k = 2u32;
        let test_f = |x: f64, z: f64, o: (usize, usize)| -> f64 {
            // f = x^3 exp(-x^2/8 - z^2/2)
            let e = (-x * x / 8.0 - z * z / 2.0).exp();
            match o {
                (0, 0) => x.powi(3) * e,
                (1, 0) => (3.0 * x * x - x.powi(4) / 4.0) * e,
                (2, 0) => {
                    (6.0 * x - x.powi(3) + (x.powi(5) / 16.0 - 3.0 * x.powi(3) / 4.0)) * e
                }
                (0, 1) => -z * x.powi(3) * e,
                (1, 1) => -z * (3.0 * x * x - x.powi(4) / 4.0) * e,
                _ => panic!("unexpected order"),
            }
        };
        let coeff = |x: f64, z: f64| vector_field_a_coefficient(k, x, z);
        let coeff_x = |x: f64, z: f64| {
            let f = f_k(k, 1.0, z, 0);
            1.5 + psi(1, f.powf(1.5) * x, 1)
        };
        let coeff_z = |x: f64, z: f64| {
            let f = f_k(k, 1.0, z, 0);
            let fz = f_k(k, 1.0, z, 1);
            let arg = f.powf(1.5) * x;
            -1.5 * f.powf(-2.5) * fz * psi(1, arg, 0)
                + f.powf(-1.5) * psi(1, arg, 1) * 1.5 * f.powf(0.5) * fz * x
        };
        let b = |x: f64, z: f64| 1.5 * x + theta(1, k, 1.0, 1.0, x, z, (0, 0));
        let b_x = |x: f64, z: f64| 1.5 + theta(1, k, 1.0, 1.0, x, z, (1, 0));
        let mut worst = 0.0f64;
        for ix in 0..40 {
            for jz in 0..20 {
                let x = -8.0 + 0.41 * ix as f64;
                let z = -2.0 + 0.21 * jz as f64;
                let a = coeff(x, z);
                // A(Tf) with Tf = b f_x + (z/2k) f_z
                let tf_x = b_x(x, z) * test_f(x, z, (1, 0))
                    + b(x, z) * test_f(x, z, (2, 0))
                    + z / (2.0 * k as f64) * test_f(x, z, (1, 1));
                let a_tf = a * tf_x;
                // T(Af) with Af = a f_x
                let af_x = coeff_x(x, z) * test_f(x, z, (1, 0)) + a * test_f(x, z, (2, 0));
                let af_z = coeff_z(x, z) * test_f(x, z, (1, 0)) + a * test_f(x, z, (1, 1));
                let t_af = b(x, z) * af_x + z / (2.0 * k as f64) * af_z;
                worst = worst.max((a_tf - t_af).abs());
            }
        }
        assert!(worst < 1e-6, "commutator sup {worst:e}");
    }
}
