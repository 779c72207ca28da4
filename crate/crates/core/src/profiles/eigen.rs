//! Closed-form eigenfunctions of the linearized operators: the shock modes
//! phi_{X,j}, the transverse families phi_{Z,l} and psi_l, the Hermite
//! basis of L^2_rho, and the 2-D products phi_{j,l}.

use super::psi::{f_k, psi};

/// Largest mode index supported by the closed-form evaluators.
pub const MAX_MODE_INDEX: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexOutOfRange {
    pub index: u32,
    pub max: u32,
}

impl std::fmt::Display for IndexOutOfRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mode index {} exceeds supported maximum {}", self.index, self.max)
    }
}

impl std::error::Error for IndexOutOfRange {}

fn check_index(j: u32) -> Result<(), IndexOutOfRange> {
    if j > MAX_MODE_INDEX {
        Err(IndexOutOfRange { index: j, max: MAX_MODE_INDEX })
    } else {
        Ok(())
    }
}

/// Shock eigenfunction phi_{X,j} = (-Psi_i)^j / (1 + (2i+1) Psi_i^(2i)).
///
/// The sign is fixed so that phi_{X,j}(X) ~ +X^j as X -> 0. Orders 0 and 1.
pub fn phi_x(i: u32, j: u32, x: f64, order: usize) -> Result<f64, IndexOutOfRange> {
    check_index(j)?;
    assert!(order <= 1);
    let p = psi(i, x, 0);
    let s = -p; // same sign as X
    let two_i = 2 * i as i32;
    let denom = 1.0 + (2 * i + 1) as f64 * p.powi(two_i);
    let num = s.powi(j as i32);
    if order == 0 {
        return Ok(num / denom);
    }
    let dp = psi(i, x, 1);
    let ddenom = (2 * i + 1) as f64 * two_i as f64 * p.powi(two_i - 1) * dp;
    let dnum = if j == 0 {
        0.0
    } else {
        -(j as f64) * s.powi(j as i32 - 1) * dp
    };
    Ok((dnum * denom - num * ddenom) / (denom * denom))
}

/// Z^l / (1 + (aZ)^(2k))^power and its first two derivatives; the common
/// shape behind phi_{Z,l} (power 2) and psi_l (power 4).
pub fn rational_mode(l: u32, k: u32, a: f64, power: i32, z: f64, order: usize) -> f64 {
    assert!(order <= 2);
    let p = 2 * k as i32;
    let w = (a * z).powi(p);
    let wp = p as f64 * a.powi(p) * z.powi(p - 1);
    let d = 1.0 + w;
    let lf = l as f64;
    let pw = power as f64;
    let zl = z.powi(l as i32);
    match order {
        0 => zl / d.powi(power),
        1 => {
            let t1 = if l == 0 { 0.0 } else { lf * z.powi(l as i32 - 1) / d.powi(power) };
            t1 - pw * zl * wp / d.powi(power + 1)
        }
        _ => {
            let wpp = (p * (p - 1)) as f64 * a.powi(p) * z.powi(p - 2);
            let t1 = if l < 2 {
                0.0
            } else {
                lf * (lf - 1.0) * z.powi(l as i32 - 2) / d.powi(power)
            };
            let t2a = if l == 0 { 0.0 } else { 2.0 * pw * lf * z.powi(l as i32 - 1) * wp };
            let t2 = -(t2a + pw * zl * wpp) / d.powi(power + 1);
            let t3 = pw * (pw + 1.0) * zl * wp * wp / d.powi(power + 2);
            t1 + t2 + t3
        }
    }
}

/// Transverse eigenfunction phi_{Z,l} = Z^l / (1 + (aZ)^(2k))^2.
pub fn phi_z(k: u32, a: f64, l: u32, z: f64, order: usize) -> Result<f64, IndexOutOfRange> {
    check_index(l)?;
    Ok(rational_mode(l, k, a, 2, z, order))
}

/// Forced-equation eigenfunction psi_l = Z^l / (1 + (aZ)^(2k))^4.
pub fn psi_ell(k: u32, a: f64, l: u32, z: f64, order: usize) -> Result<f64, IndexOutOfRange> {
    check_index(l)?;
    Ok(rational_mode(l, k, a, 4, z, order))
}

/// Monic Hermite-type polynomial orthogonal under rho = exp(-Y^2/4):
/// p_l(Y) = sum_n l!/(n!(l-2n)!) (-1)^n Y^(l-2n).
fn hermite_poly_coeffs(l: u32) -> Vec<f64> {
    let mut coeffs = vec![0.0; l as usize + 1];
    let lf = factorial(l);
    for n in 0..=(l / 2) {
        let deg = (l - 2 * n) as usize;
        let c = lf / (factorial(n) * factorial(l - 2 * n));
        coeffs[deg] = if n % 2 == 0 { c } else { -c };
    }
    coeffs
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Normalization making h_l a unit vector of L^2_rho: the monic polynomial
/// has squared norm 2^l l! (2 sqrt(pi)).
pub fn hermite_norm_constant(l: u32) -> f64 {
    1.0 / (2f64.powi(l as i32) * factorial(l) * 2.0 * std::f64::consts::PI.sqrt()).sqrt()
}

/// Orthonormal Hermite eigenfunction h_l of the Gaussian-weight operators;
/// orders 0..2.
pub fn hermite(l: u32, y: f64, order: usize) -> Result<f64, IndexOutOfRange> {
    check_index(l)?;
    assert!(order <= 2);
    let mut coeffs = hermite_poly_coeffs(l);
    for _ in 0..order {
        coeffs = differentiate_poly(&coeffs);
    }
    Ok(hermite_norm_constant(l) * eval_poly(&coeffs, y))
}

fn differentiate_poly(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs[1..]
        .iter()
        .enumerate()
        .map(|(idx, &c)| c * (idx + 1) as f64)
        .collect()
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// 2-D eigenfunction of the renormalized linearized operator (i = 1):
/// phi_{j,l}(X,Z) = phi_{Z,l}(Z) F_k^(-1-j/2)(Z) phi_{X,j}(F_k^(3/2)(Z) X).
///
/// `order = (dx, dz)` with dx, dz <= 1.
pub fn phi_jl_2d(
    k: u32,
    j: u32,
    l: u32,
    x: f64,
    z: f64,
    order: (usize, usize),
) -> Result<f64, IndexOutOfRange> {
    check_index(j)?;
    check_index(l)?;
    let (dx, dz) = order;
    assert!(dx + dz <= 1, "only value and first derivatives are provided");
    let f = f_k(k, 1.0, z, 0);
    let fz = f_k(k, 1.0, z, 1);
    let g = f.powf(-1.0 - j as f64 / 2.0);
    let arg = f.powf(1.5) * x;
    let pz = phi_z(k, 1.0, l, z, 0)?;
    let px = phi_x(1, j, arg, 0)?;
    match (dx, dz) {
        (1, 0) => {
            let px1 = phi_x(1, j, arg, 1)?;
            Ok(pz * g * px1 * f.powf(1.5))
        }
        (0, 1) => {
            let pz1 = phi_z(k, 1.0, l, z, 1)?;
            let gp = (-1.0 - j as f64 / 2.0) * f.powf(-2.0 - j as f64 / 2.0) * fz;
            let px1 = phi_x(1, j, arg, 1)?;
            let darg = 1.5 * f.powf(0.5) * fz * x;
            Ok(pz1 * g * px + pz * gp * px + pz * g * px1 * darg)
        }
        _ => Ok(pz * g * px),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fd_derivative, weighted_inner_product, Grid1D, Weight};

    #[test]
    fn phi_x_sign_convention() {
        // phi_{X,0}(0) = 1 for i = 1 (leading term X^0).
        assert!((phi_x(1, 0, 0.0, 0).unwrap() - 1.0).abs() < 1e-14);
        // phi_{X,j} ~ +X^j near the origin.
        for j in 1..=4u32 {
            let x = 1e-3;
            let v = phi_x(1, j, x, 0).unwrap();
            let rel = v / x.powi(j as i32);
            assert!((rel - 1.0).abs() < 1e-2, "j={j} ratio {rel}");
        }
    }

    #[test]
    fn phi_x_index_guard() {
        assert!(phi_x(1, 13, 0.0, 0).is_err());
    }

    #[test]
    fn phi_x_derivative_matches_fd() {
        for j in 0..=6u32 {
            for &x in &[-3.0, -0.4, 0.9, 8.0] {
                let d = phi_x(1, j, x, 1).unwrap();
                let fd = fd_derivative(|t| phi_x(1, j, t, 0).unwrap(), x, 1e-3);
                assert!((d - fd).abs() < 1e-8 * (1.0 + d.abs()), "j={j} x={x}");
            }
        }
    }

    #[test]
    fn rational_mode_derivatives_match_fd() {
        for &(l, power) in &[(0u32, 2i32), (2, 2), (5, 2), (0, 4), (3, 4)] {
            for &z in &[-1.8, -0.3, 0.6, 2.2] {
                let d1 = rational_mode(l, 2, 1.0, power, z, 1);
                let fd1 = fd_derivative(|t| rational_mode(l, 2, 1.0, power, t, 0), z, 1e-4);
                assert!((d1 - fd1).abs() < 1e-8 * (1.0 + d1.abs()), "l={l} p={power} z={z}");
                let d2 = rational_mode(l, 2, 1.0, power, z, 2);
                let fd2 = fd_derivative(|t| rational_mode(l, 2, 1.0, power, t, 1), z, 1e-4);
                assert!((d2 - fd2).abs() < 1e-7 * (1.0 + d2.abs()), "l={l} p={power} z={z}");
            }
        }
    }

    #[test]
    fn hermite_h0_normalization() {
        // h_0 = (2 sqrt(pi))^(-1/2), constant in Y.
        let expected = 1.0 / (2.0 * std::f64::consts::PI.sqrt()).sqrt();
        assert!((hermite(0, 0.0, 0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.531125966).abs() < 1e-9);
        assert_eq!(hermite(0, 3.7, 0).unwrap(), hermite(0, -1.2, 0).unwrap());
    }

    #[test]
    fn hermite_gram_matrix_is_identity() {
        let grid = Grid1D::uniform(-14.0, 14.0, 11201);
        let h: Vec<Vec<f64>> = (0..=6)
            .map(|l| {
                grid.nodes()
                    .iter()
                    .map(|&y| hermite(l, y, 0).unwrap())
                    .collect()
            })
            .collect();
        for a in 0..=6usize {
            for b in 0..=6usize {
                let ip = weighted_inner_product(&h[a], &h[b], Weight::GaussianRho, &grid)
                    .unwrap()
                    .value;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (ip - expected).abs() < 1e-8,
                    "Gram({a},{b}) = {ip}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn phi_jl_2d_vanishes_on_axis_for_j4() {
        // phi_{4,0}(0, Z) = 0 for all Z since Psi_1(0) = 0.
        for &z in &[-3.0, 0.0, 0.7, 2.5] {
            assert_eq!(phi_jl_2d(2, 4, 0, 0.0, z, (0, 0)).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_jl_2d_derivatives_match_fd() {
        let k = 2;
        for &(x, z) in &[(0.8, 0.5), (-2.0, 1.5), (5.0, -0.7)] {
            let dx = phi_jl_2d(k, 4, 0, x, z, (1, 0)).unwrap();
            let fdx = fd_derivative(|t| phi_jl_2d(k, 4, 0, t, z, (0, 0)).unwrap(), x, 1e-3);
            assert!((dx - fdx).abs() < 1e-7 * (1.0 + dx.abs()), "x={x} z={z}");
            let dz = phi_jl_2d(k, 4, 0, x, z, (0, 1)).unwrap();
            let fdz = fd_derivative(|t| phi_jl_2d(k, 4, 0, x, t, (0, 0)).unwrap(), z, 1e-3);
            assert!((dz - fdz).abs() < 1e-7 * (1.0 + dz.abs()), "x={x} z={z}");
        }
    }
}
