//! Approximate flat blow-up profile F[a] for the quadratic heat equation:
//! universal coefficients, the profile itself, its a-derivative, and the
//! generator residual in a cancellation-free form.

use super::eigen::rational_mode;
use super::psi::f_k;
use crate::numerics::{weighted_inner_product, Grid1D, Weight};

/// Universal coefficients (cbar_0, cbar_2, ..., cbar_(2k-2)):
/// cbar_(2k-2) = 2k(2k-1), downward recursion
/// cbar_(2l) = -((2l+2)(2l+1)/(k-l)) cbar_(2l+2).
///
/// The top coefficient's sign is fixed by requiring the profile correction
/// to cancel the diffusion of F_k: the leftover generator residual then
/// collapses to -8k^2 p^2 Z^(4k-2) F^3 and the residual norm decays like
/// e^(-2(k-1)s). (With the opposite sign a p^2 Z^(2k-2) F^2 defect
/// survives and the decay degrades to e^(-(k-1)s); the
/// `residual_norm_log_slope` test below arbitrates.)
pub fn approx_profile_coefficients(k: u32) -> Vec<f64> {
    assert!(k >= 2, "flat profiles need k >= 2");
    let kk = k as usize;
    let mut c = vec![0.0; kk];
    c[kk - 1] = (2.0 * k as f64) * (2.0 * k as f64 - 1.0);
    for l in (0..kk - 1).rev() {
        let lf = l as f64;
        c[l] = -((2.0 * lf + 2.0) * (2.0 * lf + 1.0) / (k as f64 - lf)) * c[l + 1];
    }
    c
}

/// Decay prefactor p = a e^(-(k-1)s/(2k)); Z = p Y.
pub fn decay_prefactor(k: u32, a: f64, s: f64) -> f64 {
    a * (-(k as f64 - 1.0) / (2.0 * k as f64) * s).exp()
}

/// F[a](s,Y) = F_k(Z) + sum_l cbar_(2l) p^(2k-2l) phi_(Z,2l)(Z), Z = pY.
pub fn approx_profile_f(k: u32, a: f64, s: f64, y: f64) -> f64 {
    assert!(s > 0.0);
    let p = decay_prefactor(k, a, s);
    let z = p * y;
    let c = approx_profile_coefficients(k);
    let mut v = f_k(k, 1.0, z, 0);
    for (l, &cl) in c.iter().enumerate() {
        v += cl * p.powi(2 * (k as i32 - l as i32)) * rational_mode(2 * l as u32, k, 1.0, 2, z, 0);
    }
    v
}

/// Y-derivative of F[a] of order 0..2 (needed by the direct residual).
pub fn approx_profile_f_dy(k: u32, a: f64, s: f64, y: f64, order: usize) -> f64 {
    assert!(order <= 2);
    let p = decay_prefactor(k, a, s);
    let z = p * y;
    let c = approx_profile_coefficients(k);
    let mut v = f_k(k, 1.0, z, order) * p.powi(order as i32);
    for (l, &cl) in c.iter().enumerate() {
        v += cl
            * p.powi(2 * (k as i32 - l as i32) + order as i32)
            * rational_mode(2 * l as u32, k, 1.0, 2, z, order);
    }
    v
}

/// s-derivative of F[a] at fixed Y with a held constant.
pub fn approx_profile_f_ds(k: u32, a: f64, s: f64, y: f64) -> f64 {
    let p = decay_prefactor(k, a, s);
    let z = p * y;
    let rate = -(k as f64 - 1.0) / (2.0 * k as f64); // dp/ds = rate * p
    let c = approx_profile_coefficients(k);
    // d/ds F_k(pY) = rate * Z F_k'(Z)
    let mut v = rate * z * f_k(k, 1.0, z, 1);
    for (l, &cl) in c.iter().enumerate() {
        let m = 2 * (k as i32 - l as i32);
        let phi0 = rational_mode(2 * l as u32, k, 1.0, 2, z, 0);
        let phi1 = rational_mode(2 * l as u32, k, 1.0, 2, z, 1);
        v += cl * p.powi(m) * rate * (m as f64 * phi0 + z * phi1);
    }
    v
}

/// dF[a]/da at fixed (s, Y):
/// (1/a) [ -2k phi_(2k)(Z) + sum_l cbar_(2l) p^(2k-2l)
///         ((2k-2l) phi_(2l)(Z) + Z phi'_(2l)(Z)) ].
pub fn approx_profile_f_da(k: u32, a: f64, s: f64, y: f64) -> f64 {
    let p = decay_prefactor(k, a, s);
    let z = p * y;
    let c = approx_profile_coefficients(k);
    let mut v = -2.0 * k as f64 * rational_mode(2 * k, k, 1.0, 2, z, 0);
    for (l, &cl) in c.iter().enumerate() {
        let m = 2 * (k as i32 - l as i32);
        let phi0 = rational_mode(2 * l as u32, k, 1.0, 2, z, 0);
        let phi1 = rational_mode(2 * l as u32, k, 1.0, 2, z, 1);
        v += cl * p.powi(m) * (m as f64 * phi0 + z * phi1);
    }
    v / a
}

/// Generator residual of F[a] with a_s = 0, evaluated term by term so that
/// each factor is a clean product (no O(1) cancellations): usable down to
/// residual magnitudes ~1e-30.
///
/// The terms are the mode-recursion defects
///   G_l = d_ZZ phi_(2l+2) - (2l+2)(2l+1) phi_(2l) = -4k(4l+2k+3) Z^(2l+2k) F^3
///         + 24 k^2 Z^(2l+4k) F^4,
/// the top-mode defect -p^2 (cbar_(2k-2) phi_(2k-2) + d_ZZ F_k)
/// = -8k^2 p^2 Z^(4k-2) F^3, the leftover diffusion
/// -cbar_0 p^(2k+2) d_ZZ phi_0, and the quadratic
/// -(sum_l cbar_(2l) p^(2k-2l) phi_(2l))^2.
pub fn flat_profile_residual(k: u32, a: f64, s: f64, y: f64) -> f64 {
    let p = decay_prefactor(k, a, s);
    let z = p * y;
    let c = approx_profile_coefficients(k);
    let kf = k as f64;
    let f = f_k(k, 1.0, z, 0);
    let f3 = f * f * f;
    let f4 = f3 * f;

    let mut t1 = 0.0;
    for l in 0..(k as usize).saturating_sub(1) {
        let lf = l as f64;
        let g_l = -4.0 * kf * (4.0 * lf + 2.0 * kf + 3.0) * z.powi(2 * l as i32 + 2 * k as i32) * f3
            + 24.0 * kf * kf * z.powi(2 * l as i32 + 4 * k as i32) * f4;
        t1 -= p.powi(2 * (k as i32 - l as i32)) * c[l + 1] * g_l;
    }

    let t2 = -p * p * 8.0 * kf * kf * z.powi(4 * k as i32 - 2) * f3;

    let ddphi0 = -4.0 * kf * (2.0 * kf - 1.0) * z.powi(2 * k as i32 - 2) * f3
        + 24.0 * kf * kf * z.powi(4 * k as i32 - 2) * f4;
    let t3 = -c[0] * p.powi(2 * k as i32 + 2) * ddphi0;

    let mut sum = 0.0;
    for (l, &cl) in c.iter().enumerate() {
        sum += cl
            * p.powi(2 * (k as i32 - l as i32))
            * rational_mode(2 * l as u32, k, 1.0, 2, z, 0);
    }
    let t4 = -sum * sum;

    t1 + t2 + t3 + t4
}

/// Same residual assembled directly from the generator
/// d_s F + F + (Y/2) d_Y F - F^2 - d_YY F; suffers cancellation once the
/// residual is far below the O(1) terms, so it serves as an oracle at
/// moderate s only.
pub fn flat_profile_residual_direct(k: u32, a: f64, s: f64, y: f64) -> f64 {
    let f0 = approx_profile_f(k, a, s, y);
    let ds = approx_profile_f_ds(k, a, s, y);
    let dy = approx_profile_f_dy(k, a, s, y, 1);
    let dyy = approx_profile_f_dy(k, a, s, y, 2);
    ds + f0 + 0.5 * y * dy - f0 * f0 - dyy
}

/// L^2_rho norm of the residual over a standard quadrature grid.
pub fn flat_profile_residual_norm(k: u32, a: f64, s: f64) -> f64 {
    let grid = Grid1D::uniform(-14.0, 14.0, 5601);
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flat_profile_residual(k, a, s, y))
        .collect();
    weighted_inner_product(&vals, &vals, Weight::GaussianRho, &grid)
        .unwrap()
        .value
        .sqrt()
}

/// <dF/da, h_(2k)>_rho, the modulation nondegeneracy coefficient.
pub fn flat_profile_da_projection(k: u32, a: f64, s: f64) -> f64 {
    let grid = Grid1D::uniform(-14.0, 14.0, 5601);
    let da: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| approx_profile_f_da(k, a, s, y))
        .collect();
    let h2k: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| super::eigen::hermite(2 * k, y, 0).unwrap())
        .collect();
    weighted_inner_product(&da, &h2k, Weight::GaussianRho, &grid)
        .unwrap()
        .value
}
