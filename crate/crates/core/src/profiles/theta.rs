//! The 2-D stationary blow-up profile Theta[a,b] and its derivatives.

use super::psi::{f_k, psi};

/// Theta[a,b](X,Z) = b^(-1) F_k^(-1/(2i))(aZ) Psi_i(b F_k^(1+1/(2i))(aZ) X).
///
/// `order = (dx, dz)` with dx + 2*dz <= 4 available analytically; the
/// default profile of the renormalized flow is i = 1, a = b = 1 where the
/// exponents are -1/2 and 3/2.
pub fn theta(i: u32, k: u32, a: f64, b: f64, x: f64, z: f64, order: (usize, usize)) -> f64 {
    let (dx, dz) = order;
    assert!(dx <= 2 && dz <= 2, "theta derivatives supported up to order 2");
    let nu = 1.0 / (2.0 * i as f64);
    let alpha = 1.0 + nu;

    let f0 = f_k(k, a, z, 0);
    let amp = f0.powf(-nu) / b; // G(Z)
    let scale = b * f0.powf(alpha); // A(Z)
    if dz == 0 {
        return amp * scale.powi(dx as i32) * psi(i, scale * x, dx);
    }

    let f1 = f_k(k, a, z, 1);
    let g1 = -nu * f0.powf(-nu - 1.0) * f1 / b;
    let a1 = b * alpha * f0.powf(alpha - 1.0) * f1;
    let m = dx as f64;
    let am = scale.powi(dx as i32);
    let am1 = if dx == 0 { 0.0 } else { m * scale.powi(dx as i32 - 1) * a1 };
    let arg = scale * x;
    let p_m = psi(i, arg, dx);
    let p_m1 = psi(i, arg, dx + 1);
    if dz == 1 {
        return (g1 * am + amp * am1) * p_m + amp * am * p_m1 * a1 * x;
    }

    let f2 = f_k(k, a, z, 2);
    let g2 = (nu * (nu + 1.0) * f0.powf(-nu - 2.0) * f1 * f1 - nu * f0.powf(-nu - 1.0) * f2) / b;
    let a2 = b * alpha * ((alpha - 1.0) * f0.powf(alpha - 2.0) * f1 * f1 + f0.powf(alpha - 1.0) * f2);
    let am2 = if dx == 0 {
        0.0
    } else if dx == 1 {
        a2
    } else {
        m * (m - 1.0) * scale.powi(dx as i32 - 2) * a1 * a1 + m * scale.powi(dx as i32 - 1) * a2
    };
    let p_m2 = psi(i, arg, dx + 2);
    let coeff0 = g2 * am + 2.0 * g1 * am1 + amp * am2;
    let coeff1 = 2.0 * (g1 * am + amp * am1) * a1 * x + amp * am * a2 * x;
    let coeff2 = amp * am * (a1 * x) * (a1 * x);
    coeff0 * p_m + coeff1 * p_m1 + coeff2 * p_m2
}

/// Residual of the diffusion-free stationary equation
/// -(1/(2i)) w + (1+1/(2i)) X w_X + (1/(2k)) Z w_Z + w w_X at Theta.
pub fn theta_stationary_residual(i: u32, k: u32, x: f64, z: f64) -> f64 {
    let nu = 1.0 / (2.0 * i as f64);
    let alpha = 1.0 + nu;
    let w = theta(i, k, 1.0, 1.0, x, z, (0, 0));
    let wx = theta(i, k, 1.0, 1.0, x, z, (1, 0));
    let wz = theta(i, k, 1.0, 1.0, x, z, (0, 1));
    -nu * w + alpha * x * wx + z / (2.0 * k as f64) * wz + w * wx
}
