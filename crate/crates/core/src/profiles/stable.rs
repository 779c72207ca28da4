//! Approximate profile for the stable (log-corrected) heat-equation
//! blow-up and its generator residual.

use crate::numerics::{weighted_inner_product, Grid1D, Weight};

/// F[a](s,Y) = 1/(1+(1/(8s)+a)Y^2) + (1/(4s)+2a)/(1+(1/(8s)+a)Y^2)^2.
pub fn stable_profile_f(s: f64, a: f64, y: f64) -> f64 {
    assert!(s > 1.0, "stable profile defined for s > 1");
    let u = 1.0 / (8.0 * s) + a;
    let v = 1.0 / (4.0 * s) + 2.0 * a;
    let d = 1.0 + u * y * y;
    1.0 / d + v / (d * d)
}

/// Generator residual d_s F + F + (Y/2) d_Y F - F^2 - d_YY F with the
/// modulation frozen (a constant in s).
pub fn stable_profile_residual(s: f64, a: f64, y: f64) -> f64 {
    let u = 1.0 / (8.0 * s) + a;
    let v = 1.0 / (4.0 * s) + 2.0 * a;
    let us = -1.0 / (8.0 * s * s);
    let vs = -1.0 / (4.0 * s * s);
    let y2 = y * y;
    let d = 1.0 + u * y2;
    let d1 = 1.0 / d;
    let d2 = d1 * d1;
    let d3 = d2 * d1;
    let d4 = d2 * d2;

    let f = d1 + v * d2;
    let fs = -us * y2 * d2 + vs * d2 - 2.0 * v * us * y2 * d3;
    // dD/dY = 2uY, d2D/dY2 = 2u
    let dy = 2.0 * u * y;
    let dyy = 2.0 * u;
    let f_y = -d2 * dy - 2.0 * v * d3 * dy;
    let f_yy = 2.0 * d3 * dy * dy - d2 * dyy + 6.0 * v * d4 * dy * dy - 2.0 * v * d3 * dyy;

    fs + f + 0.5 * y * f_y - f * f - f_yy
}

/// L^2_rho norm of the residual after removing its constant-mode part
/// -(1/(4s^2) + 4a/s); with a = 0 frozen this is the pure error term of
/// the profile identity.
pub fn stable_residual_remainder_norm(s: f64, a: f64) -> f64 {
    let grid = Grid1D::uniform(-14.0, 14.0, 5601);
    let constant = -(1.0 / (4.0 * s * s) + 4.0 * a / s);
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| stable_profile_residual(s, a, y) - constant)
        .collect();
    weighted_inner_product(&vals, &vals, Weight::GaussianRho, &grid)
        .unwrap()
        .value
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fd_derivative, fd_second_derivative};

    #[test]
    fn stable_profile_center_value() {
        // F(s, 0) = 1 + 1/(4s) at a = 0.
        for &s in &[5.0, 25.0, 100.0] {
            assert!((stable_profile_f(s, 0.0, 0.0) - (1.0 + 0.25 / s)).abs() < 1e-15);
        }
        // s -> infinity at fixed Y tends to 1.
        assert!((stable_profile_f(1e9, 0.0, 3.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn residual_matches_finite_difference_assembly() {
        let (s, a) = (12.0, 0.01);
        for &y in &[0.0, 0.8, 2.5, 7.0] {
            let fs = fd_derivative(|t| stable_profile_f(t, a, y), s, 1e-4);
            let fy = fd_derivative(|t| stable_profile_f(s, a, t), y, 1e-4);
            let fyy = fd_second_derivative(|t| stable_profile_f(s, a, t), y, 1e-3);
            let f = stable_profile_f(s, a, y);
            let direct = fs + f + 0.5 * y * fy - f * f - fyy;
            let analytic = stable_profile_residual(s, a, y);
            assert!(
                (direct - analytic).abs() < 1e-8 * (1.0 + analytic.abs()),
                "y={y}: fd {direct:e} vs analytic {analytic:e}"
            );
        }
    }

    #[test]
    fn remainder_norm_is_third_order_in_inverse_s() {
        // After subtracting -1/(4s^2), what is left is O(s^-3) in L^2_rho.
        let s = 25.0;
        let norm = stable_residual_remainder_norm(s, 0.0);
        assert!(norm < 10.0 / (s * s * s), "remainder norm {norm:e}");
        // And it actually scales like s^-3: doubling s shrinks it ~8x.
        let n50 = stable_residual_remainder_norm(50.0, 0.0);
        let ratio = norm / n50;
        assert!((4.0..16.0).contains(&ratio), "scaling ratio {ratio}");
    }
}
