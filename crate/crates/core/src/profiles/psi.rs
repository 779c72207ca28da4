//! The self-similar Burgers shock profiles Psi_i and the transverse
//! blow-up shapes F_k, with analytic derivatives.

use crate::numerics::{invert_monotone, Tolerance};

/// Closed-form Psi_1 via Cardano's formula.
///
/// Evaluated in the conjugate form `cbrt(1/(27(S+X/2))) - cbrt(S+X/2)` with
/// `S = sqrt(1/27 + X^2/4)`, which avoids the cancellation the naive
/// expression suffers for large |X|. Odd in X by construction.
pub fn psi1_closed_form(x: f64) -> f64 {
    if x < 0.0 {
        return -psi1_closed_form(-x);
    }
    let s = (1.0 / 27.0 + x * x / 4.0).sqrt();
    let big = s + x / 2.0;
    let small = 1.0 / (27.0 * big);
    small.cbrt() - big.cbrt()
}

/// phi(u) = -u - u^(2i+1), the analytic diffeomorphism whose inverse is Psi_i.
pub fn phi(i: u32, u: f64) -> f64 {
    -u - u.powi(2 * i as i32 + 1)
}

/// d/du phi = -1 - (2i+1) u^(2i); strictly negative, so phi is invertible.
pub fn phi_prime(i: u32, u: f64) -> f64 {
    -1.0 - (2 * i + 1) as f64 * u.powi(2 * i as i32)
}

fn psi_root(i: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        return -psi_root(i, -x);
    }
    if i == 1 {
        return psi1_closed_form(x);
    }
    // phi(-u) = u + u^(2i+1) >= |X| at u = |X|^(1/(2i+1)), so the root
    // lies in (-|X|^(1/(2i+1)), 0).
    let hi = x.powf(1.0 / (2 * i + 1) as f64);
    let tol = Tolerance { abs: 1e-15, rel: 1e-14, max_iters: 200 };
    invert_monotone(
        |u| phi(i, u),
        |u| phi_prime(i, u),
        (-hi * (1.0 + 1e-12) - 1e-300, 0.0),
        x,
        &tol,
    )
    .expect("psi root: bracket is guaranteed analytically")
}

/// Psi_i and its first four derivatives from implicit differentiation of
/// X = -Psi - Psi^(1+2i).
///
/// Order 0 is the implicit root (closed form for i = 1, monotone inversion
/// otherwise); orders 1..4 use the inverse-function derivative formulas with
/// the polynomial derivatives of phi.
pub fn psi(i: u32, x: f64, order: usize) -> f64 {
    assert!(i >= 1, "profile index starts at 1");
    assert!(order <= 4, "derivatives supported up to order 4");
    let u = psi_root(i, x);
    if order == 0 {
        return u;
    }
    let m = 2 * i as i32 + 1;
    let mf = m as f64;
    let d1 = -1.0 - mf * u.powi(m - 1);
    if order == 1 {
        return 1.0 / d1;
    }
    let d2 = -mf * (m - 1) as f64 * u.powi(m - 2);
    if order == 2 {
        return -d2 / d1.powi(3);
    }
    let d3 = -mf * ((m - 1) * (m - 2)) as f64 * u.powi(m - 3);
    if order == 3 {
        return (3.0 * d2 * d2 - d1 * d3) / d1.powi(5);
    }
    let d4 = if m >= 4 {
        -mf * ((m - 1) * (m - 2) * (m - 3)) as f64 * u.powi(m - 4)
    } else {
        0.0
    };
    (-15.0 * d2.powi(3) + 10.0 * d1 * d2 * d3 - d1 * d1 * d4) / d1.powi(7)
}

/// F_k(aZ) = (1 + (aZ)^(2k))^(-1) and its first two Z-derivatives.
pub fn f_k(k: u32, a: f64, z: f64, order: usize) -> f64 {
    assert!(k >= 1);
    assert!(order <= 2);
    let p = 2 * k as i32;
    let az = a * z;
    let w = az.powi(p);
    let denom = 1.0 + w;
    match order {
        0 => 1.0 / denom,
        1 => {
            // dW/dZ = 2k a^(2k) Z^(2k-1)
            let wp = p as f64 * a.powi(p) * z.powi(p - 1);
            -wp / (denom * denom)
        }
        _ => {
            let wp = p as f64 * a.powi(p) * z.powi(p - 1);
            let wpp = (p * (p - 1)) as f64 * a.powi(p) * z.powi(p - 2);
            -wpp / (denom * denom) + 2.0 * wp * wp / (denom * denom * denom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_derivative;

    #[test]
    fn psi1_closed_form_points() {
        assert_eq!(psi1_closed_form(0.0), 0.0);
        // X = -Psi - Psi^3 at Psi = -1 gives X = 2.
        assert!((psi1_closed_form(2.0) + 1.0).abs() < 1e-14);
        assert_eq!(psi1_closed_form(3.0), -psi1_closed_form(-3.0));
    }

    #[test]
    fn psi1_closed_form_matches_root_finding() {
        let tol = Tolerance::default();
        for &x in &[0.1, 1.0, 10.0, -7.5, 42.0] {
            let closed = psi1_closed_form(x);
            let lo = -(x.abs().powf(1.0 / 3.0)) - 1.0;
            let root = invert_monotone(|u| phi(1, u), |u| phi_prime(1, u), (lo, lo.abs()), x, &tol)
                .unwrap();
            assert!((closed - root).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn implicit_equation_residual_small() {
        for i in 1..=4u32 {
            for n in 0..200 {
                let x = -100.0 + n as f64;
                let p = psi(i, x, 0);
                let res = x + p + p.powi(2 * i as i32 + 1);
                assert!(res.abs() < 1e-12, "i={i} x={x} residual={res:e}");
            }
        }
    }

    #[test]
    fn psi_special_values() {
        // phi(-1) = 2 for every i.
        for i in 1..=4u32 {
            assert!((psi(i, 2.0, 0) + 1.0).abs() < 1e-12);
        }
        // Near-origin expansion Psi = -X + X^(2i+1) + ... gives Psi'(0) = -1
        // and, for i = 1, Psi'''(0) = 3! = 6.
        assert!((psi(1, 0.0, 1) + 1.0).abs() < 1e-14);
        assert!((psi(1, 0.0, 3) - 6.0).abs() < 1e-12);
        assert_eq!(psi(1, 0.0, 2), 0.0);
        assert_eq!(psi(2, 0.0, 4), 0.0);
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        for i in 1..=3u32 {
            for &x in &[-5.0, -0.7, 0.3, 2.0, 20.0] {
                let d1 = psi(i, x, 1);
                let fd1 = fd_derivative(|t| psi(i, t, 0), x, 1e-3);
                assert!((d1 - fd1).abs() < 1e-9 * (1.0 + d1.abs()), "i={i} x={x}");
                let d2 = psi(i, x, 2);
                let fd2 = fd_derivative(|t| psi(i, t, 1), x, 1e-3);
                assert!((d2 - fd2).abs() < 1e-8 * (1.0 + d2.abs()), "i={i} x={x}");
                let d3 = psi(i, x, 3);
                let fd3 = fd_derivative(|t| psi(i, t, 2), x, 1e-3);
                assert!((d3 - fd3).abs() < 1e-7 * (1.0 + d3.abs()), "i={i} x={x}");
                let d4 = psi(i, x, 4);
                let fd4 = fd_derivative(|t| psi(i, t, 3), x, 1e-3);
                assert!((d4 - fd4).abs() < 1e-6 * (1.0 + d4.abs()), "i={i} x={x}");
            }
        }
    }

    #[test]
    fn ode_residual_from_analytic_derivatives() {
        // -Psi/(2i) + (2i+1)/(2i) X Psi' + Psi Psi' = 0.
        for i in 1..=3u32 {
            let alpha = 1.0 + 1.0 / (2.0 * i as f64);
            for n in 0..=400 {
                let x = -100.0 + 0.5 * n as f64;
                let p = psi(i, x, 0);
                let dp = psi(i, x, 1);
                let res = -(alpha - 1.0) * p + alpha * x * dp + p * dp;
                assert!(res.abs() < 1e-8, "i={i} x={x} res={res:e}");
            }
        }
    }

    #[test]
    fn psi_asymptotics() {
        // (2.6)-type: (Psi + X - X^(2i+1)) / X^(2i+1) -> 0 near the origin.
        let x = 1e-2;
        let rel = (psi(1, x, 0) + x - x.powi(3)) / x.powi(3);
        assert!(rel.abs() < 1e-2, "near-origin ratio {rel}");
        // (2.7)-type: Psi_1(X)/(-X^(1/3)) -> 1 at large X.
        let x = 1e6;
        let ratio = psi(1, x, 0) / (-x.powf(1.0 / 3.0));
        assert!((ratio - 1.0).abs() < 1e-3, "far-field ratio {ratio}");
    }

    #[test]
    fn f_k_values_and_derivatives() {
        assert_eq!(f_k(2, 1.0, 0.0, 0), 1.0);
        assert!((f_k(2, 1.0, 1.0, 0) - 0.5).abs() < 1e-15);
        for &z in &[-2.0, -0.5, 0.4, 1.7] {
            for k in 1..=3 {
                let fd1 = fd_derivative(|t| f_k(k, 1.3, t, 0), z, 1e-4);
                assert!((f_k(k, 1.3, z, 1) - fd1).abs() < 1e-9);
                let fd2 = fd_derivative(|t| f_k(k, 1.3, t, 1), z, 1e-4);
                assert!((f_k(k, 1.3, z, 2) - fd2).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn f_k_stationary_equation() {
        // F_k + (Z/2k) dF_k - F_k^2 = 0 pointwise.
        for k in 1..=4u32 {
            let mut worst = 0.0f64;
            for n in 0..1000 {
                let z = -10.0 + 0.02 * n as f64;
                let f0 = f_k(k, 1.0, z, 0);
                let f1 = f_k(k, 1.0, z, 1);
                let res = f0 + z / (2.0 * k as f64) * f1 - f0 * f0;
                worst = worst.max(res.abs());
            }
            assert!(worst < 1e-12, "k={k} residual {worst:e}");
        }
    }
}
