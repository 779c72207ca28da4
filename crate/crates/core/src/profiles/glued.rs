//! The blended near-axis/far-field blow-up profile Q built from the trace
//! pair (f, g): interior shape Theta-tilde, exterior shape Theta_e, glued
//! by the cutoff chi_d.

use super::cutoff::CutoffSpec;
use super::psi::psi;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileVanishes {
    pub y: f64,
    pub f: f64,
    pub g: f64,
}

impl std::fmt::Display for ProfileVanishes {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            out,
            "trace pair not positive inside the cutoff support at Y = {}: f = {}, g = {}",
            self.y, self.f, self.g
        )
    }
}

impl std::error::Error for ProfileVanishes {}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Scale parameter mu = (g / ((2i+1)! f^(2i+2)))^(1/(2i)); equals 1 when
/// (f, g) sit exactly on the stationary relation g = (2i+1)! f^(2i+2).
pub fn mu_parameter(i: u32, f: f64, g: f64) -> f64 {
    (g / (factorial(2 * i + 1) * f.powi(2 * i as i32 + 2))).powf(1.0 / (2.0 * i as f64))
}

/// Interior profile mu^(-1) f^(-1/(2i)) Psi_i(mu f^(1+1/(2i)) X) and its
/// X-derivatives (order <= 4). For i = 1 this is the sqrt(6)-form
/// sqrt(6) g^(-1/2) f^(3/2) Psi_1(g^(1/2) f^(-1/2) X / sqrt(6)).
pub fn interior_theta(i: u32, f: f64, g: f64, x: f64, order: usize) -> f64 {
    let nu = 1.0 / (2.0 * i as f64);
    let mu = mu_parameter(i, f, g);
    let amp = f.powf(-nu) / mu;
    let scale = mu * f.powf(1.0 + nu);
    amp * scale.powi(order as i32) * psi(i, scale * x, order)
}

/// Exterior profile (-X f + X^(2i+1) g/(2i+1)!) exp(-Xt^(2i+2)) with
/// Xt = X/(1+Z^(2k))^(1+1/(2i)), and its X-derivatives (order <= 4).
pub fn exterior_theta(i: u32, k: u32, z: f64, f: f64, g: f64, x: f64, order: usize) -> f64 {
    assert!(order <= 4);
    let alpha = 1.0 + 1.0 / (2.0 * i as f64);
    let beta = (1.0 + z.powi(2 * k as i32)).powf(alpha);
    let m = 2 * i + 2; // damping exponent
    let q = beta.powi(-(m as i32));

    // P(X) = -X f + X^(2i+1) g/(2i+1)! and derivatives.
    let deg = 2 * i + 1;
    let p_m = |mth: u32| -> f64 {
        let linear = match mth {
            0 => -x * f,
            1 => -f,
            _ => 0.0,
        };
        let top = if mth <= deg {
            g * x.powi((deg - mth) as i32) / factorial(deg - mth)
        } else {
            0.0
        };
        linear + top
    };

    // E = exp(-q X^m): E^(n)/E as polynomials in X via the recurrence
    // p_(n+1) = p_n' + p_n * u with u = -m q X^(m-1).
    let e = (-q * x.powi(m as i32)).exp();
    let mut ratios = [0.0f64; 5];
    let mut poly = vec![0.0; 1];
    poly[0] = 1.0;
    ratios[0] = 1.0;
    for n in 1..=order {
        let mut next = vec![0.0; poly.len() + m as usize - 1];
        for (d, &c) in poly.iter().enumerate() {
            if d >= 1 {
                next[d - 1] += c * d as f64;
            }
            next[d + m as usize - 1] += c * (-(m as f64) * q);
        }
        poly = next;
        ratios[n] = poly.iter().rev().fold(0.0, |acc, &c| acc * x + c);
    }

    let mut v = 0.0;
    for mth in 0..=order {
        v += binomial(order, mth) * p_m(mth as u32) * ratios[order - mth] * e;
    }
    v
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n as u32) / (factorial(k as u32) * factorial((n - k) as u32))
}

/// Glued profile Q = chi_d(s,Y) Theta-tilde + (1 - chi_d) Theta_e and its
/// X-derivatives at a point where the traces take the values (f, g).
///
/// Z is derived from Y through the flat-frame relation Z = e^(-(k-1)s/(2k)) Y.
pub fn glued_q(
    i: u32,
    k: u32,
    s: f64,
    cutoff: &CutoffSpec,
    f: f64,
    g: f64,
    x: f64,
    y: f64,
    order_x: usize,
) -> Result<f64, ProfileVanishes> {
    assert!(order_x <= 4);
    let chi = cutoff.eval(s, y);
    if chi > 0.0 && (f <= 0.0 || g <= 0.0) {
        return Err(ProfileVanishes { y, f, g });
    }
    let z = (-(k as f64 - 1.0) / (2.0 * k as f64) * s).exp() * y;
    let ext = exterior_theta(i, k, z, f, g, x, order_x);
    if chi == 0.0 {
        return Ok(ext);
    }
    let int = interior_theta(i, f, g, x, order_x);
    Ok(chi * int + (1.0 - chi) * ext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_derivative;
    use crate::profiles::psi::f_k;
    use crate::profiles::theta::theta;

    #[test]
    fn interior_matches_sqrt6_form() {
        // sqrt(6) g^(-1/2) f^(3/2) Psi_1(g^(1/2) f^(-1/2) X / sqrt(6))
        let sqrt6 = 6.0f64.sqrt();
        for &(f, g, x) in &[(0.9, 4.1, 0.5), (0.4, 0.2, -2.0), (1.3, 10.0, 3.3)] {
            let a = interior_theta(1, f, g, x, 0);
            let b = sqrt6 * g.powf(-0.5) * f.powf(1.5)
                * psi(1, g.sqrt() * f.powf(-0.5) / sqrt6 * x, 0);
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "f={f} g={g} x={x}");
        }
    }

    #[test]
    fn interior_reduces_to_theta_on_stationary_traces() {
        // f = F_k, g = 6 F_k^4 gives mu = 1 and Theta-tilde = Theta[1,1].
        let k = 2;
        for &(x, z) in &[(0.7, 0.3), (-4.0, 1.5), (12.0, -2.0)] {
            let f = f_k(k, 1.0, z, 0);
            let g = 6.0 * f.powi(4);
            assert!((mu_parameter(1, f, g) - 1.0).abs() < 1e-14);
            let int = interior_theta(1, f, g, x, 0);
            let th = theta(1, k, 1.0, 1.0, x, z, (0, 0));
            assert!((int - th).abs() < 1e-12 * (1.0 + th.abs()), "x={x} z={z}");
        }
    }

    #[test]
    fn exterior_derivatives_match_fd() {
        let (i, k, z, f, g) = (1, 2, 0.8, 0.7, 2.9);
        for &x in &[0.0, 0.9, -2.4, 4.0] {
            for order in 1..=4usize {
                let d = exterior_theta(i, k, z, f, g, x, order);
                let fd = fd_derivative(|t| exterior_theta(i, k, z, f, g, t, order - 1), x, 1e-3);
                assert!(
                    (d - fd).abs() < 1e-6 * (1.0 + d.abs()),
                    "order={order} x={x}: {d} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn glued_axis_traces() {
        // dQ/dX at X = 0 equals -f and d3Q/dX3 equals g, in both zones and
        // across the cutoff transition.
        let cutoff = CutoffSpec::default();
        let (k, s) = (2, 6.0f64);
        let scale = cutoff.d * (0.5 * s).exp();
        for &y in &[0.0, 0.9 * scale, 1.5 * scale, 3.0 * scale] {
            let f = 0.8 + 0.01 * y;
            let g = 3.0 + 0.02 * y;
            let d1 = glued_q(1, k, s, &cutoff, f, g, 0.0, y, 1).unwrap();
            assert!((d1 + f).abs() < 1e-12, "y={y}: dQ {d1} vs -f {}", -f);
            let d3 = glued_q(1, k, s, &cutoff, f, g, 0.0, y, 3).unwrap();
            assert!((d3 - g).abs() < 1e-11, "y={y}: d3Q {d3} vs g {g}");
            let d0 = glued_q(1, k, s, &cutoff, f, g, 0.0, y, 0).unwrap();
            let d2 = glued_q(1, k, s, &cutoff, f, g, 0.0, y, 2).unwrap();
            let d4 = glued_q(1, k, s, &cutoff, f, g, 0.0, y, 4).unwrap();
            assert!(d0.abs() < 1e-14 && d2.abs() < 1e-14 && d4.abs() < 1e-12);
        }
    }

    #[test]
    fn glued_rejects_vanishing_traces() {
        let cutoff = CutoffSpec::default();
        let err = glued_q(1, 2, 6.0, &cutoff, -0.1, 3.0, 1.0, 0.0, 0).unwrap_err();
        assert!(err.f < 0.0);
        // Outside the cutoff support, nonpositive f is allowed.
        let scale = cutoff.d * (0.5 * 6.0f64).exp();
        assert!(glued_q(1, 2, 6.0, &cutoff, -0.1, 3.0, 1.0, 4.0 * scale, 0).is_ok());
    }
}
