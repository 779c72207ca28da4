//! Evaluable closed-form and semi-closed-form profile families with
//! analytic derivatives, behind one [`ProfileHandle`] front door.

mod cutoff;
mod eigen;
mod flat;
mod glued;
mod psi;
mod stable;
mod theta;

pub use cutoff::{chi, chi_prime, chi_second, CutoffSpec};
pub use eigen::{
    hermite, hermite_norm_constant, phi_jl_2d, phi_x, phi_z, psi_ell, rational_mode,
    IndexOutOfRange, MAX_MODE_INDEX,
};
pub use flat::{
    approx_profile_coefficients, approx_profile_f, approx_profile_f_da, approx_profile_f_ds,
    approx_profile_f_dy, decay_prefactor, flat_profile_da_projection, flat_profile_residual,
    flat_profile_residual_direct, flat_profile_residual_norm,
};
pub use glued::{exterior_theta, glued_q, interior_theta, mu_parameter, ProfileVanishes};
pub use psi::{f_k, phi, phi_prime, psi, psi1_closed_form};
pub use stable::{stable_profile_f, stable_profile_residual, stable_residual_remainder_norm};
pub use theta::{theta, theta_stationary_residual};

/// Scaling bookkeeping for the self-similar frame: profile indices (i, k),
/// normalization constants (a, b) and the blow-up time T, together with the
/// coordinate maps between physical (t, x, y) and renormalized (s, X, Y, Z).
#[derive(Debug, Clone, Copy)]
pub struct SelfSimilarFrame {
    /// Burgers profile index; alpha_i = 1 + 1/(2i).
    pub i: u32,
    /// Transverse flatness index (k = 1 marks the stable case).
    pub k: u32,
    pub a: f64,
    pub b: f64,
    /// Blow-up time T.
    pub t_blowup: f64,
}

impl SelfSimilarFrame {
    pub fn new(i: u32, k: u32, a: f64, b: f64, t_blowup: f64) -> Self {
        assert!(i >= 1 && k >= 1);
        assert!(a > 0.0 && b > 0.0 && t_blowup > 0.0);
        SelfSimilarFrame { i, k, a, b, t_blowup }
    }

    /// Standard frame for the flat-case runs: i = 1, a = b = 1, T = 1.
    pub fn flat(k: u32) -> Self {
        SelfSimilarFrame::new(1, k, 1.0, 1.0, 1.0)
    }

    /// alpha_i = 1 + 1/(2i), the streamwise scaling exponent.
    pub fn alpha(&self) -> f64 {
        1.0 + 1.0 / (2.0 * self.i as f64)
    }

    /// Renormalized time s = -log(T - t).
    pub fn s_of_t(&self, t: f64) -> f64 {
        -(self.t_blowup - t).ln()
    }

    pub fn t_of_s(&self, s: f64) -> f64 {
        self.t_blowup - (-s).exp()
    }

    /// Z = e^(-(k-1)s/(2k)) Y, the profile-adapted transverse variable.
    pub fn z_of_y(&self, s: f64, y_ss: f64) -> f64 {
        (-(self.k as f64 - 1.0) / (2.0 * self.k as f64) * s).exp() * y_ss
    }

    pub fn y_of_z(&self, s: f64, z: f64) -> f64 {
        ((self.k as f64 - 1.0) / (2.0 * self.k as f64) * s).exp() * z
    }

    /// (t, x, y) -> (s, X, Y, Z).
    pub fn to_selfsimilar(&self, t: f64, x: f64, y: f64) -> (f64, f64, f64, f64) {
        let tau = self.t_blowup - t;
        assert!(tau > 0.0, "past the blow-up time");
        let s = -tau.ln();
        let xx = (self.b / 6.0).sqrt() * x / tau.powf(self.alpha());
        let yy = self.a.powf(1.0 / (2.0 * self.k as f64)) * y / tau.sqrt();
        (s, xx, yy, self.z_of_y(s, yy))
    }

    /// (s, X, Y) -> (t, x, y); inverse of [`Self::to_selfsimilar`].
    pub fn to_physical(&self, s: f64, xx: f64, yy: f64) -> (f64, f64, f64) {
        let tau = (-s).exp();
        let t = self.t_blowup - tau;
        let x = xx * tau.powf(self.alpha()) / (self.b / 6.0).sqrt();
        let y = yy * tau.sqrt() / self.a.powf(1.0 / (2.0 * self.k as f64));
        (t, x, y)
    }
}

/// One evaluable analytic profile with derivatives up to the family's
/// supported order. Construction is cheap; evaluation is deterministic.
#[derive(Debug, Clone, Copy)]
pub enum ProfileHandle {
    /// Psi_i by monotone inversion (closed form for i = 1); orders 0..4.
    Psi { i: u32 },
    /// Cardano closed form of Psi_1; order 0 only.
    Psi1Closed,
    /// F_k(aZ); orders 0..2.
    FK { k: u32, a: f64 },
    /// Shock eigenfunction phi_{X,j}; orders 0..1.
    PhiX { i: u32, j: u32 },
    /// Transverse eigenfunction phi_{Z,l}; orders 0..2.
    PhiZ { k: u32, a: f64, l: u32 },
    /// Forced-equation eigenfunction psi_l; orders 0..2.
    PsiEll { k: u32, a: f64, l: u32 },
    /// Orthonormal Hermite function h_l; orders 0..2.
    Hermite { l: u32 },
    /// 2-D profile Theta[a,b]; orders (0..2, 0..2).
    Theta2D { i: u32, k: u32, a: f64, b: f64 },
    /// 2-D eigenfunction phi_{j,l}; orders (dx, dz) with dx + dz <= 1.
    PhiJl2D { k: u32, j: u32, l: u32 },
    /// Flat approximate profile F[a](s, .); order 0 (in Y).
    ApproxF { k: u32, a: f64, s: f64 },
    /// Stable approximate profile; order 0 (in Y).
    StableF { s: f64, a: f64 },
    /// Interior glue Theta-tilde from canonical traces (f, g) = (F[a], 6 F_k^4).
    InteriorTheta { k: u32, a: f64, s: f64 },
    /// Exterior glue Theta_e from the same canonical traces.
    ExteriorTheta { k: u32, a: f64, s: f64 },
    /// Glued Q from the canonical traces with cutoff scale d.
    GluedQ { k: u32, a: f64, s: f64, d: f64 },
}

impl ProfileHandle {
    pub fn is_two_dimensional(&self) -> bool {
        matches!(
            self,
            ProfileHandle::Theta2D { .. }
                | ProfileHandle::PhiJl2D { .. }
                | ProfileHandle::InteriorTheta { .. }
                | ProfileHandle::ExteriorTheta { .. }
                | ProfileHandle::GluedQ { .. }
        )
    }

    /// Evaluates a 1-D family; panics on 2-D families.
    pub fn eval1d(&self, x: f64, order: usize) -> f64 {
        match *self {
            ProfileHandle::Psi { i } => psi(i, x, order),
            ProfileHandle::Psi1Closed => {
                assert_eq!(order, 0, "closed form exposes the value only");
                psi1_closed_form(x)
            }
            ProfileHandle::FK { k, a } => f_k(k, a, x, order),
            ProfileHandle::PhiX { i, j } => phi_x(i, j, x, order).expect("index checked"),
            ProfileHandle::PhiZ { k, a, l } => phi_z(k, a, l, x, order).expect("index checked"),
            ProfileHandle::PsiEll { k, a, l } => {
                psi_ell(k, a, l, x, order).expect("index checked")
            }
            ProfileHandle::Hermite { l } => hermite(l, x, order).expect("index checked"),
            ProfileHandle::ApproxF { k, a, s } => {
                assert_eq!(order, 0);
                approx_profile_f(k, a, s, x)
            }
            ProfileHandle::StableF { s, a } => {
                assert_eq!(order, 0);
                stable_profile_f(s, a, x)
            }
            _ => panic!("two-dimensional profile evaluated as 1-D"),
        }
    }

    /// Evaluates a 2-D family at (X, Z or Y depending on the family).
    pub fn eval2d(&self, x: f64, second: f64, order: (usize, usize)) -> f64 {
        match *self {
            ProfileHandle::Theta2D { i, k, a, b } => theta(i, k, a, b, x, second, order),
            ProfileHandle::PhiJl2D { k, j, l } => {
                phi_jl_2d(k, j, l, x, second, order).expect("index checked")
            }
            ProfileHandle::InteriorTheta { k, a, s } => {
                assert_eq!(order.1, 0, "interior glue exposes X-derivatives only");
                let (f, g) = canonical_traces(k, a, s, second);
                interior_theta(1, f, g, x, order.0)
            }
            ProfileHandle::ExteriorTheta { k, a, s } => {
                assert_eq!(order.1, 0);
                let (f, g) = canonical_traces(k, a, s, second);
                let frame = SelfSimilarFrame::flat(k);
                exterior_theta(1, k, frame.z_of_y(s, second), f, g, x, order.0)
            }
            ProfileHandle::GluedQ { k, a, s, d } => {
                assert_eq!(order.1, 0);
                let (f, g) = canonical_traces(k, a, s, second);
                glued_q(1, k, s, &CutoffSpec::new(d), f, g, x, second, order.0)
                    .expect("canonical traces are positive")
            }
            _ => panic!("one-dimensional profile evaluated as 2-D"),
        }
    }
}

/// Canonical trace pair (f, g) = (F[a](s, Y), 6 F_k^4(Z)) used to assemble
/// glued profiles without a solver in the loop.
pub fn canonical_traces(k: u32, a: f64, s: f64, y: f64) -> (f64, f64) {
    let frame = SelfSimilarFrame::flat(k);
    let z = frame.z_of_y(s, y);
    (approx_profile_f(k, a, s, y), 6.0 * f_k(k, 1.0, z, 0).powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip_is_identity() {
        let frame = SelfSimilarFrame::new(2, 3, 0.7, 2.0, 0.5);
        for &(t, x, y) in &[(0.1, 0.3, -1.2), (0.49, -2.0, 0.01), (0.0, 5.0, 5.0)] {
            let (s, xx, yy, _z) = frame.to_selfsimilar(t, x, y);
            let (t2, x2, y2) = frame.to_physical(s, xx, yy);
            assert!((t - t2).abs() < 1e-14, "t {t} vs {t2}");
            assert!((x - x2).abs() < 1e-14 * (1.0 + x.abs()));
            assert!((y - y2).abs() < 1e-14 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn frame_alpha_exact() {
        assert_eq!(SelfSimilarFrame::flat(2).alpha(), 1.5);
        assert_eq!(SelfSimilarFrame::new(2, 2, 1.0, 1.0, 1.0).alpha(), 1.25);
    }

    #[test]
    fn handle_dispatch() {
        let h = ProfileHandle::Psi { i: 1 };
        assert!((h.eval1d(2.0, 0) + 1.0).abs() < 1e-12);
        let t = ProfileHandle::Theta2D { i: 1, k: 2, a: 1.0, b: 1.0 };
        assert!((t.eval2d(1.0, 0.0, (0, 0)) - psi(1, 1.0, 0)).abs() < 1e-13);
        assert!(t.is_two_dimensional());
    }

    #[test]
    fn glued_handle_traces() {
        // The glued Q from canonical traces reproduces -f as its axis slope.
        let (k, a, s, d) = (2, 1.0, 10.0, 0.1);
        let q = ProfileHandle::GluedQ { k, a, s, d };
        for &y in &[0.0, 1.0, 5.0] {
            let (f, _) = canonical_traces(k, a, s, y);
            let slope = q.eval2d(0.0, y, (1, 0));
            assert!((slope + f).abs() < 1e-12, "y={y}");
        }
    }
}
