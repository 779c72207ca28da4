//! Inviscid 1-D Burgers by exact characteristics: shock detection with the
//! universal scaling data (T, x0, c, i, mu) and the windowed measurement of
//! convergence to the self-similar profiles.

use crate::numerics::{invert_monotone, NumericsError, Tolerance};
use crate::profiles::psi;
use std::fmt;

/// Initial datum with derivatives up to `max_order`.
pub trait InitialData {
    fn eval(&self, x: f64, order: usize) -> f64;
    fn max_order(&self) -> usize;
}

/// U_0(x) = -sin x, the classic nondegenerate shock datum.
pub struct NegSin;

impl InitialData for NegSin {
    fn eval(&self, x: f64, order: usize) -> f64 {
        match order % 4 {
            0 => -x.sin(),
            1 => -x.cos(),
            2 => x.sin(),
            _ => x.cos(),
        }
    }
    fn max_order(&self) -> usize {
        12
    }
}

/// U_0 = Psi_i, exactly self-similar data.
pub struct PsiData {
    pub i: u32,
}

impl InitialData for PsiData {
    fn eval(&self, x: f64, order: usize) -> f64 {
        psi(self.i, x, order)
    }
    fn max_order(&self) -> usize {
        4
    }
}

/// Polynomial datum sum_j c_j x^j.
pub struct PolynomialData {
    pub coeffs: Vec<f64>,
}

impl InitialData for PolynomialData {
    fn eval(&self, x: f64, order: usize) -> f64 {
        let mut v = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(order) {
            let mut factor = c;
            for m in 0..order {
                factor *= (j - m) as f64;
            }
            v += factor * x.powi((j - order) as i32);
        }
        v
    }
    fn max_order(&self) -> usize {
        12
    }
}

/// Translated and boosted datum U_0(x - dx) + dc.
pub struct Shifted<'a, D: InitialData> {
    pub inner: &'a D,
    pub dx: f64,
    pub dc: f64,
}

impl<D: InitialData> InitialData for Shifted<'_, D> {
    fn eval(&self, x: f64, order: usize) -> f64 {
        let v = self.inner.eval(x - self.dx, order);
        if order == 0 {
            v + self.dc
        } else {
            v
        }
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
}

/// Shock data extracted from the initial condition.
#[derive(Debug, Clone, Copy)]
pub struct ShockReport {
    /// Blow-up time T = -1/d_x U_0(x_0).
    pub t_blowup: f64,
    /// Minimizer of the initial slope.
    pub x0: f64,
    /// Transported value c = U_0(x_0).
    pub c: f64,
    /// Degeneracy order: the first 2i+1 odd derivative is positive.
    pub i: u32,
    /// Scale parameter mu = (d^(2i+1)U_0(x_0) / ((2i+1)! (-dU_0(x_0))^(2i+2)))^(1/2i).
    pub mu: f64,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShockError {
    /// The slope never becomes negative: the solution is global.
    NoNegativeSlope { min_slope: f64 },
    /// Derivative magnitudes sit inside the vanishing tolerance band.
    DegeneracyUndetermined { order: usize, value: f64, band: f64 },
    /// Requested time at or past the blow-up time.
    PastBlowup { t: f64, t_blowup: f64 },
    /// Characteristic inversion failed.
    InversionFailure(NumericsError),
    /// Sampling window reaches into the excluded |X| < 1e-3 core.
    WindowTouchesAxis { x: f64 },
}

impl fmt::Display for ShockError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShockError::NoNegativeSlope { min_slope } => {
                write!(f, "initial slope minimum {min_slope} is not negative; no shock forms")
            }
            ShockError::DegeneracyUndetermined { order, value, band } => write!(
                f,
                "derivative of order {order} = {value:e} sits inside the vanishing band {band:e}"
            ),
            ShockError::PastBlowup { t, t_blowup } => {
                write!(f, "t = {t} is not strictly below the blow-up time {t_blowup}")
            }
            ShockError::InversionFailure(e) => write!(f, "characteristic inversion: {e}"),
            ShockError::WindowTouchesAxis { x } => {
                write!(f, "window point X = {x} inside the excluded |X| < 1e-3 core")
            }
        }
    }
}

impl std::error::Error for ShockError {}

/// Locates the shock: minimizes d_x U_0 (golden section, then Newton on
/// d2_x U_0), reads off (T, c), and determines the degeneracy order i by
/// scanning odd derivatives with the 1e-9-relative vanishing band.
pub fn shock_detect(
    u0: &dyn InitialData,
    search_domain: (f64, f64),
) -> Result<ShockReport, ShockError> {
    let slope = |x: f64| u0.eval(x, 1);
    let mut x0 = golden_section_min(&slope, search_domain.0, search_domain.1);
    // Polish by bisecting d2_x U_0 = 0: at an interior minimum the second
    // derivative changes sign with odd leading power (x - x0)^(2i-1), so
    // bisection reaches machine precision even for the degenerate minima
    // where the slope itself is too flat to localize.
    let mut delta = 1e-6 * (search_domain.1 - search_domain.0).max(1.0);
    let bracket = loop {
        let (lo, hi) = (
            (x0 - delta).max(search_domain.0),
            (x0 + delta).min(search_domain.1),
        );
        if u0.eval(lo, 2).signum() != u0.eval(hi, 2).signum() {
            break Some((lo, hi));
        }
        delta *= 4.0;
        if delta > search_domain.1 - search_domain.0 {
            break None;
        }
    };
    if let Some((mut lo, mut hi)) = bracket {
        let sign_lo = u0.eval(lo, 2).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if u0.eval(mid, 2).signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * (1.0 + lo.abs() + hi.abs()) {
                break;
            }
        }
        x0 = 0.5 * (lo + hi);
    }

    let d1 = u0.eval(x0, 1);
    if d1 >= 0.0 {
        return Err(ShockError::NoNegativeSlope { min_slope: d1 });
    }
    let c = u0.eval(x0, 0);
    let t_blowup = -1.0 / d1;

    // Degeneracy order: smallest odd m = 2i+1 with a genuinely positive
    // derivative; everything between order 2 and m must sit below the band.
    let max_order = u0.max_order();
    let mut m = None;
    for j in (3..=max_order).step_by(2) {
        if u0.eval(x0, j) > 1e-9 {
            m = Some(j);
            break;
        }
    }
    let Some(m) = m else {
        return Err(ShockError::DegeneracyUndetermined {
            order: max_order,
            value: 0.0,
            band: 1e-9,
        });
    };
    let d_top = u0.eval(x0, m);
    let band = 1e-9 * d_top.abs().max(1.0);
    for j in 2..m {
        let dj = u0.eval(x0, j).abs();
        if dj >= band {
            return Err(ShockError::DegeneracyUndetermined { order: j, value: dj, band });
        }
    }
    let i = ((m - 1) / 2) as u32;
    let factorial: f64 = (1..=m as u32).map(|v| v as f64).product();
    let mu = (d_top / (factorial * (-d1).powi(m as i32 + 1)))
        .powf(1.0 / (2.0 * i as f64));
    Ok(ShockReport { t_blowup, x0, c, i, mu, nondegenerate: true })
}

fn golden_section_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// U(t, x) = U_0(y*) where y* solves y + t U_0(y) = x; the characteristic
/// map is a diffeomorphism for t < T.
pub fn evolve_characteristics(
    u0: &dyn InitialData,
    t: f64,
    x: f64,
    t_blowup: f64,
    tol: &Tolerance,
) -> Result<f64, ShockError> {
    if t >= t_blowup {
        return Err(ShockError::PastBlowup { t, t_blowup });
    }
    if t == 0.0 {
        return Ok(u0.eval(x, 0));
    }
    let phi = |y: f64| y + t * u0.eval(y, 0);
    let dphi = |y: f64| 1.0 + t * u0.eval(y, 1);
    // Expand a bracket around x; phi is increasing and onto.
    let mut r = 1.0 + x.abs();
    for _ in 0..60 {
        let (lo, hi) = (x - r, x + r);
        if (phi(lo) - x) <= 0.0 && (phi(hi) - x) >= 0.0 {
            let y = invert_monotone(phi, dphi, (lo, hi), x, tol)
                .map_err(ShockError::InversionFailure)?;
            return Ok(u0.eval(y, 0));
        }
        r *= 2.0;
    }
    Err(ShockError::InversionFailure(NumericsError::NoBracket {
        lo: x - r,
        hi: x + r,
        f_lo: phi(x - r),
        f_hi: phi(x + r),
        target: x,
    }))
}

/// Windowed self-similar convergence measurement at time t.
#[derive(Debug, Clone, Copy)]
pub struct RescaledError {
    /// sup over the window of |w| / |(T-t)^(1/2i) Psi_i(mu X)|.
    pub sup_ratio: f64,
    /// sup over the window of |rescaled U - mu^(-1) Psi_i(mu X)|.
    pub sup_profile_error: f64,
}

/// Measures the ratio of the remainder to the self-similar profile over a
/// compact window in the rescaled variable X = (x - x0 - ct)/(T-t)^(1+1/2i).
/// The window must exclude |X| < 1e-3 where the denominator vanishes.
pub fn rescaled_error(
    u0: &dyn InitialData,
    report: &ShockReport,
    t: f64,
    window: (f64, f64),
    n_samples: usize,
) -> Result<RescaledError, ShockError> {
    if t >= report.t_blowup {
        return Err(ShockError::PastBlowup { t, t_blowup: report.t_blowup });
    }
    let tol = Tolerance { abs: 1e-14, rel: 1e-14, max_iters: 200 };
    let tau = report.t_blowup - t;
    let inv2i = 1.0 / (2.0 * report.i as f64);
    let alpha = 1.0 + inv2i;
    let mut sup_ratio = 0.0f64;
    let mut sup_profile = 0.0f64;
    for n in 0..n_samples {
        let xx = window.0 + (window.1 - window.0) * n as f64 / (n_samples - 1) as f64;
        if xx.abs() < 1e-3 {
            return Err(ShockError::WindowTouchesAxis { x: xx });
        }
        let x_phys = report.x0 + report.c * t + xx * tau.powf(alpha);
        let u = evolve_characteristics(u0, t, x_phys, report.t_blowup, &tol)?;
        let profile = psi(report.i, report.mu * xx, 0);
        let w = u - report.c - tau.powf(inv2i) * profile / report.mu;
        sup_ratio = sup_ratio.max((w / (tau.powf(inv2i) * profile)).abs());
        let rescaled = (u - report.c) / tau.powf(inv2i);
        sup_profile = sup_profile.max((rescaled - profile / report.mu).abs());
    }
    Ok(RescaledError { sup_ratio, sup_profile_error: sup_profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neg_sin_shock_data() {
        let report = shock_detect(&NegSin, (-1.0, 1.0)).unwrap();
        assert!((report.t_blowup - 1.0).abs() < 1e-12, "T = {}", report.t_blowup);
        assert!(report.x0.abs() < 1e-10);
        assert!(report.c.abs() < 1e-10);
        assert_eq!(report.i, 1);
        assert!((report.mu - (1.0f64 / 6.0).sqrt()).abs() < 1e-12, "mu = {}", report.mu);
    }

    #[test]
    fn psi1_shock_data() {
        let report = shock_detect(&PsiData { i: 1 }, (-1.0, 1.0)).unwrap();
        assert!((report.t_blowup - 1.0).abs() < 1e-10);
        assert!(report.x0.abs() < 1e-8);
        assert_eq!(report.i, 1);
        assert!((report.mu - 1.0).abs() < 1e-8, "mu = {}", report.mu);
    }

    #[test]
    fn quintic_degenerate_shock() {
        // U_0 = -x + x^5: i = 2, mu = (120/(5! * 1))^(1/4) = 1.
        let data = PolynomialData { coeffs: vec![0.0, -1.0, 0.0, 0.0, 0.0, 1.0] };
        let report = shock_detect(&data, (-0.4, 0.4)).unwrap();
        assert_eq!(report.i, 2);
        assert!((report.t_blowup - 1.0).abs() < 1e-10);
        assert!((report.mu - 1.0).abs() < 1e-9, "mu = {}", report.mu);
    }

    #[test]
    fn positive_slope_is_global() {
        let data = PolynomialData { coeffs: vec![0.0, 1.0] };
        assert!(matches!(
            shock_detect(&data, (-1.0, 1.0)),
            Err(ShockError::NoNegativeSlope { .. })
        ));
    }

    #[test]
    fn galilean_covariance() {
        let base = shock_detect(&NegSin, (-1.0, 1.0)).unwrap();
        let shifted = Shifted { inner: &NegSin, dx: 0.7, dc: 0.3 };
        let moved = shock_detect(&shifted, (-0.5, 1.8)).unwrap();
        assert!((moved.x0 - (base.x0 + 0.7)).abs() < 1e-9);
        assert!((moved.c - (base.c + 0.3)).abs() < 1e-9);
        assert!((moved.t_blowup - base.t_blowup).abs() < 1e-10);
        assert_eq!(moved.i, base.i);
        assert!((moved.mu - base.mu).abs() < 1e-10);
    }

    #[test]
    fn characteristics_identity_at_t0() {
        let tol = Tolerance::default();
        for &x in &[-2.0, 0.3, 1.7] {
            let u = evolve_characteristics(&NegSin, 0.0, x, 1.0, &tol).unwrap();
            assert_eq!(u, -x.sin());
        }
    }

    #[test]
    fn linear_data_closed_form() {
        // U_0 = -x evolves to -x/(1-t).
        let data = PolynomialData { coeffs: vec![0.0, -1.0] };
        let tol = Tolerance::default();
        for &(t, x) in &[(0.5, 1.0), (0.9, -0.2), (0.99, 3.0)] {
            let u = evolve_characteristics(&data, t, x, 1.0, &tol).unwrap();
            assert!((u + x / (1.0 - t)).abs() < 1e-10 * (1.0 + u.abs()), "t={t} x={x}");
        }
    }

    #[test]
    fn conservation_along_characteristics() {
        let tol = Tolerance::default();
        for &t in &[0.2, 0.7, 0.95] {
            for &y in &[-1.5, -0.3, 0.6, 2.0] {
                let x = y + t * NegSin.eval(y, 0);
                let u = evolve_characteristics(&NegSin, t, x, 1.0, &tol).unwrap();
                assert!((u - NegSin.eval(y, 0)).abs() < 1e-11, "t={t} y={y}");
            }
        }
    }

    #[test]
    fn past_blowup_guarded() {
        assert!(matches!(
            evolve_characteristics(&NegSin, 1.0, 0.0, 1.0, &Tolerance::default()),
            Err(ShockError::PastBlowup { .. })
        ));
    }

    #[test]
    fn inverse_min_slope_tracks_remaining_time() {
        // -1/min_x dU(t,.) = T - t exactly along characteristics; sampled
        // with the minimizer included.
        let report = shock_detect(&NegSin, (-1.0, 1.0)).unwrap();
        for m in 1..=13 {
            let t = report.t_blowup - 2f64.powi(-m);
            let mut min_slope = f64::INFINITY;
            for n in -200..=200 {
                let y = report.x0 + n as f64 * 0.01;
                let d = NegSin.eval(y, 1);
                min_slope = min_slope.min(d / (1.0 + t * d));
            }
            let lhs = -1.0 / min_slope;
            let rhs = report.t_blowup - t;
            assert!((lhs - rhs).abs() < 1e-4 * rhs, "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn psi1_is_exactly_self_similar() {
        let data = PsiData { i: 1 };
        let report = shock_detect(&data, (-1.0, 1.0)).unwrap();
        for &t in &[0.5, 0.9, 0.99] {
            let err = rescaled_error(&data, &report, t, (1e-3, 1.0), 101).unwrap();
            assert!(err.sup_ratio < 1e-6, "t={t}: ratio {:e}", err.sup_ratio);
        }
    }

    #[test]
    fn neg_sin_ratio_contracts_along_dyadic_times() {
        let report = shock_detect(&NegSin, (-1.0, 1.0)).unwrap();
        let mut prev = f64::INFINITY;
        for m in 2..=12 {
            let t = report.t_blowup - 2f64.powi(-m);
            let err = rescaled_error(&NegSin, &report, t, (1e-3, 1.0), 201).unwrap();
            assert!(
                err.sup_ratio < prev,
                "m={m}: ratio {} did not improve on {prev}",
                err.sup_ratio
            );
            prev = err.sup_ratio;
        }
        assert!(prev < 0.05, "final ratio {prev}");
    }

    #[test]
    fn window_axis_guard() {
        let report = shock_detect(&NegSin, (-1.0, 1.0)).unwrap();
        assert!(matches!(
            rescaled_error(&NegSin, &report, 0.5, (0.0, 1.0), 50),
            Err(ShockError::WindowTouchesAxis { .. })
        ));
    }
}
