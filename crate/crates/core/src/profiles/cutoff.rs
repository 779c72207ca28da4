//! Smooth cutoff used to glue the interior and exterior blow-up profiles.

/// C^2 bump: 1 on [-1,1], 0 outside [-2,2], quintic-smoothstep transition.
pub fn chi(x: f64) -> f64 {
    let t = x.abs();
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let u = t - 1.0;
        1.0 - (10.0 - 15.0 * u + 6.0 * u * u) * u * u * u
    }
}

/// First derivative of [`chi`].
pub fn chi_prime(x: f64) -> f64 {
    let t = x.abs();
    if !(1.0..2.0).contains(&t) {
        return 0.0;
    }
    let u = t - 1.0;
    let d = -(30.0 - 60.0 * u + 30.0 * u * u) * u * u;
    d * x.signum()
}

/// Second derivative of [`chi`].
pub fn chi_second(x: f64) -> f64 {
    let t = x.abs();
    if !(1.0..2.0).contains(&t) {
        return 0.0;
    }
    let u = t - 1.0;
    -(60.0 - 180.0 * u + 120.0 * u * u) * u
}

/// Cutoff scale specification: chi_d(s, Y) = chi(Y / (d e^(s/2))).
#[derive(Debug, Clone, Copy)]
pub struct CutoffSpec {
    pub d: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { d: 0.1 }
    }
}

impl CutoffSpec {
    pub fn new(d: f64) -> Self {
        assert!(d > 0.0);
        CutoffSpec { d }
    }

    /// chi_d(s, Y); equal to 1 for |Y| <= d e^(s/2), 0 beyond twice that.
    pub fn eval(&self, s: f64, y: f64) -> f64 {
        chi(y / (self.d * (0.5 * s).exp()))
    }

    /// Y-derivative of chi_d.
    pub fn eval_dy(&self, s: f64, y: f64) -> f64 {
        let scale = self.d * (0.5 * s).exp();
        chi_prime(y / scale) / scale
    }

    /// s-derivative of chi_d at fixed Y.
    pub fn eval_ds(&self, s: f64, y: f64) -> f64 {
        let scale = self.d * (0.5 * s).exp();
        chi_prime(y / scale) * (-0.5 * y / scale)
    }

    /// Second Y-derivative of chi_d.
    pub fn eval_dyy(&self, s: f64, y: f64) -> f64 {
        let scale = self.d * (0.5 * s).exp();
        chi_second(y / scale) / (scale * scale)
    }
}
