//! Discretely self-similar shock profiles: seed validation, the segment
//! extension map, and the Holder-ratio regularity diagnostic.
//!
//! The extension map sends a seed V on [X_0, X_1] to the unique odd W with
//! W(X) = lambda^(1-alpha) W(lambda^alpha X + (lambda^alpha -
//! lambda^(alpha-1)) W(X)). Internally segments store the defect
//! D(X) = -W(X) - X rather than W: the map acts on D as the pure
//! contraction D(phi(xi)) = lambda^(-alpha) D(xi) with
//! phi(xi) = lambda^(1-alpha) xi + (lambda^(1-alpha) - lambda^(-alpha)) D(xi),
//! so D keeps full relative precision down to the 1e-13-sized values the
//! Holder ratio divides by. (Assembling -W - X in floating point instead
//! would lose the ratio in cancellation noise after a few segments.)

use crate::numerics::{invert_monotone, CubicHermite, NumericsError, Tolerance};
use crate::profiles::psi;
use std::fmt;

/// Discrete scaling parameters: ratio lambda > 1 and exponent alpha > 1.
#[derive(Debug, Clone, Copy)]
pub struct DssParams {
    pub lambda: f64,
    pub alpha: f64,
}

impl DssParams {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        assert!(lambda > 1.0 && alpha > 1.0);
        DssParams { lambda, alpha }
    }

    /// Equivalent profile index i = 1/(2(alpha-1)); integer values single
    /// out the smooth Psi_i scalings.
    pub fn i_equiv(&self) -> f64 {
        1.0 / (2.0 * (self.alpha - 1.0))
    }

    /// Derivative iteration f(a) = lambda a / (1 - (lambda-1) a), the map
    /// obeyed by W_X across consecutive segments; fixed points -1 and 0.
    pub fn slope_map(&self, a: f64) -> f64 {
        self.lambda * a / (1.0 - (self.lambda - 1.0) * a)
    }
}

/// Seed data: samples of V and V_X on [X_0, X_1], interpolated by a cubic
/// Hermite that honors the endpoint values and slopes exactly.
#[derive(Debug, Clone)]
pub struct DssSeed {
    pub xs: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
}

impl DssSeed {
    pub fn from_samples(xs: Vec<f64>, w: Vec<f64>, dw: Vec<f64>) -> Self {
        assert!(xs.len() >= 8, "seed needs a usable sample count");
        assert!(xs.iter().all(|&x| x < 0.0), "seed lives on the negative axis");
        DssSeed { xs, w, dw }
    }

    /// Restriction of Psi_1 to [X_0, phi(X_0)]; satisfies every hypothesis
    /// exactly, so the extension must reproduce Psi_1.
    pub fn psi1(params: &DssParams, x0: f64, n: usize) -> Self {
        let x1 = Self::matched_x1(params, x0, psi(1, x0, 0));
        let xs: Vec<f64> = (0..n)
            .map(|j| x0 + (x1 - x0) * j as f64 / (n - 1) as f64)
            .collect();
        let w = xs.iter().map(|&x| psi(1, x, 0)).collect();
        let dw = xs.iter().map(|&x| psi(1, x, 1)).collect();
        DssSeed::from_samples(xs, w, dw)
    }

    /// Psi_1 seed plus a C^1 interior bump (vanishing with its slope at
    /// both endpoints), so the matching conditions still hold exactly but
    /// the profile is no longer a Psi restriction.
    pub fn perturbed_psi1(params: &DssParams, x0: f64, n: usize, delta: f64) -> Self {
        let base = Self::psi1(params, x0, n);
        let (lo, hi) = (base.xs[0], *base.xs.last().unwrap());
        let mut w = base.w.clone();
        let mut dw = base.dw.clone();
        for (j, &x) in base.xs.iter().enumerate() {
            let t = (x - lo) / (hi - lo);
            let bump = t * t * (1.0 - t) * (1.0 - t);
            let dbump = (2.0 * t * (1.0 - t) * (1.0 - t) - 2.0 * t * t * (1.0 - t)) / (hi - lo);
            w[j] += delta * bump;
            dw[j] += delta * dbump;
        }
        DssSeed { xs: base.xs, w, dw }
    }

    /// X_1 = lambda^(-alpha) X_0 + (lambda^(-alpha) - lambda^(1-alpha)) V(X_0).
    pub fn matched_x1(params: &DssParams, x0: f64, v_x0: f64) -> f64 {
        let la = params.lambda.powf(-params.alpha);
        let lb = params.lambda.powf(1.0 - params.alpha);
        la * x0 + (la - lb) * v_x0
    }
}

/// One verified hypothesis with its measured defect.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub name: String,
    pub pass: bool,
    pub defect: f64,
}

/// Verifies the extension-map hypotheses: breakpoint consistency, the open
/// range conditions on V and V_X, and the two endpoint matching conditions.
pub fn dss_seed_check(seed: &DssSeed, params: &DssParams) -> Vec<ConditionReport> {
    let mut out = Vec::new();
    let n = seed.xs.len();
    let (x0, x1) = (seed.xs[0], seed.xs[n - 1]);
    let (v0, v1) = (seed.w[0], seed.w[n - 1]);
    let (dv0, dv1) = (seed.dw[0], seed.dw[n - 1]);

    let x1_expected = DssSeed::matched_x1(params, x0, v0);
    let defect = (x1 - x1_expected).abs();
    out.push(ConditionReport {
        name: "breakpoint X1 = lambda^-a X0 + (lambda^-a - lambda^(1-a)) V(X0)".into(),
        pass: defect < 1e-9 * x0.abs().max(1.0),
        defect,
    });

    let mut range_v = f64::NEG_INFINITY;
    let mut range_dv = f64::NEG_INFINITY;
    for j in 0..n {
        // V in (0, -X): defect is how far outside the open interval we sit.
        range_v = range_v.max(-seed.w[j]).max(seed.w[j] + seed.xs[j]);
        range_dv = range_dv.max(seed.dw[j]).max(-1.0 - seed.dw[j]);
    }
    out.push(ConditionReport {
        name: "range V(X) in (0, -X)".into(),
        pass: range_v < 0.0,
        defect: range_v,
    });
    out.push(ConditionReport {
        name: "range V_X in (-1, 0)".into(),
        pass: range_dv < 0.0,
        defect: range_dv,
    });

    let lb = params.lambda.powf(1.0 - params.alpha);
    let defect = (v1 - lb * v0).abs();
    out.push(ConditionReport {
        name: "value matching V(X1) = lambda^(1-a) V(X0)".into(),
        pass: defect < 1e-10 * v0.abs().max(1.0),
        defect,
    });

    let defect = (dv1 - params.slope_map(dv0)).abs();
    out.push(ConditionReport {
        name: "slope matching V_X(X1) = lambda V_X(X0)/(1-(lambda-1)V_X(X0))".into(),
        pass: defect < 1e-10,
        defect,
    });

    out
}

#[derive(Debug)]
pub enum DssError {
    SeedInvalid(Vec<ConditionReport>),
    InversionFailure(NumericsError),
}

impl fmt::Display for DssError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DssError::SeedInvalid(reports) => {
                let failed: Vec<&str> = reports
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| r.name.as_str())
                    .collect();
                write!(f, "seed fails hypotheses: {}", failed.join("; "))
            }
            DssError::InversionFailure(e) => write!(f, "segment-map inversion failed: {e}"),
        }
    }
}

impl std::error::Error for DssError {}

/// One tabulated segment in defect form: D(X) = -W(X) - X on [x_lo, x_hi].
#[derive(Debug, Clone)]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    defect: CubicHermite,
}

impl Segment {
    fn defect_at(&self, x: f64) -> f64 {
        self.defect.eval(x)
    }
    fn defect_slope_at(&self, x: f64) -> f64 {
        self.defect.eval_derivative(x)
    }
}

/// The constructed discretely self-similar profile on [X_0, X_(n_steps+1)).
#[derive(Debug, Clone)]
pub struct DssState {
    pub params: DssParams,
    /// X_0 > X_1 > ... toward 0 (all negative), one more than segments.
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl DssState {
    fn segment_of(&self, x: f64) -> &Segment {
        let idx = self
            .segments
            .iter()
            .position(|s| x <= s.x_hi)
            .unwrap_or(self.segments.len() - 1);
        &self.segments[idx]
    }

    /// W(X) = -X - D(X) on the tabulated domain.
    pub fn eval_w(&self, x: f64) -> f64 {
        -x - self.segment_of(x).defect_at(x)
    }

    /// The defect D(X) = -W(X) - X, kept to full relative precision.
    pub fn eval_defect(&self, x: f64) -> f64 {
        self.segment_of(x).defect_at(x)
    }

    /// W_X(X) = -1 - D_X(X).
    pub fn eval_dw(&self, x: f64) -> f64 {
        -1.0 - self.segment_of(x).defect_slope_at(x)
    }

    /// Sample positions of one segment, geometrically refined toward the
    /// right (small-|X|) end.
    pub fn segment_samples(&self, idx: usize, n: usize) -> Vec<f64> {
        let seg = &self.segments[idx];
        (0..n)
            .map(|j| {
                let t = j as f64 / (n - 1) as f64;
                seg.x_hi - (seg.x_hi - seg.x_lo) * (1.0 - t).powf(1.5)
            })
            .collect()
    }
}

pub const SAMPLES_PER_SEGMENT: usize = 256;

/// Extends a valid seed by `n_steps` segments via the map
/// phi(xi) = lambda^(1-a) xi + (lambda^(1-a) - lambda^(-a)) D(xi) and the
/// contraction D(phi(xi)) = lambda^(-a) D(xi).
pub fn dss_extend(
    seed: &DssSeed,
    params: &DssParams,
    n_steps: usize,
) -> Result<DssState, DssError> {
    let checks = dss_seed_check(seed, params);
    if checks.iter().any(|c| !c.pass) {
        return Err(DssError::SeedInvalid(checks));
    }
    let la = params.lambda.powf(-params.alpha);
    let lb = params.lambda.powf(1.0 - params.alpha);

    // Seed segment in defect form.
    let d0: Vec<f64> = seed.xs.iter().zip(&seed.w).map(|(&x, &w)| -w - x).collect();
    let dd0: Vec<f64> = seed.dw.iter().map(|&dw| -1.0 - dw).collect();
    let mut segments = vec![Segment {
        x_lo: seed.xs[0],
        x_hi: *seed.xs.last().unwrap(),
        defect: CubicHermite::new(seed.xs.clone(), d0, dd0),
    }];
    let mut breakpoints = vec![seed.xs[0], *seed.xs.last().unwrap()];

    let tol = Tolerance { abs: 1e-15, rel: 1e-14, max_iters: 200 };
    for _ in 0..n_steps {
        let prev = segments.last().unwrap();
        let phi = |xi: f64| lb * xi + (lb - la) * prev.defect_at(xi);
        let dphi = |xi: f64| lb + (lb - la) * prev.defect_slope_at(xi);
        let x_lo = prev.x_hi;
        let x_hi = phi(prev.x_hi);

        let n = SAMPLES_PER_SEGMENT;
        let mut xs = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        let mut dd = Vec::with_capacity(n);
        for j in 0..n {
            let t = j as f64 / (n - 1) as f64;
            let x = x_hi - (x_hi - x_lo) * (1.0 - t).powf(1.5);
            let xi = if j == 0 {
                prev.x_hi
            } else if j == n - 1 {
                // phi is exact at the right breakpoint by construction.
                phi_inverse_guard(phi, dphi, prev.x_lo, prev.x_hi, x, &tol)?
            } else {
                phi_inverse_guard(phi, dphi, prev.x_lo, prev.x_hi, x, &tol)?
            };
            let defect = la * prev.defect_at(xi);
            let slope = {
                let dp = prev.defect_slope_at(xi);
                la * dp / dphi(xi)
            };
            xs.push(if j == 0 { x_lo } else if j == n - 1 { x_hi } else { x });
            d.push(defect);
            dd.push(slope);
        }
        // Guard against rounding making the last two nodes collide.
        for j in 1..n {
            assert!(xs[j] > xs[j - 1], "degenerate segment sampling");
        }
        segments.push(Segment {
            x_lo,
            x_hi,
            defect: CubicHermite::new(xs, d, dd),
        });
        breakpoints.push(x_hi);
    }
    Ok(DssState { params: *params, breakpoints, segments })
}

fn phi_inverse_guard(
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    target: f64,
    tol: &Tolerance,
) -> Result<f64, DssError> {
    invert_monotone(&phi, &dphi, (lo, hi), target, tol).map_err(DssError::InversionFailure)
}

/// Holder-ratio diagnostic r(X) = (-W(X) - X)/|X|^(1+2i) over the last
/// five segments: the extrema, a per-segment table, and the count of
/// samples excluded as degenerate (|D| below 1e-14 |X|^(1+2i)).
#[derive(Debug, Clone)]
pub struct HolderRatio {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub per_segment: Vec<(f64, f64)>,
    pub degenerate_samples: usize,
}

pub fn dss_holder_ratio(state: &DssState) -> HolderRatio {
    assert!(state.segments.len() >= 5, "need at least 5 segments");
    let exponent = 1.0 + 2.0 * state.params.i_equiv();
    let first = state.segments.len() - 5;
    let mut global_min = f64::INFINITY;
    let mut global_max = f64::NEG_INFINITY;
    let mut per_segment = Vec::new();
    let mut degenerate = 0usize;
    for idx in first..state.segments.len() {
        let mut seg_min = f64::INFINITY;
        let mut seg_max = f64::NEG_INFINITY;
        for x in state.segment_samples(idx, 128) {
            let d = state.eval_defect(x);
            let scale = x.abs().powf(exponent);
            if d.abs() < 1e-14 * scale {
                degenerate += 1;
                continue;
            }
            let r = d / scale;
            seg_min = seg_min.min(r);
            seg_max = seg_max.max(r);
        }
        global_min = global_min.min(seg_min);
        global_max = global_max.max(seg_max);
        per_segment.push((seg_min, seg_max));
    }
    HolderRatio {
        ratio_min: global_min,
        ratio_max: global_max,
        per_segment,
        degenerate_samples: degenerate,
    }
}
