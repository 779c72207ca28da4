//! The renormalized 2-D equation in (X, Z) coordinates,
//!   w_s - w/2 + (3/2) X w_X + (Z/2k) w_Z + w w_X - e^(-(k-1)s/k) w_ZZ = 0,
//! evolved from the glued profile Q by a split scheme: semi-Lagrangian
//! transport in X (RK2 backward trace, monotone cubic interpolation),
//! exact semi-Lagrangian drift in Z, Crank-Nicolson for the decaying
//! diffusion, and the exact e^(ds/2) amplitude factor. The trace pair
//! (f, g) evolves in lockstep through the 1-D module.
//!
//! The X grid is sinh-stretched: the profile varies on scale
//! (1+Z^(2k))^(3/2) which spans [1, ~4e3] across rows, so a uniform grid
//! cannot resolve the shock core and reach |X-tilde| = 20 at once. On the
//! stretched grid the transport displacement is a uniformly small fraction
//! of the local cell.

use crate::field::{Field2D, Symmetry};
use crate::numerics::Grid1D;
use crate::parabolic1d::{
    extract_modulation, BcPolicy, FlatInit, FlatRunConfig, ParabolicState, Scheme, StepError,
    Stepper,
};
use crate::profiles::{
    approx_profile_f, f_k, glued_q, theta, CutoffSpec, SelfSimilarFrame,
};
use crate::spectral::{weighted_norm, SpectralError, WeightSpec};
use std::fmt;

/// Configuration of a renormalized 2-D run.
#[derive(Debug, Clone, Copy)]
pub struct Run2DConfig {
    pub k: u32,
    pub s0: f64,
    pub s_end: f64,
    pub nx: usize,
    pub nz: usize,
    pub z_max: f64,
    pub ds: f64,
    /// Target grid spacing at the axis; the sinh stretch is solved for it.
    pub x_core_spacing: f64,
    pub cutoff_d: f64,
    /// Amplitude of the odd, order-5-vanishing initial w perturbation.
    pub w_perturbation: f64,
    /// Exterior-tail amplitude for the companion f (decay rate 1/(4k)).
    pub companion_tail: f64,
    /// Even g-shape perturbation handled inside the companion init.
    pub cadence: f64,
    /// Allowed perturbation weighted norm as a fraction of e^(-s0/2).
    pub init_norm_fraction: f64,
    /// |X-tilde| cut for the eps-norm integrand (truncation recorded).
    pub eps_mask_xt: f64,
}

impl Run2DConfig {
    /// The desk-scale grid: 513 x 257 over |X-tilde| <= 20, |Z| <= 4.
    pub fn standard(k: u32, s0: f64, s_end: f64) -> Self {
        Run2DConfig {
            k,
            s0,
            s_end,
            nx: 513,
            nz: 257,
            z_max: 4.0,
            ds: 5e-3,
            x_core_spacing: 0.045,
            cutoff_d: 0.1,
            w_perturbation: 1.2e-3,
            companion_tail: 0.02,
            cadence: 0.5,
            init_norm_fraction: 1.0,
            eps_mask_xt: 16.0,
        }
    }

    /// Streamwise half-width 20 (1 + z_max^(2k))^(3/2).
    pub fn x_half_width(&self) -> f64 {
        20.0 * (1.0 + self.z_max.powi(2 * self.k as i32)).powf(1.5)
    }

    /// Sinh-stretched X grid hitting the requested core spacing.
    pub fn xgrid(&self) -> Grid1D {
        let l = self.x_half_width();
        let m = (self.nx - 1) as f64 / 2.0;
        // Solve l * (c/m) / sinh(c) = h0 for the stretch c by bisection.
        let target = self.x_core_spacing;
        let f = |c: f64| l * c / (m * c.sinh()) - target;
        let (mut lo, mut hi) = (1e-3, 30.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Grid1D::sinh_stretched(l, self.nx, 0.5 * (lo + hi))
    }

    pub fn zgrid(&self) -> Grid1D {
        Grid1D::uniform(-self.z_max, self.z_max, self.nz)
    }
}

/// Evolving renormalized state: w over (X, Z), odd in X and even in Z,
/// plus the trace companion marching in the same s.
pub struct Renorm2DState {
    pub s: f64,
    pub w: Field2D,
    pub frame: SelfSimilarFrame,
    pub companion: ParabolicState,
    pub cutoff: CutoffSpec,
    pub ds: f64,
    pub healthy: bool,
}

#[derive(Debug)]
pub enum Step2DError {
    /// A backward trace left its one-cell-extended neighbourhood.
    CharacteristicEscape { x: f64, z: f64, departure: f64 },
    /// Companion step failed.
    Companion(StepError),
    /// Initial perturbation fails the order-4 axis vanishing check.
    AxisOrderViolation { z: f64, a1: f64, a3: f64, a5: f64 },
    /// Initial perturbation weighted norm above the configured budget.
    PerturbationTooLarge { norm: f64, budget: f64 },
    Spectral(SpectralError),
}

impl fmt::Display for Step2DError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step2DError::CharacteristicEscape { x, z, departure } => write!(
                f,
                "backward trace from (X={x}, Z={z}) reached {departure}, outside the one-cell guard"
            ),
            Step2DError::Companion(e) => write!(f, "companion step: {e}"),
            Step2DError::AxisOrderViolation { z, a1, a3, a5 } => write!(
                f,
                "perturbation at Z={z} has axis expansion a1={a1:e}, a3={a3:e} (a5={a5:e}); \
                 order-4 vanishing required"
            ),
            Step2DError::PerturbationTooLarge { norm, budget } => {
                write!(f, "perturbation weighted norm {norm:e} exceeds budget {budget:e}")
            }
            Step2DError::Spectral(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Step2DError {}

/// Node-derivative weights from the local quartic through a 5-node window,
/// precomputed once per grid. High-order slopes matter here: the O(h^2)
/// Fritsch-Carlson estimate leaves a fixed interpolation bias near the
/// shock core whose trace content the e^s instability amplifies.
struct SlopeKit {
    start: Vec<usize>,
    weights: Vec<[f64; 5]>,
}

impl SlopeKit {
    fn new(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 5);
        let mut start = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let s = i.saturating_sub(2).min(n - 5);
            // Derivative of the Lagrange basis at x_i.
            let mut w = [0.0f64; 5];
            let x = xs[i];
            for m in 0..5 {
                let xm = xs[s + m];
                let mut denom = 1.0;
                for j in 0..5 {
                    if j != m {
                        denom *= xm - xs[s + j];
                    }
                }
                // d/dx prod_{j!=m} (x - x_j) evaluated at x.
                let mut num = 0.0;
                for jd in 0..5 {
                    if jd == m {
                        continue;
                    }
                    let mut term = 1.0;
                    for j in 0..5 {
                        if j != m && j != jd {
                            term *= x - xs[s + j];
                        }
                    }
                    num += term;
                }
                w[m] = num / denom;
            }
            start.push(s);
            weights.push(w);
        }
        SlopeKit { start, weights }
    }

    /// High-order slopes clamped into the monotonicity region
    /// [0, 3 min(adjacent secants)] so the Hermite never overshoots.
    fn slopes(&self, xs: &[f64], ys: &[f64], out: &mut [f64]) {
        let n = xs.len();
        for i in 0..n {
            let s = self.start[i];
            let w = &self.weights[i];
            out[i] = w[0] * ys[s]
                + w[1] * ys[s + 1]
                + w[2] * ys[s + 2]
                + w[3] * ys[s + 3]
                + w[4] * ys[s + 4];
        }
        let sec = |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        for i in 0..n {
            let left = if i == 0 { sec(0) } else { sec(i - 1) };
            let right = if i == n - 1 { sec(n - 2) } else { sec(i) };
            if left * right <= 0.0 && i > 0 && i < n - 1 {
                out[i] = 0.0;
            } else {
                let bound = 3.0 * left.abs().min(right.abs());
                let sign = if (left + right) >= 0.0 { 1.0 } else { -1.0 };
                if out[i] * sign < 0.0 {
                    out[i] = 0.0;
                } else if out[i].abs() > bound {
                    out[i] = sign * bound;
                }
            }
        }
    }
}

/// Hermite evaluation on segment `i` of tabulated (xs, ys, slopes).
#[inline]
fn hermite_segment(xs: &[f64], ys: &[f64], slopes: &[f64], i: usize, x: f64) -> f64 {
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
        + (t3 - 2.0 * t2 + t) * h * slopes[i]
        + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
        + (t3 - t2) * h * slopes[i + 1]
}

/// Locates the cell of x starting from a hint index; the semi-Lagrangian
/// departures stay within a cell of the origin node, so this is O(1).
#[inline]
fn locate_from_hint(xs: &[f64], hint: usize, x: f64) -> usize {
    let n = xs.len();
    let mut i = hint.min(n - 2);
    while i > 0 && x < xs[i] {
        i -= 1;
    }
    while i + 2 < n && x >= xs[i + 1] {
        i += 1;
    }
    i
}

/// Scratch buffers for the split step.
pub struct Stepper2D {
    xs: Vec<f64>,
    zs: Vec<f64>,
    x_kit: SlopeKit,
    z_kit: SlopeKit,
    slopes: Vec<f64>,
    scratch: Vec<f64>,
    column: Vec<f64>,
    col_slopes: Vec<f64>,
    rhs: Vec<f64>,
    cprime: Vec<f64>,
    inv_pivots: Vec<f64>,
    companion_stepper: Stepper,
    companion_substeps: usize,
}

impl Stepper2D {
    pub fn new(state: &Renorm2DState) -> Self {
        let nx = state.w.xgrid.n();
        let nz = state.w.zgrid.n();
        let n = nx.max(nz);
        let ds_c = state.companion.scheme.ds;
        let substeps = (state.ds / ds_c).round() as usize;
        assert!(
            (substeps as f64 * ds_c - state.ds).abs() < 1e-12,
            "companion ds must divide the 2-D ds"
        );
        Stepper2D {
            x_kit: SlopeKit::new(state.w.xgrid.nodes()),
            z_kit: SlopeKit::new(state.w.zgrid.nodes()),
            xs: state.w.xgrid.nodes().to_vec(),
            zs: state.w.zgrid.nodes().to_vec(),
            slopes: vec![0.0; n],
            scratch: vec![0.0; n],
            column: vec![0.0; n],
            col_slopes: vec![0.0; n],
            rhs: vec![0.0; n],
            cprime: vec![0.0; n],
            inv_pivots: vec![0.0; n],
            companion_stepper: Stepper::new(&state.companion),
            companion_substeps: substeps,
        }
    }

    /// One full step, in place. The split is symmetrized (half-diffusion,
    /// half-drift and half-amplitude around the transport) so the per-step
    /// splitting error is O(ds^3); a first-order split feeds the e^s
    /// trace instability and visibly detunes the solution from its
    /// companion by s0 + 4.
    pub fn advance(&mut self, state: &mut Renorm2DState) -> Result<(), Step2DError> {
        let ds = state.ds;
        let s_new = state.s + ds;
        let half_amp = (0.25 * ds).exp();

        // First diffusion half pins the faces to Q at midstep, pre-divided
        // by the amplitude still to come.
        self.diffusion(state, 0.5 * ds, state.s + 0.5 * ds, (-0.5 * ds).exp())?;
        self.drift_z(state, 0.5 * ds);
        for v in state.w.values.iter_mut() {
            *v *= half_amp;
        }
        self.transport_x(state, ds)?;
        for v in state.w.values.iter_mut() {
            *v *= half_amp;
        }
        self.drift_z(state, 0.5 * ds);
        self.diffusion(state, 0.5 * ds, s_new, 1.0)?;

        // companion traces advance with matching total ds.
        for _ in 0..self.companion_substeps {
            self.companion_stepper
                .advance(&mut state.companion)
                .map_err(Step2DError::Companion)?;
        }
        state.s = s_new;
        debug_assert!((state.companion.s - state.s).abs() < 1e-9);

        state.w.resymmetrize();
        Ok(())
    }

    fn transport_x(&mut self, state: &mut Renorm2DState, ds: f64) -> Result<(), Step2DError> {
        let nx = state.w.xgrid.n();
        let nz = state.w.zgrid.n();
        for jz in 0..nz {
            let z = self.zs[jz];
            self.scratch[..nx].copy_from_slice(state.w.row(jz));
            self.x_kit.slopes(&self.xs, &self.scratch[..nx], &mut self.slopes[..nx]);
            let xs = &self.xs;
            for ix in 0..nx {
                let x = xs[ix];
                // The transport sub-operator is self-advection: w is
                // constant along dx/dt = (3/2)x + c with c = w at the foot,
                // so the backward trace solves the closed-form map
                // x = (xi + c/1.5) e^(3 ds/2) - c/1.5 self-consistently.
                let decay = (-1.5 * ds).exp();
                let mut c = self.scratch[ix];
                let mut x_dep = x;
                for _ in 0..3 {
                    x_dep = (x + c / 1.5) * decay - c / 1.5;
                    let x_c = x_dep.clamp(xs[0], xs[nx - 1]);
                    let i_dep = locate_from_hint(xs, ix.saturating_sub(1), x_c);
                    c = hermite_segment(xs, &self.scratch[..nx], &self.slopes[..nx], i_dep, x_c);
                }
                x_dep = (x + c / 1.5) * decay - c / 1.5;
                // One-cell-extended guard around the origin node.
                let lo = if ix >= 2 { xs[ix - 2] } else { xs[0] - (xs[1] - xs[0]) };
                let hi = if ix + 2 < nx {
                    xs[ix + 2]
                } else {
                    xs[nx - 1] + (xs[nx - 1] - xs[nx - 2])
                };
                if !(lo..=hi).contains(&x_dep) {
                    return Err(Step2DError::CharacteristicEscape { x, z, departure: x_dep });
                }
                let x_eval = x_dep.clamp(xs[0], xs[nx - 1]);
                let i_dep = locate_from_hint(xs, ix.saturating_sub(1), x_eval);
                let w_new =
                    hermite_segment(xs, &self.scratch[..nx], &self.slopes[..nx], i_dep, x_eval);
                *state.w.at_mut(ix, jz) = w_new;
            }
        }
        Ok(())
    }

    fn drift_z(&mut self, state: &mut Renorm2DState, dt: f64) {
        let k = state.frame.k as f64;
        let shrink = (-dt / (2.0 * k)).exp();
        let nx = state.w.xgrid.n();
        let nz = state.w.zgrid.n();
        for ix in 0..nx {
            for jz in 0..nz {
                self.column[jz] = state.w.at(ix, jz);
            }
            self.z_kit.slopes(&self.zs, &self.column[..nz], &mut self.col_slopes[..nz]);
            for jz in 0..nz {
                let z_dep = self.zs[jz] * shrink;
                let i = locate_from_hint(&self.zs, jz.saturating_sub(1), z_dep);
                self.scratch[jz] =
                    hermite_segment(&self.zs, &self.column[..nz], &self.col_slopes[..nz], i, z_dep);
            }
            for jz in 0..nz {
                *state.w.at_mut(ix, jz) = self.scratch[jz];
            }
        }
    }

    fn diffusion(
        &mut self,
        state: &mut Renorm2DState,
        dt: f64,
        s_bc: f64,
        bc_prescale: f64,
    ) -> Result<(), Step2DError> {
        let k = state.frame.k as f64;
        let nu = (-(k - 1.0) / k * s_bc).exp();
        let hz = state.w.zgrid.step();
        let r = 0.5 * nu * dt / (hz * hz);
        let nx = state.w.xgrid.n();
        let nz = state.w.zgrid.n();
        // Prefactor the constant tridiagonal (Dirichlet rows at both faces).
        self.inv_pivots[0] = 1.0;
        self.cprime[0] = 0.0;
        for j in 1..nz - 1 {
            let pivot = 1.0 + 2.0 * r - (-r) * self.cprime[j - 1];
            self.inv_pivots[j] = 1.0 / pivot;
            self.cprime[j] = -r / pivot;
        }
        self.inv_pivots[nz - 1] = 1.0;

        // Boundary values: Q at the requested time, pre-scaled to absorb
        // the amplitude factors still to be applied this step.
        let amp_inv = bc_prescale;
        let fs = state.companion.f_sampler();
        let gs = state.companion.g_sampler();
        let frame = state.frame;
        let cutoff = state.cutoff;
        let q_face = move |x: f64, z: f64| -> f64 {
            let y = frame.y_of_z(s_bc, z).abs();
            let f = fs.eval(y);
            let g = gs.eval(y);
            glued_q(frame.i, frame.k, s_bc, &cutoff, f, g, x, y, 0).unwrap_or(0.0)
        };
        let (z_lo, z_hi) = (self.zs[0], self.zs[nz - 1]);

        for ix in 0..nx {
            let x = self.xs[ix];
            for jz in 0..nz {
                self.column[jz] = state.w.at(ix, jz);
            }
            self.rhs[0] = q_face(x, z_lo) * amp_inv;
            for j in 1..nz - 1 {
                self.rhs[j] = self.column[j]
                    + r * (self.column[j - 1] - 2.0 * self.column[j] + self.column[j + 1]);
            }
            self.rhs[nz - 1] = q_face(x, z_hi) * amp_inv;
            self.scratch[0] = self.rhs[0];
            for j in 1..nz - 1 {
                self.scratch[j] = (self.rhs[j] + r * self.scratch[j - 1]) * self.inv_pivots[j];
            }
            self.scratch[nz - 1] = self.rhs[nz - 1];
            for j in (0..nz - 1).rev() {
                let v = self.scratch[j] - self.cprime[j] * self.scratch[j + 1];
                self.scratch[j] = v;
            }
            for jz in 0..nz {
                *state.w.at_mut(ix, jz) = self.scratch[jz];
            }
        }
        Ok(())
    }
}

/// Odd-basis axis fit: coefficients (a1, a3, a5, a7) of the expansion
/// w = a1 X + a3 X^3 + a5 X^5 + a7 X^7 through the first four positive
/// nodes. Returns the functional weights so the fit is a dot product.
pub struct AxisFit {
    /// Indices of the sampled nodes (positive side).
    pub nodes: [usize; 4],
    /// Row weights: a_m = sum_i weights[m][i] * w(x_i).
    pub weights: [[f64; 4]; 4],
    pub xs: [f64; 4],
}

impl AxisFit {
    pub fn new(xgrid: &Grid1D) -> Self {
        Self::with_offset(xgrid, 0)
    }

    /// Same fit through nodes shifted outward by `offset`; used as an
    /// independent stencil for defect measurements.
    pub fn with_offset(xgrid: &Grid1D, offset: usize) -> Self {
        let nx = xgrid.n();
        let axis = nx / 2; // odd nx with the origin central
        assert_eq!(xgrid.nodes()[axis], 0.0, "axis node required");
        let nodes = [
            axis + 1 + offset,
            axis + 2 + offset,
            axis + 3 + offset,
            axis + 4 + offset,
        ];
        let xs = [
            xgrid.nodes()[nodes[0]],
            xgrid.nodes()[nodes[1]],
            xgrid.nodes()[nodes[2]],
            xgrid.nodes()[nodes[3]],
        ];
        // Invert the 4x4 Vandermonde in the odd powers.
        let mut m = [[0.0f64; 8]; 4];
        for (i, &x) in xs.iter().enumerate() {
            m[i][0] = x;
            m[i][1] = x.powi(3);
            m[i][2] = x.powi(5);
            m[i][3] = x.powi(7);
            m[i][4 + i] = 1.0;
        }
        // Gauss-Jordan.
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
                .unwrap();
            m.swap(col, piv);
            let p = m[col][col];
            for v in m[col].iter_mut() {
                *v /= p;
            }
            for row in 0..4 {
                if row != col {
                    let factor = m[row][col];
                    for c in 0..8 {
                        m[row][c] -= factor * m[col][c];
                    }
                }
            }
        }
        let mut weights = [[0.0f64; 4]; 4];
        for a in 0..4 {
            for i in 0..4 {
                weights[a][i] = m[a][4 + i];
            }
        }
        AxisFit { nodes, weights, xs }
    }

    /// Fits (a1, a3, a5, a7) for one Z row of a field.
    pub fn fit_row(&self, field: &Field2D, jz: usize) -> [f64; 4] {
        let vals = [
            field.at(self.nodes[0], jz),
            field.at(self.nodes[1], jz),
            field.at(self.nodes[2], jz),
            field.at(self.nodes[3], jz),
        ];
        let mut out = [0.0; 4];
        for a in 0..4 {
            out[a] = (0..4).map(|i| self.weights[a][i] * vals[i]).sum();
        }
        out
    }

    pub fn fit_values(&self, vals: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for a in 0..4 {
            out[a] = (0..4).map(|i| self.weights[a][i] * vals[i]).sum();
        }
        out
    }
}

/// Measured axis traces: f = -d_X w(0,.), g = d3_X w(0,.) via the odd fit.
pub fn trace_derivatives(state: &Renorm2DState) -> (Vec<f64>, Vec<f64>) {
    let fit = AxisFit::new(&state.w.xgrid);
    let nz = state.w.zgrid.n();
    let mut f = Vec::with_capacity(nz);
    let mut g = Vec::with_capacity(nz);
    for jz in 0..nz {
        let a = fit.fit_row(&state.w, jz);
        f.push(-a[0]);
        g.push(6.0 * a[1]);
    }
    (f, g)
}

/// Builds the initial state w(s0) = Q(s0) + perturbation with
/// (f, g) = (F[a] + exterior tail, slaved g) from the companion init.
pub fn init_from_profiles(cfg: &Run2DConfig) -> Result<Renorm2DState, Step2DError> {
    let k = cfg.k;
    let frame = SelfSimilarFrame::flat(k);
    let xgrid = cfg.xgrid();
    let zgrid = cfg.zgrid();
    let cutoff = CutoffSpec::new(cfg.cutoff_d);

    // Companion on [0, L_Y] sized for the Z window at s_end.
    let l_y = 1.05 * cfg.z_max * ((k as f64 - 1.0) / (2.0 * k as f64) * cfg.s_end).exp();
    let mut companion_cfg = FlatRunConfig::standard(k, cfg.s0, cfg.s_end, if cfg.companion_tail != 0.0 {
        FlatInit::TailPerturbed { a0: 1.0, delta: cfg.companion_tail }
    } else {
        FlatInit::ApproxF { a0: 1.0 }
    });
    companion_cfg.l = l_y.max(20.0);
    companion_cfg.n = (companion_cfg.l / 0.0625).ceil() as usize + 1;
    companion_cfg.ds = cfg.ds / (cfg.ds / (0.45 * 0.0625 / (0.5 * companion_cfg.l)).min(2.5e-4)).ceil();
    let companion = build_companion(&companion_cfg, frame);

    let fs = companion.f_sampler();
    let gs = companion.g_sampler();
    // Perturbation: odd in X, even in Z, vanishing to order 5 at the axis.
    let beta = |z: f64| (1.0 + z.powi(2 * k as i32)).powf(1.5);
    let pert = |x: f64, z: f64| {
        let xt = x / beta(z);
        cfg.w_perturbation
            * xt.powi(5)
            * (-xt.powi(4)).exp()
            * crate::profiles::chi(z)
            * crate::profiles::chi(xt / 4.0)
    };
    let mut w = Field2D::from_fn(xgrid.clone(), zgrid.clone(), Symmetry::Odd, Symmetry::Even, |x, z| {
        let y = frame.y_of_z(cfg.s0, z).abs();
        let f = fs.eval(y);
        let g = gs.eval(y);
        glued_q(frame.i, k, cfg.s0, &cutoff, f, g, x, y, 0).unwrap_or(0.0) + pert(x, z)
    });
    w.resymmetrize();

    // Axis-order check on the perturbation: the fitted X and X^3 content at
    // the stencil scale must be a small fraction of the perturbation there
    // (an exact X^5 shape leaves only stencil aliasing, well under 5%).
    let fit = AxisFit::new(&xgrid);
    let pert_field =
        Field2D::from_fn(xgrid.clone(), zgrid.clone(), Symmetry::Odd, Symmetry::Even, pert);
    let x4 = fit.xs[3];
    for jz in 0..zgrid.n() {
        let a = fit.fit_row(&pert_field, jz);
        let magnitude = pert_field.at(fit.nodes[3], jz).abs() + 1e-300;
        if magnitude < 1e-14 {
            continue; // nothing to check where the perturbation vanishes
        }
        if (a[0] * x4).abs() > 0.05 * magnitude || (a[1] * x4.powi(3)).abs() > 0.2 * magnitude {
            return Err(Step2DError::AxisOrderViolation {
                z: zgrid.nodes()[jz],
                a1: a[0],
                a3: a[1],
                a5: a[2],
            });
        }
    }
    // Size check against the bootstrap-style budget.
    let spec = WeightSpec::standard(k);
    let norm = weighted_norm(&pert_field, cfg.s0, k, &spec).map_err(Step2DError::Spectral)?;
    let budget = cfg.init_norm_fraction * (-0.5 * cfg.s0).exp();
    if norm.value > budget {
        return Err(Step2DError::PerturbationTooLarge { norm: norm.value, budget });
    }

    Ok(Renorm2DState {
        s: cfg.s0,
        w,
        frame,
        companion,
        cutoff,
        ds: cfg.ds,
        healthy: true,
    })
}

fn build_companion(cfg: &FlatRunConfig, frame: SelfSimilarFrame) -> ParabolicState {
    let grid = Grid1D::uniform(0.0, cfg.l, cfg.n);
    let k = cfg.k;
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| {
            let base = approx_profile_f(k, 1.0, cfg.s0, y);
            match cfg.init {
                FlatInit::TailPerturbed { delta, .. } => {
                    let z = frame.z_of_y(cfg.s0, y);
                    base + delta * z.abs().powf(2.0 * k as f64 + 0.5) * f_k(k, 1.0, z, 0).powi(2)
                }
                _ => base,
            }
        })
        .collect();
    let g: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&f)
        .map(|(&y, &fv)| {
            let z = frame.z_of_y(cfg.s0, y);
            let fk = f_k(k, 1.0, z, 0);
            6.0 * fv.powi(4) * (1.0 + 0.01 * z * z * fk * fk)
        })
        .collect();
    ParabolicState::new(
        cfg.s0,
        grid,
        f,
        g,
        frame,
        Scheme::new(cfg.ds, BcPolicy::FlatProfile),
    )
}

/// One sample of the glued-profile decay study: s and the grid sup of
/// |Q - Theta[a,b]| / |X| along a 1-D companion trajectory.
#[derive(Debug, Clone, Copy)]
pub struct QThetaSample {
    pub s: f64,
    pub sup_over_x: f64,
    pub gauge_a: f64,
    pub gauge_b: f64,
}

/// Measures the decay of |Q - Theta|/|X| along the companion (f, g)
/// trajectory: the trace pair is evolved by the 1-D module (with the slow
/// exterior tail seeded and the growing direction tuned away) and Q is
/// assembled from it at each snapshot. The profile transient of F[a]
/// dominates this quantity until roughly s0 + 7, so useful slopes come
/// from the late window where the exterior tail (decay rate 1/(4k)) is
/// what remains.
pub fn q_theta_decay_study(
    k: u32,
    s0: f64,
    s_end: f64,
    tail_delta: f64,
    cadence: f64,
) -> Result<Vec<QThetaSample>, StepError> {
    use crate::parabolic1d::{run_flat_tuned, Stepper};
    let mut cfg = FlatRunConfig::standard(k, s0, s_end, FlatInit::TailPerturbed {
        a0: 1.0,
        delta: tail_delta,
    });
    cfg.cadence = s_end - s0;
    let tuned = run_flat_tuned(&cfg)?;
    cfg.h0_offset = tuned.h0_offset;

    // Re-march with the tuned offset, sampling Q - Theta at the cadence.
    let frame = SelfSimilarFrame::flat(k);
    let mut state = rebuild_flat_state(&cfg, frame);
    let mut stepper = Stepper::new(&state);
    let mut gauge_a = 1.0;
    let mut samples = vec![q_theta_sample(&state, &mut gauge_a)];
    let mut next = s0 + cadence;
    while state.s < s_end - 1e-9 {
        stepper.advance(&mut state).map_err(|e| e)?;
        if state.s >= next - 1e-9 || state.s >= s_end - 1e-9 {
            samples.push(q_theta_sample(&state, &mut gauge_a));
            next += cadence;
        }
    }
    Ok(samples)
}

fn rebuild_flat_state(cfg: &FlatRunConfig, frame: SelfSimilarFrame) -> ParabolicState {
    let grid = Grid1D::uniform(0.0, cfg.l, cfg.n);
    let k = cfg.k;
    let h0 = crate::profiles::hermite(0, 0.0, 0).unwrap();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| {
            let base = approx_profile_f(k, 1.0, cfg.s0, y) + cfg.h0_offset * h0;
            match cfg.init {
                FlatInit::TailPerturbed { delta, .. } => {
                    let z = frame.z_of_y(cfg.s0, y);
                    base + delta * z.abs().powf(2.0 * k as f64 + 0.5) * f_k(k, 1.0, z, 0).powi(2)
                }
                _ => base,
            }
        })
        .collect();
    let g: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&f)
        .map(|(&y, &fv)| {
            let z = frame.z_of_y(cfg.s0, y);
            let fk = f_k(k, 1.0, z, 0);
            6.0 * fv.powi(4) * (1.0 + 0.01 * z * z * fk * fk)
        })
        .collect();
    ParabolicState::new(cfg.s0, grid, f, g, frame, Scheme::new(cfg.ds, BcPolicy::FlatProfile))
}

fn q_theta_sample(state: &ParabolicState, gauge_a: &mut f64) -> QThetaSample {
    let k = state.frame.k;
    let s = state.s;
    let cutoff = CutoffSpec::default();
    if let Ok(m) = extract_modulation(state, *gauge_a) {
        *gauge_a = m.a;
    }
    let a_fit = *gauge_a;
    let b_fit = (state.g[0] / (6.0 * state.f[0].powi(4))).sqrt().sqrt();
    let fs = state.f_sampler();
    let gs = state.g_sampler();
    let mut sup = 0.0f64;
    // Log-spaced X-tilde sample crossed with a Z window around the
    // maximizer region; the ratio peaks near the axis at moderate Z.
    for iz in 0..=80 {
        let z = -2.5 + 5.0 * iz as f64 / 80.0;
        let beta = (1.0 + z.powi(2 * k as i32)).powf(1.5);
        let y = state.frame.y_of_z(s, z).abs();
        if y > state.grid.upper {
            continue;
        }
        let (f, g) = (fs.eval(y), gs.eval(y));
        let th_row = |x: f64| theta(1, k, a_fit, b_fit, x, z, (0, 0));
        for ix in 0..=40 {
            let xt = 10f64.powf(-2.0 + 3.3 * ix as f64 / 40.0);
            let x = xt * beta;
            if let Ok(q) = glued_q(1, k, s, &cutoff, f, g, x, y, 0) {
                sup = sup.max(((q - th_row(x)) / x).abs());
            }
        }
    }
    QThetaSample { s, sup_over_x: sup, gauge_a: a_fit, gauge_b: b_fit }
}

/// Per-snapshot convergence diagnostics.
#[derive(Debug, Clone)]
pub struct Snapshot2D {
    pub s: f64,
    /// sup over {|X-tilde| <= 2, |Z| <= 2} of |w - Theta|.
    pub sup_w_theta: f64,
    /// Same window, |d_X (w - Theta)|.
    pub sup_dxw_theta: f64,
    /// Weighted 2q-norm of eps = w - Q(f_meas, g_meas).
    pub eps_norm: f64,
    /// Axis defects |d_X eps(0)| and |d3_X eps(0)| from the odd fit.
    pub axis_defect_j1: f64,
    pub axis_defect_j3: f64,
    /// Stencil-error floor estimates for the same quantities (the fit
    /// applied to the analytic Q against its known derivatives).
    pub stencil_floor_j1: f64,
    pub stencil_floor_j3: f64,
    /// sup over the grid of |Q - Theta| / |X| on the companion traces.
    pub sup_q_theta_over_x: f64,
    /// sup over |Z| <= 2 of |f_meas - f_companion|.
    pub trace_agreement: f64,
}

pub struct Run2DResult {
    pub snapshots: Vec<Snapshot2D>,
    pub state: Renorm2DState,
}

/// Evolves to s_end, recording diagnostics at the cadence.
pub fn run_2d(cfg: &Run2DConfig) -> Result<Run2DResult, Step2DError> {
    let mut state = init_from_profiles(cfg)?;
    let mut stepper = Stepper2D::new(&state);
    let mut gauge_a = 1.0;
    let mut snapshots = vec![measure(&state, &mut gauge_a, cfg.eps_mask_xt)?];
    let mut next_snapshot = cfg.s0 + cfg.cadence;
    while state.s < cfg.s_end - 1e-9 {
        stepper.advance(&mut state)?;
        if state.s >= next_snapshot - 1e-9 || state.s >= cfg.s_end - 1e-9 {
            snapshots.push(measure(&state, &mut gauge_a, cfg.eps_mask_xt)?);
            next_snapshot += cfg.cadence;
        }
    }
    Ok(Run2DResult { snapshots, state })
}

/// Builds the glued profile field from given per-row traces.
fn q_field(state: &Renorm2DState, f_of_row: &[f64], g_of_row: &[f64]) -> Field2D {
    let frame = state.frame;
    let s = state.s;
    let nx = state.w.xgrid.n();
    let nz = state.w.zgrid.n();
    let mut values = Vec::with_capacity(nx * nz);
    for jz in 0..nz {
        let z = state.w.zgrid.nodes()[jz];
        let y = frame.y_of_z(s, z).abs();
        let (f, g) = (f_of_row[jz], g_of_row[jz]);
        for ix in 0..nx {
            let x = state.w.xgrid.nodes()[ix];
            values.push(glued_q(frame.i, frame.k, s, &state.cutoff, f, g, x, y, 0).unwrap_or(0.0));
        }
    }
    Field2D::new(
        state.w.xgrid.clone(),
        state.w.zgrid.clone(),
        values,
        Symmetry::Odd,
        Symmetry::Even,
    )
}

fn measure(state: &Renorm2DState, gauge_a: &mut f64, eps_mask_xt: f64) -> Result<Snapshot2D, Step2DError> {
    let k = state.frame.k;
    let s = state.s;
    let nx = state.w.xgrid.n();
    let nz = state.w.zgrid.n();
    let xs = state.w.xgrid.nodes();
    let zs = state.w.zgrid.nodes();

    // Measured traces and the decomposition profile built from them.
    let (f_meas, g_meas) = trace_derivatives(state);
    let q_meas = q_field(state, &f_meas, &g_meas);

    // Companion traces for Q - Theta and trace agreement.
    let fs = state.companion.f_sampler();
    let gs = state.companion.g_sampler();
    let f_comp: Vec<f64> = zs.iter().map(|&z| fs.eval(state.frame.y_of_z(s, z).abs())).collect();
    let g_comp: Vec<f64> = zs.iter().map(|&z| gs.eval(state.frame.y_of_z(s, z).abs())).collect();
    let q_comp = q_field(state, &f_comp, &g_comp);

    // Gauge of the limit profile: the convergence statement carries the
    // solution's own scale pair (a, b), so the comparison profile is
    // Theta[a, b] with a fitted from the companion modulation and
    // b^2 = g(0)/(6 f(0)^4) from the measured plateau.
    if let Ok(m) = extract_modulation(&state.companion, *gauge_a) {
        *gauge_a = m.a;
    }
    let a_fit = *gauge_a;
    let b_fit = (state.companion.g[0] / (6.0 * state.companion.f[0].powi(4))).sqrt().sqrt();

    let mut sup_w_theta = 0.0f64;
    let mut sup_dxw_theta = 0.0f64;
    let mut sup_q_theta_over_x = 0.0f64;
    for jz in 0..nz {
        let z = zs[jz];
        let beta = (1.0 + z.powi(2 * k as i32)).powf(1.5);
        let row = state.w.row(jz);
        for ix in 0..nx {
            let x = xs[ix];
            let th = theta(1, k, a_fit, b_fit, x, z, (0, 0));
            if x != 0.0 {
                let q = q_comp.at(ix, jz);
                sup_q_theta_over_x = sup_q_theta_over_x.max(((q - th) / x).abs());
            }
            if z.abs() <= 2.0 && (x / beta).abs() <= 2.0 {
                sup_w_theta = sup_w_theta.max((row[ix] - th).abs());
                let dxw = crate::spectral::nonuniform_dx(xs, row, ix, 1);
                let dth = theta(1, k, a_fit, b_fit, x, z, (1, 0));
                sup_dxw_theta = sup_dxw_theta.max((dxw - dth).abs());
            }
        }
    }

    // eps = w - Q(measured traces): weighted norm over the interior (a
    // face margin is excluded; the decomposition degrades within a few
    // cells of the truncation boundary) and axis defects.
    let mut eps = state.w.clone();
    for (v, q) in eps.values.iter_mut().zip(q_meas.values.iter()) {
        *v -= q;
    }
    let z_margin = zs[nz - 1] - 0.75;
    // Absolute noise floor: where |eps| sits at rounding level the ratio
    // eps/weight is meaningless (the weight underflows near the axis at
    // large |Z| faster than the noise does).
    let noise_floor = 1e-14 * state.w.max_abs();
    for jz in 0..nz {
        let z = zs[jz];
        let beta = (1.0 + z.powi(2 * k as i32)).powf(1.5);
        for ix in 0..nx {
            let masked = z.abs() > z_margin || (xs[ix] / beta).abs() > eps_mask_xt;
            if masked || eps.at(ix, jz).abs() < noise_floor {
                *eps.at_mut(ix, jz) = 0.0;
            }
        }
    }
    let spec = WeightSpec::standard(k);
    let eps_norm = weighted_norm(&eps, s, k, &spec)
        .map(|n| n.value)
        .unwrap_or(f64::NAN);

    // Axis defects through an independent stencil (offset nodes), so the
    // check is not the tautology "fit minus itself": Lemma-15 content is
    // that a second stencil still sees only its own truncation error.
    let fit2 = AxisFit::with_offset(&state.w.xgrid, 1);
    let mut defect1 = 0.0f64;
    let mut defect3 = 0.0f64;
    let mut floor1 = 0.0f64;
    let mut floor3 = 0.0f64;
    for jz in 0..nz {
        let a_eps = fit2.fit_row(&eps, jz);
        defect1 = defect1.max(a_eps[0].abs());
        defect3 = defect3.max((6.0 * a_eps[1]).abs());
        // Floor: the offset fit applied to the analytic Q against the exact
        // axis derivatives Q was built from.
        let a_q = fit2.fit_row(&q_meas, jz);
        floor1 = floor1.max((a_q[0] + f_meas[jz]).abs());
        floor3 = floor3.max((6.0 * a_q[1] - g_meas[jz]).abs());
    }

    let mut trace_agreement = 0.0f64;
    for jz in 0..nz {
        if zs[jz].abs() <= 2.0 {
            trace_agreement = trace_agreement.max((f_meas[jz] - f_comp[jz]).abs());
        }
    }

    Ok(Snapshot2D {
        s,
        sup_w_theta,
        sup_dxw_theta,
        eps_norm,
        axis_defect_j1: defect1,
        axis_defect_j3: defect3,
        stencil_floor_j1: floor1,
        stencil_floor_j3: floor3,
        sup_q_theta_over_x,
        trace_agreement,
    })
}
