//! Numerical laboratory for self-similar blow-up: Burgers shock profiles,
//! flat and stable heat-equation blow-up, the discretely self-similar
//! construction, linearized-operator spectra, and renormalized-frame PDE
//! solvers whose dynamics contract onto the analytic profiles.
//!
//! The crate is organised around the objects it computes:
//!
//! - [`numerics`]: root finding, tridiagonal solves, weighted quadrature,
//!   interpolation and finite differences shared by everything else.
//! - [`profiles`]: evaluable closed-form profile families (Psi_i, F_k,
//!   Theta, Hermite functions, approximate and glued blow-up profiles).
//! - [`dss`]: discretely self-similar shock profiles built by iterating
//!   the extension map, and their Holder-ratio diagnostics.
//! - [`spectral`]: the linearized operators, eigen-residual checks and
//!   the weighted norms used as Lyapunov diagnostics.
//! - [`burgers1d`]: inviscid Burgers by exact characteristics, shock
//!   detection and the universal rescaled-convergence measurement.
//! - [`parabolic1d`]: the coupled self-similar reaction-diffusion system
//!   for the axis traces (f, g), flat and stable regimes.
//! - [`burgers2d`]: the renormalized 2-D equation in (X, Z) coordinates,
//!   evolved from the glued profile Q.
//! - [`acceptance`]: the end-to-end verification suite.

pub mod acceptance;
pub mod burgers1d;
pub mod burgers2d;
pub mod dss;
pub mod field;
pub mod numerics;
pub mod parabolic1d;
pub mod profiles;
pub mod report;
pub mod spectral;

pub use field::{Field1D, Field2D, Symmetry};
pub use numerics::{Grid1D, Tolerance};
pub use profiles::SelfSimilarFrame;
