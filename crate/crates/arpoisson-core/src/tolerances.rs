//! Numerical thresholds shared across modules.

/// Absolute tolerance of the adaptive Runge–Kutta integrator.
pub const ODE_ATOL: f64 = 1e-12;
/// Relative tolerance of the adaptive Runge–Kutta integrator.
pub const ODE_RTOL: f64 = 1e-10;
/// Step size below which an integration is declared to have blown up.
pub const ODE_MIN_STEP: f64 = 1e-14;
/// State magnitude above which an integration is declared to have blown up.
pub const ODE_MAX_STATE: f64 = 1e12;

/// Below this `|a|` the flow quantities G, alpha and the exponential mean
/// switch to their Taylor branches.
pub const SEAM: f64 = 1e-4;

/// Radius of the tube around declared singular loci skipped by probes.
pub const PROBE_TUBE: f64 = 1e-3;
/// Number of seeded random probes per chart.
pub const PROBE_RANDOM: usize = 64;

/// Metric composability threshold for chart groupoid arrows.
pub const COMPOSABLE: f64 = 1e-9;
/// A frame counts as commuting when its largest bracket is below this.
pub const COMMUTING: f64 = 1e-9;

/// Relative singular value cutoff for minimum-norm solves.
pub const SVD_CUTOFF: f64 = 1e-10;
/// Allowed residual of the anchor factorization `rho * lambda = pi_sharp`.
pub const FACTOR_RESIDUAL: f64 = 1e-8;

/// Closedness threshold for algebroid differentials.
pub const CLOSED: f64 = 1e-8;
/// Residual gate for fitted structure functions.
pub const STRUCTURE_RESIDUAL: f64 = 1e-7;

/// Antisymmetry check on input matrices.
pub const ANTISYMMETRY: f64 = 1e-12;

/// Target residual of the `h_eps` inverse.
pub const H_INVERSE: f64 = 1e-11;
