//! Pass/fail bands used by the harness and the acceptance suite.
//!
//! Bands marked "calibrated" come from refinement runs of the default
//! schemes; the rest are fixed targets.

/// Relative drift of `H`, `M` and `E` along an exact multipeakon run.
pub const MULTIPEAKON_DRIFT: f64 = 1e-8;

/// `rhs` against central differences of `H`.
pub const HAMILTONIAN_GRADIENT: f64 = 1e-7;

/// Step for the central differences of `H`.
pub const GRADIENT_STEP: f64 = 1e-6;

/// Late-window speeds against eigenvalues, two peakons.
pub const EIGEN_SPEED_PAIR: f64 = 1e-3;

/// Late-window speeds against eigenvalues, three or more peakons.
pub const EIGEN_SPEED_MANY: f64 = 5e-3;

/// Late window is `[(1 - w) T, T]`.
pub const EIGEN_LATE_WINDOW: f64 = 0.2;

/// Calibrated: H^1 error of the mollified traveling wave is at most
/// `TRAVELING_WAVE_H1 * sqrt(dx)`.
pub const TRAVELING_WAVE_H1: f64 = 4.0;

/// Required error reduction when `dx` is halved.
pub const REFINEMENT_RATIO: f64 = 1.5;

/// Peak positions of a field run against the ODE: `k (dx + 1/n)`.
pub const CROSS_SOLVER_FACTOR: f64 = 10.0;

/// Flux residuals: `k (dt^2 + dx) E`.
pub const FLUX_FACTOR: f64 = 20.0;

/// `|Psi'''| <= Psi'/2` and the reflection identity.
pub const WEIGHT_IDENTITY: f64 = 1e-14;

/// `max(|u_x| - u) <= k dx`.
pub const CONE_FACTOR: f64 = 10.0;

/// Exact-peakon modulation center against `x0 + c t`.
pub const MODULATION_POSITION: f64 = 1e-8;

/// `|xdot - c| <= c / k`.
pub const MODULATION_SPEED_DIVISOR: f64 = 8.0;

/// Translation and amplitude invariance of `locate`.
pub const LOCATE_INVARIANCE: f64 = 1e-9;

/// Single-peakon jump ODE residual.
pub const JUMP_ODE: f64 = 1e-8;

/// Residual reduction when the stored time step is halved.
pub const JUMP_REFINEMENT_RATIO: f64 = 1.8;

/// Allowed decrease of `a(t)` from roundoff.
pub const JUMP_MONOTONE: f64 = 1e-12;

/// Final `2u(q*) - a` over its initial value.
pub const LIOUVILLE_RATIO: f64 = 0.5;

/// Factor applied to the `K0` fitted at the smallest `R`.
pub const AUDIT_K0_MARGIN: f64 = 2.0;

/// Calibrated: relative drift of grid-evaluated `E` and `M` on field runs,
/// `k (dt^2 + dx)`.
pub const FIELD_DRIFT_FACTOR: f64 = 20.0;

/// Tolerance on decay-rate fits.
pub const DECAY_FIT: f64 = 0.02;

/// Target number of stored steps when no stride is configured.
pub const STORED_STEPS: usize = 400;
