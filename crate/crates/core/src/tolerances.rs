//! Tolerances shared by solvers, self-tests and the acceptance report.

/// Series versus integral regime of the Mittag-Leffler function on `|z| in [4, 6]`.
pub const ML_REGIME_OVERLAP: f64 = 1e-10;
/// `E_{1,1}(-x)` against `exp(-x)` on `[0, 50]`.
pub const ML_EXP_IDENTITY: f64 = 1e-12;
/// Integral identity `int_0^T lambda k = 1 - E_{alpha,1}(-lambda T^alpha)`.
pub const ML_INTEGRAL_IDENTITY: f64 = 1e-8;
/// Observed order of the centred difference in the derivative identity.
pub const ML_DERIVATIVE_ORDER: f64 = 1.9;
/// Allowed drift of the calibrated asymptotic constant.
pub const ASYMPTOTIC_CONSTANT_DRIFT: f64 = 0.2;

/// `J_a J_g = J_{a+g}` on 401-node grids.
pub const SEMIGROUP: f64 = 1e-5;
/// Caputo derivative of a forward integral, smooth inputs.
pub const CAPUTO_ROUND_TRIP: f64 = 1e-6;
/// Observed order of the round trip under grid refinement.
pub const CAPUTO_ROUND_TRIP_ORDER: f64 = 1.5;

/// Per-mode mismatch between `J_beta u` and `v` for point-mass sources.
pub const TRANSFORM_CONSISTENCY: f64 = 1e-3;
/// Number of modes compared in the transform consistency check.
pub const TRANSFORM_CHECK_MODES: usize = 12;
/// Caputo derivative commuting with convolution, 401-node grids.
pub const COMMUTATION: f64 = 1e-4;
/// Duhamel route versus modal convolution route.
pub const ROUTE_CONSISTENCY: f64 = 1e-4;
/// Spectral routes versus the L1 time-stepping oracle: `max(factor h^alpha, floor)`.
pub const ORACLE_FACTOR: f64 = 3.0;
pub const ORACLE_FLOOR: f64 = 1e-3;

/// Noiseless recovery of the spatial factor.
pub const INVERSE_F: f64 = 1e-3;
/// Numerical uniqueness: `sigma_min > RANK_RTOL sigma_max`.
pub const RANK_RTOL: f64 = 1e-10;
/// Smooth temporal factor recovered from point data, on `[2 h_t, T]`.
pub const INVERSE_MU: f64 = 1e-2;
/// Relative weight error of recovered atoms.
pub const ATOM_WEIGHT: f64 = 1e-2;
/// Discrepancy principle: residual within this fraction of `noise sqrt(n)`.
pub const DISCREPANCY_BAND: f64 = 0.1;

/// Fitted `t^-alpha` coefficient against `(A^-1 f)(x0) / Gamma(1 - alpha)`.
pub const ASYMPTOTIC_FIT: f64 = 0.05;
