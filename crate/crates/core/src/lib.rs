//! Time-fractional diffusion with temporally singular sources.
//!
//! The crate evaluates Mittag-Leffler functions, discretizes Riemann-Liouville
//! integrals and Caputo derivatives, solves `(d_t^alpha + A) u = mu(t) f(x)` on
//! an interval by eigenfunction expansion and by time stepping, and recovers
//! either `f` or `mu` from partial observations.

pub mod acceptance;
pub mod error;
pub mod forward;
pub mod fractional;
pub mod inverse;
pub mod io;
pub mod mittag_leffler;
pub mod quadrature;
pub mod selftest;
pub mod spectral;
pub mod special;
pub mod tolerances;

pub use error::{FracError, Result};
pub use fractional::{Atom, DeltaTrain, FracParams, GridFunction, TemporalGrid, TemporalSource};
pub use mittag_leffler::{ml_asymptotic_leading, ml_eval, ml_kernel, MLParams, MlKernel};
