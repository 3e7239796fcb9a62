//! Special functions needed by the POVM kernels: complex log-gamma,
//! orthonormal spherical harmonics, and conical (Mehler) Legendre functions.
//!
//! Every function here is validated against at least one independent
//! evaluation route in the tests.

mod conical;
mod gamma;
pub mod quadrature;
mod spherical;

pub use conical::{conical_p, conical_p_integral, conical_p_series, ConicalOrder};
pub use gamma::log_gamma;
pub use spherical::spherical_harmonic;
