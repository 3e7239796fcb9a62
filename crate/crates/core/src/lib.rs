//! Numerical toolkit for proper-time parametrized localization of a spinless
//! massive free particle.
//!
//! The crate covers four layers:
//!
//! * [`classical`]: four-position variables on extended phase space, numerical
//!   Poisson brackets, and restriction of observables to observation surfaces
//!   (fixed observer time, fixed detector plane, or user-supplied).
//! * [`state`] / [`nwmap`] / [`radial`]: momentum-space states on Cartesian
//!   grids with the invariant measure `m d³π / E_π`, the Newton-Wigner
//!   position-space transform, and radial-harmonic decompositions.
//! * [`operators`] / [`schart`]: first-order differential operators in
//!   momentum space: the proper-time four-position acting rules, the
//!   Newton-Wigner operator, and the detection-time/transverse-position
//!   operators for a fixed detector plane (in both momentum charts).
//! * [`povm`]: time and position POVM kernels, overlap integrals,
//!   probability densities and completeness diagnostics.
//!
//! [`experiments`] wires these into reproducible desk-scale runs emitting
//! CSV reports with JSON sidecars; the `tauloc` binary is a thin front end.

pub mod classical;
pub mod config;
pub mod error;
pub mod experiments;
mod fft;
pub mod fourvec;
pub mod grid;
pub mod nwmap;
pub mod operators;
pub mod povm;
pub mod radial;
pub mod report;
pub mod schart;
pub mod specfun;
pub mod state;
pub mod util;

pub use error::{Error, Result};
pub use fourvec::FourVector;
pub use num_complex::Complex64;

/// Energy-sign label of the fixed-sign subspace all operators act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergySign {
    Positive,
    Negative,
}

impl EnergySign {
    /// The sign as a real factor: `+1.0` or `-1.0`.
    pub fn factor(self) -> f64 {
        match self {
            EnergySign::Positive => 1.0,
            EnergySign::Negative => -1.0,
        }
    }
}

impl std::fmt::Display for EnergySign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnergySign::Positive => write!(f, "+"),
            EnergySign::Negative => write!(f, "-"),
        }
    }
}
