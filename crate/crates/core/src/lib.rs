//! Massless Dirac scattering outside a Reissner–Nordström black hole.
//!
//! The forward problem (stationary and time-dependent), the high-energy
//! Fourier-integral modifiers, and recovery of `(M, Q^2)` from scattering data.

pub mod dirac_evolution;
pub mod dirac_stationary;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod inverse;
pub mod modifiers;
pub mod ode;
pub mod packet;
pub mod poly;
pub mod potential;
pub mod quadrature;
pub mod spinor;
pub mod wave_images;

pub use error::{Error, Result};
