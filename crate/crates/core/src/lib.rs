//! Boundary element solver for time-harmonic electromagnetic scattering by
//! perfectly conducting bodies, using a Calderón-preconditioned combined
//! field integral equation with a Yukawa-type (imaginary wavenumber) regularizer.

pub mod analysis;
pub mod bessel;
pub mod cfie;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod mesh;
pub mod mie;
pub mod operators;
pub mod potentials;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod spaces;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
