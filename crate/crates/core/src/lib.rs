//! Spectral Faedo–Galerkin solver and audit harness for a rot-free
//! Navier–Stokes-type system of 2-forms on the flat torus `T^3`.

pub mod cli;
pub mod derham;
pub mod error;
pub mod galerkin;
pub mod hodge;
pub mod nonlinear;
pub mod norms;
pub mod spectral_grid;

pub use error::{Error, Result};
