//! Pseudo-spectral simulation of passive scalar transport on the 2-torus and
//! verification tooling for its Fourier mass cascade.
//!
//! The crate integrates the unforced advection-diffusion equation
//! `d_t phi + u.grad phi = nu lap phi` with band-limited divergence-free
//! velocities, estimates the asymptotic Fourier mass measure of the
//! white-in-time forced problem through the time integral of the unforced
//! shell masses, and audits the pointwise flux inequality that controls the
//! rate at which mass crosses a Fourier radius.

// `!(x > 0.0)` guards are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod experiment;
pub mod flux;
pub mod measures;
pub mod oracle;
pub mod spectral;
pub mod velocity;

pub use error::{Error, Result};
