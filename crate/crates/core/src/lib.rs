//! Runge-Kutta convolution quadrature (CQ) for time-domain boundary integral
//! equations in two dimensions.
//!
//! The crate is organised bottom-up:
//!
//! * [`butcher`] builds and validates stiffly accurate implicit Runge-Kutta
//!   tableaux and the CQ generating matrix `Δ(ζ)`.
//! * [`cq`] turns a Laplace-domain [`cq::Symbol`] into its discrete
//!   convolution, either through explicit weights or all frequencies at once.
//! * [`kernels`] provides complex-argument `K₀`/`K₁` and the fundamental
//!   solution of `-Δ + s²`.
//! * [`bem2d`] assembles Galerkin matrices on polygonal boundaries and
//!   realises the Dirichlet-to-Neumann and Dirichlet-to-impedance maps.
//! * [`timedomain`] couples the pieces into the standard and differentiated
//!   scattering schemes driven by a travelling wave.

pub mod bem2d;
pub mod butcher;
pub mod cq;
mod error;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod timedomain;

pub use error::{Error, Result};
pub use num_complex::Complex64;
