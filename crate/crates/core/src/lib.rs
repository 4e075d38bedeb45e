//! Numerical and symbolic workbench for the generalized Benjamin-Bona-Mahony
//! equation `u_t - u_txx + ∂ₓf(u) = 0`.
//!
//! The equation is evolved in its nonlocal form `u_t = -∂ₓ(1 - ∂ₓ²)⁻¹ f(u)`
//! on a periodic grid (the circle, or a truncated line). Around the solver
//! sit conservation-law diagnostics, an exact differential-polynomial engine
//! that certifies the conserved currents, and numerical witnesses for the
//! unique-continuation mechanism.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod evolution;
pub mod experiments;
pub mod fields;
pub mod kernel;
pub mod nonlinearity;
pub mod par;
pub mod quadrature;
pub mod symbolic;

pub use fields::{Domain, DomainKind, Field, NormKind, SpectralField};
pub use kernel::{KernelMethod, KernelSpec};
pub use nonlinearity::{NonlinearitySpec, SignClass};
