//! Displacement-driven nonlocal elasticity.
//!
//! Strains are built from a frame-invariant differ-integral derivative: the
//! classical first derivative is averaged over a (possibly truncated) horizon
//! with a decaying kernel, while the stress-strain law stays local. The strain
//! energy is therefore a quadratic form and stays convex for any kernel,
//! symmetric or not.
//!
//! The crate provides the kernels, the continuous and discrete forms of the
//! operator, closed-form and numerical dispersion relations for the 1D solid,
//! and nonlocal finite elements for Timoshenko beams and Mindlin plates.

pub mod beam;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod fem;
pub mod kernels;
pub mod operator;
pub mod plate;
pub mod quadrature;
pub mod run;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
pub use kernels::{Kernel, KernelKind};
