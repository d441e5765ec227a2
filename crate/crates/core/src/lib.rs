//! Simulation and diagnostics for an elastic slab coupled on both faces to
//! incompressible viscous fluid layers, formulated in Lagrangian coordinates
//! on a fixed reference stack.
//!
//! The crate is generic over the floating-point scalar (`scalar::Real`);
//! concrete `f64` aliases for the main types live at the crate root.

pub mod coupling;
pub mod decay_lemma;
pub mod discretization;
pub mod elastic;
pub mod energetics;
pub mod fluid;
pub mod kinematics;
pub mod solver;
pub mod error;
pub mod scalar;

pub use error::{CoreError, Result};

/// Double-precision aliases used by the binary and most tests.
pub type Field64 = discretization::Field<f64>;
pub type VectorField64 = discretization::VectorField<f64>;
pub type MatrixField64 = discretization::MatrixField<f64>;
pub type BoundaryField64 = discretization::BoundaryField<f64>;
pub type GridSpec64 = discretization::GridSpec<f64>;
