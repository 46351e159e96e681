//! Divergence-free HDG scheme for the Cahn-Hilliard-Navier-Stokes phase-field
//! model on structured rectangular meshes.
//!
//! The velocity is represented by a continuous stream function, so every
//! discrete velocity field is exactly divergence-free and the pressure never
//! appears in the discrete system. The phase field and chemical potential use
//! an embedded DG (EDG) discretization with continuous skeleton unknowns, and
//! the viscous term uses HDG with projected tangential jumps. Both linear
//! systems of a time step are reduced to skeleton unknowns by static
//! condensation.
//!
//! The crate is `no_std` (it needs `alloc`). Sparse factorization of the
//! condensed skeleton system is pluggable through [`linalg::LinearSolver`];
//! [`linalg::DenseLuSolver`] is provided for small problems.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod forms;
pub mod linalg;
pub mod manufactured;
pub mod materials;
pub mod mesh;
pub mod postproc;
pub mod quadbasis;
pub mod spaces;
pub mod stepper;

pub use error::{Error, Result};
pub use mesh::{BoundaryCondition, Side, StructuredMesh};
pub use spaces::{DofSpace, FieldCoeffs, SpaceKind};
