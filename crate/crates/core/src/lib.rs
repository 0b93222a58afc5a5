//! Grid solver for the Allen–Cahn energy on sections of the spanning real line
//! bundle over the complement of a codimension-two boundary `Γ ⊂ ℝⁿ`.
//!
//! The bundle is realised as a ℤ₂ gauge field on grid edges (one sign per
//! edge, holonomy −1 around every component of `Γ`). Sections are node
//! values; all derivatives are covariant differences `u_x − σ_e u_y`.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only enables
//! thread-parallel kernels. All reductions use a fixed chunk tree so results
//! are bit-identical for every thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bundle;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod par;
pub mod solver;

pub use bundle::{GaugeField, GaugeSection, SeamSurface};
pub use energy::{EnergyReport, sigma_constant};
pub use error::{Error, Result};
pub use geometry::{BoundaryManifold, Component, GridLoop};
pub use grid::{BoundaryCondition, GridSpec};
pub use solver::{SolveOutcome, SolveStatus, SolveTrace, SolverConfig};
