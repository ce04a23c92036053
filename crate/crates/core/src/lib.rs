//! Dynamic small-strain perfect plasticity on a rectangle with dissipative and mixed
//! Dirichlet/Neumann boundary conditions.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: symmetric tensors and the isotropic Hooke law;
//! * [`convex`]: elasticity sets, support functions, projections, the relaxed boundary
//!   energy and the Moreau–Yosida envelope;
//! * [`grid`]: the structured grid, discrete symmetric gradient, its adjoint divergence
//!   and the boundary partition;
//! * [`dynamics`]: time stepping, compatible initial data and the energy ledger;
//! * [`analysis`]: duality pairing, convexity and flow-rule checks, λ sweeps;
//! * [`config`], [`io`] and [`runner`]: the JSON run description, on-disk artifacts and
//!   the drivers that produce and verify them.

pub mod algebra;
pub mod analysis;
pub mod config;
pub mod convex;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod runner;
mod solve;

pub use algebra::{sym_outer, Hooke, Sym2, Sym3, SymMat, Vec2, Vector};
pub use convex::{BoundaryWeight, ElasticitySet, Halfspace, Membership, Metric};
pub use error::{Error, Result};
pub use grid::{BoundaryPartition, Grid, Label, SymField, VectorField};
