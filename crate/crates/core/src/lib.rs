//! Mixed finite element solvers for second-order hyperbolic equations with a
//! Volterra memory term.
//!
//! Two formulations are provided: an extended three-field method with
//! unknowns `(u, q = ∇u, σ)` and a standard two-field method with unknowns
//! `(u, σ)` whose constitutive law is written through the resolvent of the
//! memory kernel. Both are discretized with Raviart–Thomas / discontinuous
//! pairs in space and a symmetric implicit difference scheme in time with a
//! composite midpoint rule for the history integral.
//!
//! Module map:
//! - [`mesh`]: structured triangulations of rectangles and uniform refinement
//! - [`spaces`]: RT0/RT1 and DG0/DG1 spaces, projections, interpolation, norms
//! - [`assembly`]: global sparse matrices and load vectors
//! - [`memory`]: history quadrature, quadrature error, resolvent tables
//! - [`linsolve`]: sparse LU and block systems
//! - [`stepper`]: fully discrete time stepping for both methods
//! - [`verify`]: manufactured problems, Ritz–Volterra projections, studies
//! - [`config`] and [`cli`]: batch front end

pub mod assembly;
pub mod cli;
pub mod config;
pub mod dense;
pub mod error;
pub mod fields;
pub mod linsolve;
pub mod memory;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod spaces;
pub mod stepper;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{Mat2, MatrixField, Point};
pub use mesh::{Mesh, Rect};
pub use spaces::{DofSpace, SpaceKind, SpacePair};
