//! Finite element solvers for the incompressible Stokes equations on
//! simplicial meshes.
//!
//! Velocities are continuous vector Lagrange fields enriched by
//! Raviart-Thomas functions. Three schemes are provided: a decoupled scheme
//! built on an explicit basis of discretely divergence-free functions, a
//! reduced mixed scheme with piecewise constant pressures, and the full mixed
//! scheme.

// index loops mirror the formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod boundary;
pub mod cases;
pub mod divfree;
pub mod driver;
pub mod error;
pub mod fespace;
pub mod linalg;
pub mod localops;
pub mod mesh;
pub mod norms;
pub mod poly;
pub mod pressure;
pub mod quadrature;

pub use error::{Error, Result};
pub use mesh::SimplicialMesh;
