//! Finite element discretization of the coupled Stokes and Poisson-Boltzmann
//! system with Navier slip boundaries, a residual a posteriori error estimator
//! and adaptive refinement.
//!
//! Geometry and reference-element code is generic over [`Scalar`]; the
//! assembled systems and solvers work in `f64`. The aliases at the crate root
//! name the `f64` instantiations.

pub mod assembly;
pub mod estimator;
pub mod fespace;
pub mod mesh;
pub mod scalar;
pub mod solver;

pub use scalar::{Point2, Scalar};

pub type Mesh = mesh::Mesh<f64>;
