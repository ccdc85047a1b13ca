//! Case library, convergence and adaptive studies, and output writers for
//! the Stokes-Poisson-Boltzmann solver.

pub mod cases;
pub mod config;
pub mod jet;
pub mod manufactured;
pub mod output;
pub mod run;
pub mod study;

use spb_core::assembly::AssemblyError;
use spb_core::estimator::EstimatorError;
use spb_core::fespace::FeError;
use spb_core::mesh::MeshError;
use spb_core::solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("{solver} solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { solver: study::SolverKind, iterations: usize, residual: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
