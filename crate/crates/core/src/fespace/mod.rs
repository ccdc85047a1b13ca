//! Lagrange spaces on triangles, quadrature, interpolation, elementwise
//! projection and error norms.

mod basis;
mod norms;
mod project;
mod quadrature;
mod space;

pub use basis::{lagrange_nodes, n_local, tabulate_basis, BasisTable, Hess};
pub use norms::{error_norms, triple_norm, ErrorNorms};
pub use project::{project_elementwise, DgField};
pub use quadrature::{quad_rule, QuadDomain, QuadratureRule, MAX_QUAD_DEGREE};
pub use space::{
    edge_ref_points, edge_reversed, interpolate, AffineMap, CellBasis, FieldPoint, PressureGauge, RefTables, Space,
    SpaceTriple, SystemState,
};

use crate::scalar::Point2;

#[derive(Debug, thiserror::Error)]
pub enum FeError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("usage error: {0}")]
    Usage(String),
}

/// Closed-form solution fields. Velocity gradients are indexed
/// `grad_u[a][b] = ∂u_a/∂x_b`.
pub trait ExactFields: Sync {
    fn u(&self, x: Point2<f64>) -> [f64; 2];
    fn grad_u(&self, x: Point2<f64>) -> [[f64; 2]; 2];
    fn lap_u(&self, x: Point2<f64>) -> [f64; 2];
    fn p(&self, x: Point2<f64>) -> f64;
    fn grad_p(&self, x: Point2<f64>) -> [f64; 2];
    fn psi(&self, x: Point2<f64>) -> f64;
    fn grad_psi(&self, x: Point2<f64>) -> [f64; 2];
    fn lap_psi(&self, x: Point2<f64>) -> f64;
}
