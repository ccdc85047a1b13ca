use super::basis::{n_local, tabulate_basis, BasisTable};
use super::quadrature::{quad_rule, QuadDomain};
use super::space::AffineMap;
use super::FeError;
use crate::mesh::Mesh;
use crate::scalar::Point2;
use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

/// Discontinuous piecewise polynomial field with `n_comp` components.
///
/// Coefficients of cell `k`, component `c`, local basis function `i` are at
/// `(k * n_comp + c) * n_basis + i`.
#[derive(Clone, Debug)]
pub struct DgField {
    pub degree: usize,
    pub n_comp: usize,
    pub n_basis: usize,
    pub coeffs: Vec<f64>,
}

impl DgField {
    #[inline]
    pub fn cell_coeffs(&self, cell: usize, comp: usize) -> &[f64] {
        let start = (cell * self.n_comp + comp) * self.n_basis;
        &self.coeffs[start..start + self.n_basis]
    }

    /// Value of component `comp` on `cell` at point `q` of `table`, which must
    /// be tabulated for `self.degree`.
    #[inline]
    pub fn eval(&self, cell: usize, comp: usize, table: &BasisTable<f64>, q: usize) -> f64 {
        self.cell_coeffs(cell, comp).iter().enumerate().map(|(i, c)| c * table.value(q, i)).sum()
    }
}

/// Elementwise L² projection of `field` onto discontinuous `P_degree`,
/// computed with a quadrature rule of degree `quad_degree`.
///
/// `field(x, out)` writes the `n_comp` components at `x` into `out`.
pub fn project_elementwise(
    mesh: &Mesh<f64>,
    degree: usize,
    n_comp: usize,
    quad_degree: usize,
    field: impl Fn(Point2<f64>, &mut [f64]) + Sync,
) -> Result<DgField, FeError> {
    let rule = quad_rule::<f64>(QuadDomain::Triangle, quad_degree.max(2 * degree))?;
    let table = tabulate_basis(degree, &rule.points)?;
    let nb = n_local(degree);
    // On affine cells the mass matrix is det J times the reference one.
    let mut mref = Mat::<f64>::zeros(nb, nb);
    for (q, &w) in rule.weights.iter().enumerate() {
        for i in 0..nb {
            for j in 0..nb {
                mref[(i, j)] += w * table.value(q, i) * table.value(q, j);
            }
        }
    }
    let chol = mref.llt(faer::Side::Lower).map_err(|_| FeError::Usage("singular reference mass matrix".into()))?;

    let per_cell: Vec<Vec<f64>> = (0..mesh.n_cells())
        .into_par_iter()
        .map_init(
            || vec![0.0; n_comp],
            |vals, k| {
                let map = AffineMap::new(mesh.cell_points(k));
                let mut rhs = Mat::<f64>::zeros(nb, n_comp);
                for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    field(map.apply(*xi), vals);
                    for c in 0..n_comp {
                        for i in 0..nb {
                            rhs[(i, c)] += w * vals[c] * table.value(q, i);
                        }
                    }
                }
                chol.solve_in_place(rhs.as_mut());
                let mut out = Vec::with_capacity(nb * n_comp);
                for c in 0..n_comp {
                    out.extend((0..nb).map(|i| rhs[(i, c)]));
                }
                out
            },
        )
        .collect();
    Ok(DgField { degree, n_comp, n_basis: nb, coeffs: per_cell.concat() })
}
