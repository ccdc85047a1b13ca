//! Sparse direct solves, pressure gauge handling and the nonlinear solvers.

mod linear;
mod nonlinear;

pub use linear::{solve_linear, LinearSolve, LinearSolver, RESIDUAL_TOLERANCE, SINGULAR_CONDITION};
pub use nonlinear::{
    newton_solve, newton_solve_with, picard_solve, picard_solve_with, InitialGuess, NewtonConfig, PicardConfig,
    SolveReport,
};

use crate::assembly::{AssemblyError, BlockSystem, CsrMatrix, FieldBlock};
use crate::fespace::{tabulate_basis, AffineMap, FeError, PressureGauge, QuadDomain, SpaceTriple};
use std::ops::Range;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("singular system: estimated condition number {condition:e}, near-null direction at unknown {index}")]
    Singular { index: usize, condition: f64 },
    #[error("linear solve inaccurate: residual {residual:e} for right-hand side of norm {rhs_norm:e}")]
    Inaccurate { residual: f64, rhs_norm: f64 },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Fe(#[from] FeError),
}

/// The zero-mean constraint `∫ p = Σ m_i p_i`.
#[derive(Clone, Debug)]
pub struct PressureConstraint {
    /// Global index of the first pressure unknown.
    pub offset: usize,
    /// `m_i = ∫ ζ_i` for each pressure basis function.
    pub mass: Vec<f64>,
}

impl PressureConstraint {
    pub fn new(space: &SpaceTriple) -> Result<Self, FeError> {
        let pre = space.pressure();
        let rule = crate::fespace::quad_rule::<f64>(QuadDomain::Triangle, 2 * pre.degree())?;
        let table = tabulate_basis(pre.degree(), &rule.points)?;
        let mesh = space.mesh();
        let mut mass = vec![0.0; pre.n_dofs()];
        for k in 0..mesh.n_cells() {
            let det = AffineMap::new(mesh.cell_points(k)).det.abs();
            for (i, &d) in pre.cell_dofs(k).iter().enumerate() {
                mass[d] += det * (0..rule.len()).map(|q| rule.weights[q] * table.value(q, i)).sum::<f64>();
            }
        }
        Ok(PressureConstraint { offset: space.p_offset(), mass })
    }

    fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.mass.len()
    }

    /// `∫ p` for the pressure block of a global vector.
    pub fn integral(&self, x: &[f64]) -> f64 {
        self.mass.iter().zip(&x[self.range()]).map(|(m, p)| m * p).sum()
    }
}

/// Borders `sys` with the constraint row and column for `MeanZero`; the new
/// right-hand-side entry is `rhs`. `None` returns the system unchanged.
pub fn apply_pressure_gauge(sys: &BlockSystem, gauge: PressureGauge, c: &PressureConstraint, rhs: f64) -> BlockSystem {
    if gauge == PressureGauge::None {
        return sys.clone();
    }
    let a = &sys.matrix;
    let n = a.n_rows;
    let pr = c.range();
    let mut row_ptr = Vec::with_capacity(n + 2);
    let mut col_idx = Vec::with_capacity(a.nnz() + 2 * c.mass.len());
    let mut values = Vec::with_capacity(a.nnz() + 2 * c.mass.len());
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        col_idx.extend_from_slice(cols);
        values.extend_from_slice(vals);
        if pr.contains(&i) {
            col_idx.push(n);
            values.push(c.mass[i - pr.start]);
        }
        row_ptr.push(col_idx.len());
    }
    col_idx.extend(pr.clone());
    values.extend_from_slice(&c.mass);
    row_ptr.push(col_idx.len());
    let matrix = CsrMatrix { n_rows: n + 1, n_cols: n + 1, row_ptr, col_idx, values };
    let mut r = sys.rhs.clone();
    r.push(rhs);
    let mut blocks = sys.blocks.clone();
    blocks.push(FieldBlock { name: "lambda", range: n..n + 1 });
    BlockSystem { matrix, rhs: r, blocks }
}
