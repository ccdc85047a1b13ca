//! Residual-based a posteriori error indicators and maximum-strategy marking.

use crate::assembly::{AssemblyError, LoadData, PhysParams};
use crate::fespace::{
    edge_reversed, project_elementwise, AffineMap, CellBasis, DgField, FeError, FieldPoint, RefTables, SystemState,
};
use crate::mesh::BoundaryTag;
use crate::scalar::dot;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::io::{self, Write};

#[derive(Debug, thiserror::Error)]
pub enum EstimatorError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Squared contributions of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElementIndicator {
    /// `h_K²‖R_K‖² + ‖R_{1,K}‖² + h_K²‖R_{2,K}‖²`.
    pub psi_r_sq: f64,
    /// `Σ_{e⊂∂K} h_e(‖R_e‖² + ‖R_{1,e}‖²)`.
    pub psi_e_sq: f64,
    /// `Σ_{e⊂∂K∩Γ} (h_e‖R¹_J‖² + h_e⁻¹‖R²_J‖²)`.
    pub psi_j_sq: f64,
    /// `h_K²(‖f - f_h‖² + ‖g - g_h‖²)`.
    pub osc_sq: f64,
}

impl ElementIndicator {
    pub fn psi_sq(&self) -> f64 {
        self.psi_r_sq + self.psi_e_sq + self.psi_j_sq
    }

    pub fn psi(&self) -> f64 {
        self.psi_sq().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct EstimatorReport {
    pub indicators: Vec<ElementIndicator>,
    /// `(Σ_K Ψ_K²)^{1/2}`.
    pub psi: f64,
    /// `(Σ_K Θ_K²)^{1/2}`.
    pub theta: f64,
    /// `Ψ / error`, once an error is supplied.
    pub effectivity: Option<f64>,
}

impl EstimatorReport {
    fn from_indicators(indicators: Vec<ElementIndicator>) -> Self {
        let psi = indicators.iter().map(ElementIndicator::psi_sq).sum::<f64>().sqrt();
        let theta = indicators.iter().map(|i| i.osc_sq).sum::<f64>().sqrt();
        EstimatorReport { indicators, psi, theta, effectivity: None }
    }

    /// Records `Ψ / error` and returns it.
    pub fn set_effectivity(&mut self, error: f64) -> f64 {
        let e = self.psi / error;
        self.effectivity = Some(e);
        e
    }

    pub fn psi_values(&self) -> Vec<f64> {
        self.indicators.iter().map(ElementIndicator::psi).collect()
    }

    /// CSV with columns `cell_id,psi_R,psi_e,psi_J,psi_K,osc` (square roots of
    /// the squared contributions).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "cell_id,psi_R,psi_e,psi_J,psi_K,osc")?;
        for (k, i) in self.indicators.iter().enumerate() {
            writeln!(
                out,
                "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                i.psi_r_sq.sqrt(),
                i.psi_e_sq.sqrt(),
                i.psi_j_sq.sqrt(),
                i.psi(),
                i.osc_sq.sqrt()
            )?;
        }
        Ok(())
    }
}

/// Residuals at the quadrature points of one cell.
#[derive(Clone, Debug, Default)]
pub struct ElementResiduals {
    /// Quadrature weights times `|det J|`.
    pub jw: Vec<f64>,
    pub r: Vec<[f64; 2]>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// Cellwise `Δu_h`, `Δψ_h` at the same points.
    pub lap_u: Vec<[f64; 2]>,
    pub lap_psi: Vec<f64>,
}

impl ElementResiduals {
    /// `[‖R_K‖², ‖R_{1,K}‖², ‖R_{2,K}‖²]`.
    pub fn norms_sq(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for q in 0..self.jw.len() {
            s[0] += self.jw[q] * dot(self.r[q], self.r[q]);
            s[1] += self.jw[q] * self.r1[q] * self.r1[q];
            s[2] += self.jw[q] * self.r2[q] * self.r2[q];
        }
        s
    }
}

/// Jump residuals at the quadrature points of one facet; all zero on the
/// boundary.
#[derive(Clone, Debug, Default)]
pub struct FacetResiduals {
    pub jw: Vec<f64>,
    /// `½⟦(p_h I - μ∇u_h) n⟧`.
    pub r_e: Vec<[f64; 2]>,
    /// `½⟦ε∇ψ_h·n⟧`.
    pub r1_e: Vec<f64>,
}

impl FacetResiduals {
    /// `[‖R_e‖², ‖R_{1,e}‖²]`.
    pub fn norms_sq(&self) -> [f64; 2] {
        let mut s = [0.0; 2];
        for q in 0..self.jw.len() {
            s[0] += self.jw[q] * dot(self.r_e[q], self.r_e[q]);
            s[1] += self.jw[q] * self.r1_e[q] * self.r1_e[q];
        }
        s
    }
}

/// Navier residuals at the quadrature points of one facet.
#[derive(Clone, Debug, Default)]
pub struct BoundaryResiduals {
    pub jw: Vec<f64>,
    /// `μ τ·(∇u_h n) + β u_h·τ - g_τ`.
    pub r1: Vec<f64>,
    /// `u_h·n - g_N`.
    pub r2: Vec<f64>,
}

impl BoundaryResiduals {
    /// `[‖R¹_J‖², ‖R²_J‖²]`.
    pub fn norms_sq(&self) -> [f64; 2] {
        let mut s = [0.0; 2];
        for q in 0..self.jw.len() {
            s[0] += self.jw[q] * self.r1[q] * self.r1[q];
            s[1] += self.jw[q] * self.r2[q] * self.r2[q];
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EstimatorOptions {
    /// Evaluate interior jumps with `K⁺` as the reference side.
    pub swap_facet_sides: bool,
}

/// Indicator evaluation for one solved state. Holds the projected data
/// `f_h`, `g_h` (discontinuous, velocity degree) and the reference tables.
pub struct Estimator<'a> {
    state: &'a SystemState,
    params: &'a PhysParams,
    loads: &'a LoadData,
    vel: RefTables,
    pre: RefTables,
    fh: DgField,
    gh: DgField,
    options: EstimatorOptions,
}

impl<'a> Estimator<'a> {
    pub fn new(state: &'a SystemState, params: &'a PhysParams, loads: &'a LoadData) -> Result<Self, EstimatorError> {
        let s = &state.space;
        if state.u.len() != 2 * s.n_u() || state.p.len() != s.n_p() || state.psi.len() != s.n_psi() {
            return Err(EstimatorError::Usage("state does not match its space".into()));
        }
        let qd = s.assembly_quad_degree() + 2;
        let deg = s.velocity().degree();
        let mesh = s.mesh();
        let f = &loads.f;
        let g = &loads.g;
        let fh = project_elementwise(mesh, deg, 2, qd, |x, out| out.copy_from_slice(&f(x)))?;
        let gh = project_elementwise(mesh, deg, 1, qd, |x, out| out[0] = g(x))?;
        Ok(Estimator {
            state,
            params,
            loads,
            vel: RefTables::new(deg, qd)?,
            pre: RefTables::new(s.pressure().degree(), qd)?,
            fh,
            gh,
            options: EstimatorOptions::default(),
        })
    }

    pub fn with_options(mut self, options: EstimatorOptions) -> Self {
        self.options = options;
        self
    }

    /// `f_h` and `g_h`.
    pub fn projected_data(&self) -> (&DgField, &DgField) {
        (&self.fh, &self.gh)
    }

    pub fn element_residuals(&self, cell: usize) -> Result<ElementResiduals, EstimatorError> {
        let mesh = self.state.space.mesh();
        if cell >= mesh.n_cells() {
            return Err(EstimatorError::Usage(format!("cell {cell} does not exist")));
        }
        let map = AffineMap::new(mesh.cell_points(cell));
        let vb = CellBasis::mapped(&self.vel.cell, &map);
        let pb = CellBasis::mapped(&self.pre.cell, &map);
        let charge = self.params.charge();
        let (mu, eps) = (self.params.mu, self.params.eps);
        let rule = &self.vel.cell_rule;
        let mut out = ElementResiduals::default();
        for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = map.apply(*xi);
            let fp = self.state.eval_at(cell, &vb, &pb, q);
            let e = (self.params.efield)(x);
            let fh = [self.fh.eval(cell, 0, &self.vel.cell, q), self.fh.eval(cell, 1, &self.vel.cell, q)];
            let gh = self.gh.eval(cell, 0, &self.vel.cell, q);
            let k = charge.eval(fp.psi)?;
            let conv = dot(fp.u, fp.grad_psi);
            let coef = gh - k - conv;
            out.jw.push(w * map.det.abs());
            out.r.push([
                fh[0] + coef * e[0] + mu * fp.lap_u[0] - fp.grad_p[0],
                fh[1] + coef * e[1] + mu * fp.lap_u[1] - fp.grad_p[1],
            ]);
            out.r1.push(fp.grad_u[0][0] + fp.grad_u[1][1]);
            out.r2.push(coef + eps * fp.lap_psi);
            out.lap_u.push(fp.lap_u);
            out.lap_psi.push(fp.lap_psi);
        }
        Ok(out)
    }

    /// Fields of the state at the facet quadrature points, seen from `cell`
    /// through its local edge `e`. Points are ordered along the facet
    /// parameter, so both sides agree.
    fn trace(&self, cell: usize, e: usize) -> Vec<FieldPoint> {
        let mesh = self.state.space.mesh();
        let rev = edge_reversed(mesh, cell, e) as usize;
        let map = AffineMap::new(mesh.cell_points(cell));
        let vb = CellBasis::mapped(&self.vel.edge[e][rev], &map);
        let pb = CellBasis::mapped(&self.pre.edge[e][rev], &map);
        (0..self.vel.edge_rule.len()).map(|q| self.state.eval_at(cell, &vb, &pb, q)).collect()
    }

    fn facet_points(&self, facet: usize) -> Vec<[f64; 2]> {
        let mesh = self.state.space.mesh();
        let [a, b] = mesh.facets()[facet].vertices;
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        self.vel.edge_rule.points.iter().map(|t| [pa[0] + t[0] * (pb[0] - pa[0]), pa[1] + t[0] * (pb[1] - pa[1])]).collect()
    }

    pub fn facet_residuals(&self, facet: usize) -> Result<FacetResiduals, EstimatorError> {
        let mesh = self.state.space.mesh();
        if facet >= mesh.n_facets() {
            return Err(EstimatorError::Usage(format!("facet {facet} does not exist")));
        }
        let fc = &mesh.facets()[facet];
        let h = mesh.facet_length(facet);
        let nq = self.vel.edge_rule.len();
        let jw: Vec<f64> = self.vel.edge_rule.weights.iter().map(|w| w * h).collect();
        let Some(plus) = fc.plus else {
            return Ok(FacetResiduals { jw, r_e: vec![[0.0; 2]; nq], r1_e: vec![0.0; nq] });
        };
        let (first, second) = if self.options.swap_facet_sides { (plus, fc.minus) } else { (fc.minus, plus) };
        let n = mesh.cell_edge_normal(first.0, first.1 as usize);
        let a = self.trace(first.0, first.1 as usize);
        let b = self.trace(second.0, second.1 as usize);
        let (mu, eps) = (self.params.mu, self.params.eps);
        let flux = |f: &FieldPoint| {
            let gn = [dot(f.grad_u[0], n), dot(f.grad_u[1], n)];
            [f.p * n[0] - mu * gn[0], f.p * n[1] - mu * gn[1]]
        };
        let mut out = FacetResiduals { jw, r_e: Vec::with_capacity(nq), r1_e: Vec::with_capacity(nq) };
        for q in 0..nq {
            let (sa, sb) = (flux(&a[q]), flux(&b[q]));
            out.r_e.push([0.5 * (sa[0] - sb[0]), 0.5 * (sa[1] - sb[1])]);
            out.r1_e.push(0.5 * eps * dot([a[q].grad_psi[0] - b[q].grad_psi[0], a[q].grad_psi[1] - b[q].grad_psi[1]], n));
        }
        Ok(out)
    }

    pub fn boundary_residuals(&self, facet: usize) -> Result<BoundaryResiduals, EstimatorError> {
        let mesh = self.state.space.mesh();
        if facet >= mesh.n_facets() || mesh.boundary_tag(facet) != Some(BoundaryTag::Navier) {
            return Err(EstimatorError::Usage(format!("facet {facet} is not a Navier facet")));
        }
        let (cell, e) = mesh.facets()[facet].minus;
        let frame = mesh.facet_frame(facet);
        let (n, t) = (frame.normal, frame.tangent);
        let tr = self.trace(cell, e as usize);
        let pts = self.facet_points(facet);
        let (mu, beta) = (self.params.mu, self.params.beta);
        let mut out = BoundaryResiduals::default();
        for (q, f) in tr.iter().enumerate() {
            let x = pts[q];
            let dn = [dot(f.grad_u[0], n), dot(f.grad_u[1], n)];
            out.jw.push(self.vel.edge_rule.weights[q] * frame.h_e);
            out.r1.push(mu * dot(t, dn) + beta * dot(f.u, t) - (self.loads.g_tau)(x, n));
            out.r2.push(dot(f.u, n) - (self.loads.g_n)(x, n));
        }
        Ok(out)
    }

    /// `h_K²(‖f - f_h‖² + ‖g - g_h‖²)`.
    pub fn oscillation(&self, cell: usize) -> f64 {
        let mesh = self.state.space.mesh();
        let map = AffineMap::new(mesh.cell_points(cell));
        let rule = &self.vel.cell_rule;
        let mut s = 0.0;
        for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = map.apply(*xi);
            let f = (self.loads.f)(x);
            let df0 = f[0] - self.fh.eval(cell, 0, &self.vel.cell, q);
            let df1 = f[1] - self.fh.eval(cell, 1, &self.vel.cell, q);
            let dg = (self.loads.g)(x) - self.gh.eval(cell, 0, &self.vel.cell, q);
            s += w * map.det.abs() * (df0 * df0 + df1 * df1 + dg * dg);
        }
        mesh.cell_diameter(cell).powi(2) * s
    }

    pub fn report(&self) -> Result<EstimatorReport, EstimatorError> {
        let mesh = self.state.space.mesh();
        // Facet terms: h_e(‖R_e‖² + ‖R_{1,e}‖²) for interior facets, and the
        // Navier trace terms. Each is credited in full to every adjacent cell.
        let facet_terms: Vec<(f64, f64)> = (0..mesh.n_facets())
            .into_par_iter()
            .map(|f| -> Result<(f64, f64), EstimatorError> {
                let h = mesh.facet_length(f);
                match mesh.boundary_tag(f) {
                    None => {
                        let [a, b] = self.facet_residuals(f)?.norms_sq();
                        Ok((h * (a + b), 0.0))
                    }
                    Some(BoundaryTag::Navier) => {
                        let [a, b] = self.boundary_residuals(f)?.norms_sq();
                        Ok((0.0, h * a + b / h))
                    }
                    Some(_) => Ok((0.0, 0.0)),
                }
            })
            .collect::<Result<_, _>>()?;
        let cells: Vec<ElementIndicator> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|k| -> Result<ElementIndicator, EstimatorError> {
                let hk = mesh.cell_diameter(k);
                let [r, r1, r2] = self.element_residuals(k)?.norms_sq();
                let mut ind = ElementIndicator {
                    psi_r_sq: hk * hk * r + r1 + hk * hk * r2,
                    osc_sq: self.oscillation(k),
                    ..Default::default()
                };
                for &f in &mesh.cell_facets()[k] {
                    ind.psi_e_sq += facet_terms[f].0;
                    ind.psi_j_sq += facet_terms[f].1;
                }
                Ok(ind)
            })
            .collect::<Result<_, _>>()?;
        Ok(EstimatorReport::from_indicators(cells))
    }
}

/// Indicators for a solved state.
pub fn compute_indicators(
    state: &SystemState,
    params: &PhysParams,
    loads: &LoadData,
) -> Result<EstimatorReport, EstimatorError> {
    Estimator::new(state, params, loads)?.report()
}

/// Cells with `Ψ_K ≥ θ max_K Ψ_K`.
pub fn mark_max_strategy(report: &EstimatorReport, theta: f64) -> Result<BTreeSet<usize>, EstimatorError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(EstimatorError::Usage(format!("theta = {theta} must lie in (0, 1)")));
    }
    if report.indicators.is_empty() {
        return Err(EstimatorError::Usage("no indicators to mark".into()));
    }
    let psi = report.psi_values();
    let max = psi.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(BTreeSet::new());
    }
    Ok(psi.iter().enumerate().filter(|(_, &v)| v >= theta * max).map(|(k, _)| k).collect())
}
