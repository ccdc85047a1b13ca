use super::sparse::{BlockSystem, CsrMatrix, FieldBlock};
use super::{AssemblyError, LoadData, PhysParams};
use crate::fespace::{AffineMap, CellBasis, RefTables, SpaceTriple, SystemState};
use crate::mesh::BoundaryTag;
use crate::scalar::dot;
use rayon::prelude::*;
use std::sync::Arc;

/// Cells processed per parallel batch before the sequential scatter.
const CHUNK: usize = 256;

/// Switches for the nonlinear coupling terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Couplings {
    /// `(u·∇ψ E, v)` in the momentum equation.
    pub c1: bool,
    /// `(u·∇ψ, φ)` in the potential equation.
    pub c2: bool,
    /// Charge terms `(K(ψ)E, v)` and `(K(ψ), φ)`.
    pub charge: bool,
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings { c1: true, c2: true, charge: true }
    }
}

impl Couplings {
    pub const NONE: Couplings = Couplings { c1: false, c2: false, charge: false };
}

/// Strongly imposed values over the global unknowns.
#[derive(Clone, Debug)]
pub struct DirichletData {
    pub mask: Vec<bool>,
    /// Prescribed value where `mask` is set, zero elsewhere.
    pub values: Vec<f64>,
}

/// Interpolated Dirichlet data: velocity on Dirichlet facets, potential on
/// the whole boundary.
pub fn dirichlet_data(space: &SpaceTriple, loads: &LoadData) -> DirichletData {
    let mask = space.dirichlet_mask();
    let mut values = vec![0.0; space.n_total()];
    let pts = space.velocity().dof_points();
    for (d, &x) in pts.iter().enumerate() {
        if space.velocity_dirichlet()[d] {
            let u = (loads.u_d)(x);
            values[space.u_index(0, d)] = u[0];
            values[space.u_index(1, d)] = u[1];
        }
    }
    for (d, &x) in space.potential().dof_points().iter().enumerate() {
        if space.potential_dirichlet()[d] {
            values[space.psi_offset() + d] = (loads.psi_d)(x);
        }
    }
    DirichletData { mask, values }
}

/// Assembles residuals and Jacobians on a fixed [`SpaceTriple`], reusing the
/// sparsity pattern and reference tables between calls.
#[derive(Clone, Debug)]
pub struct Assembler {
    space: Arc<SpaceTriple>,
    vel: RefTables,
    pre: RefTables,
    pattern: CsrMatrix,
    couplings: Couplings,
}

#[derive(Default)]
struct Workspace {
    vb: CellBasis,
    pb: CellBasis,
    r: Vec<f64>,
    j: Vec<f64>,
}

struct LocalLayout {
    nv: usize,
    np: usize,
}

impl LocalLayout {
    #[inline]
    fn u(&self, c: usize, i: usize) -> usize {
        c * self.nv + i
    }
    #[inline]
    fn p(&self, i: usize) -> usize {
        2 * self.nv + i
    }
    #[inline]
    fn psi(&self, i: usize) -> usize {
        2 * self.nv + self.np + i
    }
    #[inline]
    fn len(&self) -> usize {
        3 * self.nv + self.np
    }
}

impl Assembler {
    pub fn new(space: Arc<SpaceTriple>) -> Result<Self, AssemblyError> {
        let qd = space.assembly_quad_degree();
        Self::with_quad_degree(space, qd)
    }

    pub fn with_quad_degree(space: Arc<SpaceTriple>, quad_degree: usize) -> Result<Self, AssemblyError> {
        let vel = RefTables::new(space.velocity().degree(), quad_degree)?;
        let pre = RefTables::new(space.pressure().degree(), quad_degree)?;
        let pattern = build_pattern(&space);
        Ok(Assembler { space, vel, pre, pattern, couplings: Couplings::default() })
    }

    pub fn with_couplings(mut self, couplings: Couplings) -> Self {
        self.couplings = couplings;
        self
    }

    pub fn space(&self) -> &Arc<SpaceTriple> {
        &self.space
    }

    /// Matrix pattern (all values zero).
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    fn layout(&self) -> LocalLayout {
        LocalLayout { nv: self.space.velocity().n_local(), np: self.space.pressure().n_local() }
    }

    fn local_to_global(&self, k: usize, out: &mut Vec<usize>) {
        let s = &self.space;
        out.clear();
        let vd = s.velocity().cell_dofs(k);
        for c in 0..2 {
            out.extend(vd.iter().map(|&d| s.u_index(c, d)));
        }
        out.extend(s.pressure().cell_dofs(k).iter().map(|&d| s.p_offset() + d));
        out.extend(vd.iter().map(|&d| s.psi_offset() + d));
    }

    fn check(&self, state: &SystemState) -> Result<(), AssemblyError> {
        let s = &self.space;
        if !Arc::ptr_eq(&state.space, s) && state.space.n_total() != s.n_total() {
            return Err(AssemblyError::Usage("state lives on a different space".into()));
        }
        if state.u.len() != 2 * s.n_u() || state.p.len() != s.n_p() || state.psi.len() != s.n_psi() {
            return Err(AssemblyError::Usage("state does not match its space".into()));
        }
        Ok(())
    }

    /// Volume and Navier terms of one cell: residual into `ws.r` and, when
    /// `jac` is set, the local Jacobian (row-major) into `ws.j`.
    fn cell_local(
        &self,
        k: usize,
        state: &SystemState,
        params: &PhysParams,
        loads: &LoadData,
        ws: &mut Workspace,
        jac: bool,
    ) -> Result<(), AssemblyError> {
        let lay = self.layout();
        let (nv, np, nl) = (lay.nv, lay.np, lay.len());
        let mesh = self.space.mesh();
        let map = AffineMap::new(mesh.cell_points(k));
        let charge = params.charge();
        let cp = self.couplings;
        let (mu, eps) = (params.mu, params.eps);
        ws.r.clear();
        ws.r.resize(nl, 0.0);
        ws.j.clear();
        if jac {
            ws.j.resize(nl * nl, 0.0);
        }
        let Workspace { vb, pb, r, j } = ws;
        vb.fill(&self.vel.cell, &map);
        pb.fill(&self.pre.cell, &map);
        let rule = &self.vel.cell_rule;
        for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = map.apply(*xi);
            let jw = w * map.det.abs();
            let fp = state.eval_at(k, vb, pb, q);
            let e = (params.efield)(x);
            let f = (loads.f)(x);
            let g = (loads.g)(x);
            let (kv, kd) = if cp.charge { (charge.eval(fp.psi)?, charge.deriv(fp.psi)?) } else { (0.0, 0.0) };
            let adv = dot(fp.u, fp.grad_psi);
            let div = fp.grad_u[0][0] + fp.grad_u[1][1];
            let mom_scalar = if cp.c1 { adv } else { 0.0 } + kv;
            let pot_scalar = kv + if cp.c2 { adv } else { 0.0 } - g;
            for i in 0..nv {
                let phi = vb.value(q, i);
                let gp = vb.grad(q, i);
                for c in 0..2 {
                    r[lay.u(c, i)] += jw
                        * (mu * dot(fp.grad_u[c], gp) - fp.p * gp[c] + mom_scalar * e[c] * phi
                            - (f[c] + g * e[c]) * phi);
                }
                r[lay.psi(i)] += jw * (pot_scalar * phi + eps * dot(fp.grad_psi, gp));
            }
            for i in 0..np {
                r[lay.p(i)] -= jw * pb.value(q, i) * div;
            }
            if !jac {
                continue;
            }
            for i in 0..nv {
                let phi_i = vb.value(q, i);
                let gi = vb.grad(q, i);
                for jj in 0..nv {
                    let phi_j = vb.value(q, jj);
                    let gj = vb.grad(q, jj);
                    let lap = jw * dot(gi, gj);
                    let u_gphi = dot(fp.u, gj);
                    for c in 0..2 {
                        j[lay.u(c, i) * nl + lay.u(c, jj)] += mu * lap;
                        if cp.c1 {
                            for d in 0..2 {
                                j[lay.u(c, i) * nl + lay.u(d, jj)] += jw * phi_j * fp.grad_psi[d] * e[c] * phi_i;
                            }
                        }
                        let mut s = 0.0;
                        if cp.c1 {
                            s += u_gphi;
                        }
                        s += kd * phi_j;
                        j[lay.u(c, i) * nl + lay.psi(jj)] += jw * s * e[c] * phi_i;
                    }
                    if cp.c2 {
                        for d in 0..2 {
                            j[lay.psi(i) * nl + lay.u(d, jj)] += jw * phi_j * fp.grad_psi[d] * phi_i;
                        }
                    }
                    let mut s = kd * phi_j * phi_i;
                    if cp.c2 {
                        s += u_gphi * phi_i;
                    }
                    j[lay.psi(i) * nl + lay.psi(jj)] += jw * s + eps * lap;
                }
                for jj in 0..np {
                    let z = pb.value(q, jj);
                    for c in 0..2 {
                        let v = -jw * z * gi[c];
                        j[lay.u(c, i) * nl + lay.p(jj)] += v;
                        j[lay.p(jj) * nl + lay.u(c, i)] += v;
                    }
                }
            }
        }

        for (e, &f) in mesh.cell_facets()[k].iter().enumerate() {
            if mesh.boundary_tag(f) != Some(BoundaryTag::Navier) {
                continue;
            }
            let rev = crate::fespace::edge_reversed(mesh, k, e) as usize;
            let vb = CellBasis::mapped(&self.vel.edge[e][rev], &map);
            let pb = CellBasis::mapped(&self.pre.edge[e][rev], &map);
            let pts = crate::fespace::edge_ref_points(&self.vel.edge_rule, e, rev == 1);
            let frame = mesh.facet_frame(f);
            let (n, t, he) = (frame.normal, frame.tangent, frame.h_e);
            let pen = params.gamma / he;
            for (q, (xi, &w)) in pts.iter().zip(&self.vel.edge_rule.weights).enumerate() {
                let x = map.apply(*xi);
                let jw = w * he;
                let fp = state.eval_at(k, &vb, &pb, q);
                let un = dot(fp.u, n);
                let ut = dot(fp.u, t);
                let dnun = n[0] * dot(fp.grad_u[0], n) + n[1] * dot(fp.grad_u[1], n);
                let gn = (loads.g_n)(x, n);
                let gt = (loads.g_tau)(x, n);
                for i in 0..nv {
                    let phi = vb.value(q, i);
                    let dphin = dot(vb.grad(q, i), n);
                    for c in 0..2 {
                        r[lay.u(c, i)] += jw
                            * (-(mu * dnun - fp.p) * n[c] * phi - mu * dphin * n[c] * (un - gn)
                                + (params.beta * ut - gt) * t[c] * phi
                                + pen * (un - gn) * n[c] * phi);
                    }
                }
                for i in 0..np {
                    r[lay.p(i)] += jw * pb.value(q, i) * (un - gn);
                }
                if !jac {
                    continue;
                }
                for i in 0..nv {
                    let phi_i = vb.value(q, i);
                    let dn_i = dot(vb.grad(q, i), n);
                    for jj in 0..nv {
                        let phi_j = vb.value(q, jj);
                        let dn_j = dot(vb.grad(q, jj), n);
                        let nn = -mu * (dn_j * phi_i + dn_i * phi_j) + pen * phi_i * phi_j;
                        let tt = params.beta * phi_i * phi_j;
                        for c in 0..2 {
                            for d in 0..2 {
                                j[lay.u(c, i) * nl + lay.u(d, jj)] += jw * (nn * n[c] * n[d] + tt * t[c] * t[d]);
                            }
                        }
                    }
                    for jj in 0..np {
                        let z = pb.value(q, jj);
                        for c in 0..2 {
                            let v = jw * z * n[c] * phi_i;
                            j[lay.u(c, i) * nl + lay.p(jj)] += v;
                            j[lay.p(jj) * nl + lay.u(c, i)] += v;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Runs `cell_local` over all cells in fixed batches and hands each
    /// batch, in cell order, to `scatter`.
    fn sweep(
        &self,
        state: &SystemState,
        params: &PhysParams,
        loads: &LoadData,
        jac: bool,
        mut scatter: impl FnMut(usize, &[f64], &[f64]),
    ) -> Result<(), AssemblyError> {
        let nc = self.space.mesh().n_cells();
        let mut start = 0;
        while start < nc {
            let end = (start + CHUNK).min(nc);
            let batch: Vec<Result<(Vec<f64>, Vec<f64>), AssemblyError>> = (start..end)
                .into_par_iter()
                .map_init(Workspace::default, |ws, k| {
                    self.cell_local(k, state, params, loads, ws, jac)?;
                    Ok((ws.r.clone(), ws.j.clone()))
                })
                .collect();
            for (k, item) in (start..end).zip(batch) {
                let (r, j) = item?;
                scatter(k, &r, &j);
            }
            start = end;
        }
        Ok(())
    }

    /// Residual without Dirichlet substitution and, optionally, the
    /// unmodified Jacobian.
    pub fn raw(
        &self,
        state: &SystemState,
        params: &PhysParams,
        loads: &LoadData,
        jac: bool,
    ) -> Result<(Vec<f64>, Option<CsrMatrix>), AssemblyError> {
        self.check(state)?;
        let mut res = vec![0.0; self.space.n_total()];
        let mut mat = jac.then(|| self.pattern.clone());
        let mut lg = Vec::new();
        self.sweep(state, params, loads, jac, |k, r, j| {
            self.local_to_global(k, &mut lg);
            let nl = lg.len();
            for (a, &ga) in lg.iter().enumerate() {
                res[ga] += r[a];
            }
            if let Some(m) = mat.as_mut() {
                for (a, &ga) in lg.iter().enumerate() {
                    let row = &j[a * nl..(a + 1) * nl];
                    let start = m.row_ptr[ga];
                    let cols = &m.col_idx[start..m.row_ptr[ga + 1]];
                    for (b, &gb) in lg.iter().enumerate() {
                        let pos = start + cols.binary_search(&gb).expect("entry in pattern");
                        m.values[pos] += row[b];
                    }
                }
            }
        })?;
        Ok((res, mat))
    }

    /// Full residual; Dirichlet entries hold `value - data`.
    pub fn residual(&self, state: &SystemState, params: &PhysParams, loads: &LoadData) -> Result<Vec<f64>, AssemblyError> {
        let (mut r, _) = self.raw(state, params, loads, false)?;
        let dd = dirichlet_data(&self.space, loads);
        let x = state.to_vector();
        for i in 0..r.len() {
            if dd.mask[i] {
                r[i] = x[i] - dd.values[i];
            }
        }
        Ok(r)
    }

    /// Newton system `J δ = -R` with Dirichlet rows and columns eliminated.
    /// Returns the system together with the full residual `R`.
    pub fn newton_system(
        &self,
        state: &SystemState,
        params: &PhysParams,
        loads: &LoadData,
    ) -> Result<(BlockSystem, Vec<f64>), AssemblyError> {
        let (mut r, m) = self.raw(state, params, loads, true)?;
        let mut m = m.expect("jacobian requested");
        let dd = dirichlet_data(&self.space, loads);
        let x = state.to_vector();
        for i in 0..r.len() {
            if dd.mask[i] {
                r[i] = x[i] - dd.values[i];
            }
        }
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        for i in 0..m.n_rows {
            let range = m.row_ptr[i]..m.row_ptr[i + 1];
            if dd.mask[i] {
                for p in range {
                    m.values[p] = if m.col_idx[p] == i { 1.0 } else { 0.0 };
                }
            } else {
                for p in range {
                    let jcol = m.col_idx[p];
                    if dd.mask[jcol] {
                        rhs[i] -= m.values[p] * rhs[jcol];
                        m.values[p] = 0.0;
                    }
                }
            }
        }
        Ok((BlockSystem { matrix: m, rhs, blocks: self.blocks() }, r))
    }

    pub fn blocks(&self) -> Vec<FieldBlock> {
        let s = &self.space;
        vec![
            FieldBlock { name: "u", range: 0..s.p_offset() },
            FieldBlock { name: "p", range: s.p_offset()..s.psi_offset() },
            FieldBlock { name: "psi", range: s.psi_offset()..s.n_total() },
        ]
    }

    /// Navier data terms moved to the right-hand side:
    /// `-∫ nᵗ(μ∇v - qI)n g_N + (γ/h_e)∫ g_N v·n + ∫ g_τ τ·v` per facet.
    pub fn nitsche_rhs(&self, params: &PhysParams, loads: &LoadData) -> Vec<f64> {
        let s = &self.space;
        let mesh = s.mesh();
        let lay = self.layout();
        let mut out = vec![0.0; s.n_total()];
        let mut lg = Vec::new();
        for f in mesh.facets_with_tag(BoundaryTag::Navier) {
            let (k, e) = mesh.facets()[f].minus;
            let e = e as usize;
            let map = AffineMap::new(mesh.cell_points(k));
            let rev = crate::fespace::edge_reversed(mesh, k, e) as usize;
            let vb = CellBasis::mapped(&self.vel.edge[e][rev], &map);
            let pb = CellBasis::mapped(&self.pre.edge[e][rev], &map);
            let pts = crate::fespace::edge_ref_points(&self.vel.edge_rule, e, rev == 1);
            let frame = mesh.facet_frame(f);
            let (n, t, he) = (frame.normal, frame.tangent, frame.h_e);
            let mut r = vec![0.0; lay.len()];
            for (q, (xi, &w)) in pts.iter().zip(&self.vel.edge_rule.weights).enumerate() {
                let x = map.apply(*xi);
                let jw = w * he;
                let gn = (loads.g_n)(x, n);
                let gt = (loads.g_tau)(x, n);
                for i in 0..lay.nv {
                    let phi = vb.value(q, i);
                    let dphin = dot(vb.grad(q, i), n);
                    for c in 0..2 {
                        r[lay.u(c, i)] +=
                            jw * (-params.mu * dphin * n[c] * gn + params.gamma / he * gn * n[c] * phi + gt * t[c] * phi);
                    }
                }
                for i in 0..lay.np {
                    r[lay.p(i)] += jw * pb.value(q, i) * gn;
                }
            }
            self.local_to_global(k, &mut lg);
            for (a, &ga) in lg.iter().enumerate() {
                out[ga] += r[a];
            }
        }
        out
    }
}

fn build_pattern(space: &SpaceTriple) -> CsrMatrix {
    let n = space.n_total();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut lg = Vec::new();
    let asm_dofs = |k: usize, out: &mut Vec<usize>| {
        out.clear();
        let vd = space.velocity().cell_dofs(k);
        for c in 0..2 {
            out.extend(vd.iter().map(|&d| space.u_index(c, d)));
        }
        out.extend(space.pressure().cell_dofs(k).iter().map(|&d| space.p_offset() + d));
        out.extend(vd.iter().map(|&d| space.psi_offset() + d));
    };
    for k in 0..space.mesh().n_cells() {
        asm_dofs(k, &mut lg);
        for &a in &lg {
            rows[a].extend_from_slice(&lg);
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for (i, mut r) in rows.into_iter().enumerate() {
        r.push(i);
        r.sort_unstable();
        r.dedup();
        col_idx.extend_from_slice(&r);
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_pattern(n, row_ptr, col_idx)
}

/// Residual of the discrete problem at `state` (see [`Assembler::residual`]).
pub fn assemble_residual(state: &SystemState, params: &PhysParams, loads: &LoadData) -> Result<Vec<f64>, AssemblyError> {
    Assembler::new(state.space.clone())?.residual(state, params, loads)
}

/// Jacobian system at `state` (see [`Assembler::newton_system`]).
pub fn assemble_jacobian(state: &SystemState, params: &PhysParams, loads: &LoadData) -> Result<BlockSystem, AssemblyError> {
    Ok(Assembler::new(state.space.clone())?.newton_system(state, params, loads)?.0)
}

/// Navier data terms (see [`Assembler::nitsche_rhs`]).
pub fn assemble_nitsche_rhs(space: Arc<SpaceTriple>, params: &PhysParams, loads: &LoadData) -> Result<Vec<f64>, AssemblyError> {
    Ok(Assembler::new(space)?.nitsche_rhs(params, loads))
}
