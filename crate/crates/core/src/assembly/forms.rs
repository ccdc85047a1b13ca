use super::{AssemblyError, LoadData, PhysParams};
use crate::fespace::{edge_reversed, AffineMap, CellBasis, FieldPoint, RefTables, SystemState};
use crate::mesh::BoundaryTag;
use crate::scalar::dot;
use std::str::FromStr;

/// The bilinear, trilinear and linear forms of the discrete problem.
///
/// Each form reads its first arguments from the `trial` state and its test
/// function from the `test` state, e.g. `B` is `b(trial.u, test.p)` and `C1`
/// is `c1(trial.u; trial.psi, test.u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormId {
    /// `μ (∇u, ∇v)`
    A,
    /// `Σ_Nav ∫ β (u·τ)(v·τ)`
    ATau,
    /// `Σ_Nav (γ/h_e) ∫ (u·n)(v·n)`
    AGamma,
    /// `Σ_Nav ∫ μ nᵗ∇u n (n·v)`
    AC,
    /// `-(div u, q)`
    B,
    /// `Σ_Nav ∫ q (n·u)`
    BBnd,
    /// `(u·∇ψ E, v)`
    C1,
    /// `(u·∇ψ, φ)`
    C2,
    /// `ε (∇ψ, ∇φ)`
    D,
    /// `(K(ψ) E, v)`
    KMomentum,
    /// `(K(ψ), φ)`
    KPotential,
    /// `(f + g E, v)`
    F,
    /// `(g, φ)`
    G,
}

impl FromStr for FormId {
    type Err = AssemblyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "a" => FormId::A,
            "a_tau" => FormId::ATau,
            "a_gamma" => FormId::AGamma,
            "a_c" => FormId::AC,
            "b" => FormId::B,
            "b_bnd" => FormId::BBnd,
            "c1" => FormId::C1,
            "c2" => FormId::C2,
            "d" => FormId::D,
            "Kterm_momentum" => FormId::KMomentum,
            "Kterm_potential" => FormId::KPotential,
            "F" => FormId::F,
            "G" => FormId::G,
            other => return Err(AssemblyError::Usage(format!("unknown form `{other}`"))),
        })
    }
}

impl FormId {
    fn is_boundary(self) -> bool {
        matches!(self, FormId::ATau | FormId::AGamma | FormId::AC | FormId::BBnd)
    }
}

/// Evaluates one form by quadrature.
pub fn eval_form(
    id: FormId,
    trial: &SystemState,
    test: &SystemState,
    params: &PhysParams,
    loads: &LoadData,
) -> Result<f64, AssemblyError> {
    let space = &trial.space;
    if test.space.n_total() != space.n_total() {
        return Err(AssemblyError::Usage("form arguments live on different spaces".into()));
    }
    let qd = space.assembly_quad_degree();
    let vel = RefTables::new(space.velocity().degree(), qd)?;
    let pre = RefTables::new(space.pressure().degree(), qd)?;
    let mesh = space.mesh();
    let charge = params.charge();
    let mut total = 0.0;

    if id.is_boundary() {
        for f in mesh.facets_with_tag(BoundaryTag::Navier) {
            let (k, e) = mesh.facets()[f].minus;
            let e = e as usize;
            let map = AffineMap::new(mesh.cell_points(k));
            let rev = edge_reversed(mesh, k, e);
            let vb = CellBasis::mapped(&vel.edge[e][rev as usize], &map);
            let pb = CellBasis::mapped(&pre.edge[e][rev as usize], &map);
            let fr = mesh.facet_frame(f);
            let (n, t) = (fr.normal, fr.tangent);
            for (q, &w) in vel.edge_rule.weights.iter().enumerate() {
                let a = trial.eval_at(k, &vb, &pb, q);
                let b = test.eval_at(k, &vb, &pb, q);
                let nt_grad_n = |fp: &FieldPoint| n[0] * dot(fp.grad_u[0], n) + n[1] * dot(fp.grad_u[1], n);
                let v = match id {
                    FormId::ATau => params.beta * dot(a.u, t) * dot(b.u, t),
                    FormId::AGamma => params.gamma / fr.h_e * dot(a.u, n) * dot(b.u, n),
                    FormId::AC => params.mu * nt_grad_n(&a) * dot(b.u, n),
                    FormId::BBnd => b.p * dot(a.u, n),
                    _ => unreachable!(),
                };
                total += w * fr.h_e * v;
            }
        }
        return Ok(total);
    }

    for k in 0..mesh.n_cells() {
        let map = AffineMap::new(mesh.cell_points(k));
        let vb = CellBasis::mapped(&vel.cell, &map);
        let pb = CellBasis::mapped(&pre.cell, &map);
        for (q, (xi, &w)) in vel.cell_rule.points.iter().zip(&vel.cell_rule.weights).enumerate() {
            let x = map.apply(*xi);
            let a = trial.eval_at(k, &vb, &pb, q);
            let b = test.eval_at(k, &vb, &pb, q);
            let e = (params.efield)(x);
            let v = match id {
                FormId::A => {
                    params.mu * (dot(a.grad_u[0], b.grad_u[0]) + dot(a.grad_u[1], b.grad_u[1]))
                }
                FormId::B => -(a.grad_u[0][0] + a.grad_u[1][1]) * b.p,
                FormId::C1 => dot(a.u, a.grad_psi) * dot(e, b.u),
                FormId::C2 => dot(a.u, a.grad_psi) * b.psi,
                FormId::D => params.eps * dot(a.grad_psi, b.grad_psi),
                FormId::KMomentum => charge.eval(a.psi)? * dot(e, b.u),
                FormId::KPotential => charge.eval(a.psi)? * b.psi,
                FormId::F => {
                    let f = (loads.f)(x);
                    let g = (loads.g)(x);
                    (f[0] + g * e[0]) * b.u[0] + (f[1] + g * e[1]) * b.u[1]
                }
                FormId::G => (loads.g)(x) * b.psi,
                _ => unreachable!(),
            };
            total += w * map.det.abs() * v;
        }
    }
    Ok(total)
}
