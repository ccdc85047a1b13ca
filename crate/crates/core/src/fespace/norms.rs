use super::space::{edge_reversed, AffineMap, CellBasis, RefTables, SystemState};
use super::{ExactFields, FeError, PressureGauge};
use crate::mesh::BoundaryTag;
use crate::scalar::dot;
use rayon::prelude::*;

/// Errors of a discrete solution against closed-form fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    /// `‖u - u_h‖_{1,h}`: gradient part plus the `h_e⁻¹`-weighted normal trace on Navier facets.
    pub u: f64,
    /// `‖p - p_h‖_{L²}`, after removing both means when the pressure carries a mean-zero gauge.
    pub p: f64,
    /// Full `‖ψ - ψ_h‖_{H¹}`.
    pub psi: f64,
    /// `(‖∇e_u‖² + Σ h_e⁻¹‖e_u·n‖² + ‖e_p‖² + ‖∇e_ψ‖²)^{1/2}`.
    pub total: f64,
    /// `‖e_u‖_{1,h} + ‖e_p‖ + ‖∇e_ψ‖`, the additive convention.
    pub total_sum: f64,
    /// Squared pieces `[‖∇e_u‖², Σ h_e⁻¹‖e_u·n‖², ‖e_p‖², ‖e_ψ‖², ‖∇e_ψ‖²]`.
    pub squares: [f64; 5],
}

/// Per-cell sums, gathered in cell order so results do not depend on the
/// number of threads.
fn cell_sums<const N: usize>(
    state: &SystemState,
    tables: &RefTables,
    ptables: &RefTables,
    f: impl Fn(usize, &AffineMap, &CellBasis, &CellBasis) -> [f64; N] + Sync,
) -> [f64; N] {
    let mesh = state.space.mesh();
    let per_cell: Vec<[f64; N]> = (0..mesh.n_cells())
        .into_par_iter()
        .map_init(
            || (CellBasis::default(), CellBasis::default()),
            |(vb, pb), k| {
                let map = AffineMap::new(mesh.cell_points(k));
                vb.fill(&tables.cell, &map);
                pb.fill(&ptables.cell, &map);
                f(k, &map, vb, pb)
            },
        )
        .collect();
    let mut out = [0.0; N];
    for c in &per_cell {
        for i in 0..N {
            out[i] += c[i];
        }
    }
    out
}

fn check_state(state: &SystemState) -> Result<(), FeError> {
    let s = &state.space;
    if state.u.len() != 2 * s.n_u() || state.p.len() != s.n_p() || state.psi.len() != s.n_psi() {
        return Err(FeError::Usage("state does not match its space".into()));
    }
    Ok(())
}

fn norm_tables(state: &SystemState) -> Result<(RefTables, RefTables), FeError> {
    let s = &state.space;
    let qd = s.assembly_quad_degree() + 2;
    Ok((RefTables::new(s.velocity().degree(), qd)?, RefTables::new(s.pressure().degree(), qd)?))
}

/// `Σ_{e ∈ Navier} h_e⁻¹ ∫_e (w·n)²` where `w(x)` is supplied per point of the edge rule.
fn navier_trace_term(
    state: &SystemState,
    tables: &RefTables,
    w: impl Fn(usize, &CellBasis, usize, [f64; 2]) -> [f64; 2] + Sync,
) -> f64 {
    let mesh = state.space.mesh();
    let facets = mesh.facets_with_tag(BoundaryTag::Navier);
    let per: Vec<f64> = facets
        .par_iter()
        .map(|&f| {
            let (k, e) = mesh.facets()[f].minus;
            let e = e as usize;
            let map = AffineMap::new(mesh.cell_points(k));
            let table = &tables.edge[e][edge_reversed(mesh, k, e) as usize];
            let b = CellBasis::mapped(table, &map);
            let frame = mesh.facet_frame(f);
            let mut s = 0.0;
            for (q, (xi, &wq)) in table_points(tables, mesh, k, e).iter().zip(&tables.edge_rule.weights).enumerate() {
                let x = map.apply(*xi);
                let d = dot(w(k, &b, q, x), frame.normal);
                s += wq * frame.h_e * d * d;
            }
            s / frame.h_e
        })
        .collect();
    per.iter().sum()
}

fn table_points(tables: &RefTables, mesh: &crate::mesh::Mesh<f64>, k: usize, e: usize) -> Vec<[f64; 2]> {
    super::space::edge_ref_points(&tables.edge_rule, e, edge_reversed(mesh, k, e))
}

/// Error norms of `state` against `exact`.
pub fn error_norms(state: &SystemState, exact: &dyn ExactFields) -> Result<ErrorNorms, FeError> {
    check_state(state)?;
    let (vt, pt) = norm_tables(state)?;
    let rule = &vt.cell_rule;

    // Means of p and p_h for the gauge-aware pressure error.
    let [area, mp, mph] = cell_sums(state, &vt, &pt, |k, map, vb, pb| {
        let mut s = [0.0; 3];
        for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let jw = w * map.det.abs();
            let fp = state.eval_at(k, vb, pb, q);
            s[0] += jw;
            s[1] += jw * exact.p(map.apply(*xi));
            s[2] += jw * fp.p;
        }
        s
    });
    let (shift, shift_h) = match state.space.gauge() {
        PressureGauge::MeanZero => (mp / area, mph / area),
        PressureGauge::None => (0.0, 0.0),
    };

    let [gu, ep, lpsi, gpsi] = cell_sums(state, &vt, &pt, |k, map, vb, pb| {
        let mut s = [0.0; 4];
        for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let jw = w * map.det.abs();
            let x = map.apply(*xi);
            let fp = state.eval_at(k, vb, pb, q);
            let gu = exact.grad_u(x);
            for a in 0..2 {
                for b in 0..2 {
                    s[0] += jw * (gu[a][b] - fp.grad_u[a][b]).powi(2);
                }
            }
            s[1] += jw * ((exact.p(x) - shift) - (fp.p - shift_h)).powi(2);
            s[2] += jw * (exact.psi(x) - fp.psi).powi(2);
            let gp = exact.grad_psi(x);
            s[3] += jw * ((gp[0] - fp.grad_psi[0]).powi(2) + (gp[1] - fp.grad_psi[1]).powi(2));
        }
        s
    });
    let bnd = navier_trace_term(state, &vt, |k, b, q, x| {
        let uh = velocity_at(state, k, b, q);
        let u = exact.u(x);
        [u[0] - uh[0], u[1] - uh[1]]
    });
    let u = (gu + bnd).sqrt();
    Ok(ErrorNorms {
        u,
        p: ep.sqrt(),
        psi: (lpsi + gpsi).sqrt(),
        total: (gu + bnd + ep + gpsi).sqrt(),
        total_sum: u + ep.sqrt() + gpsi.sqrt(),
        squares: [gu, bnd, ep, lpsi, gpsi],
    })
}

fn velocity_at(state: &SystemState, k: usize, b: &CellBasis, q: usize) -> [f64; 2] {
    let nu = state.space.n_u();
    let mut u = [0.0; 2];
    for (i, &d) in state.space.velocity().cell_dofs(k).iter().enumerate() {
        let phi = b.value(q, i);
        u[0] += state.u[d] * phi;
        u[1] += state.u[nu + d] * phi;
    }
    u
}

/// Discrete triple norm of a state:
/// `(‖∇u‖² + Σ_{Navier} h_e⁻¹‖u·n‖² + ‖p‖² + ‖∇ψ‖²)^{1/2}`, with the
/// velocity part `‖u‖_{1,h}` returned separately.
pub fn triple_norm(state: &SystemState) -> Result<(f64, f64), FeError> {
    check_state(state)?;
    let (vt, pt) = norm_tables(state)?;
    let rule = &vt.cell_rule;
    let [gu, p2, gpsi] = cell_sums(state, &vt, &pt, |k, map, vb, pb| {
        let mut s = [0.0; 3];
        for (q, &w) in rule.weights.iter().enumerate() {
            let jw = w * map.det.abs();
            let fp = state.eval_at(k, vb, pb, q);
            s[0] += jw * fp.grad_u.iter().flatten().map(|v| v * v).sum::<f64>();
            s[1] += jw * fp.p * fp.p;
            s[2] += jw * dot(fp.grad_psi, fp.grad_psi);
        }
        s
    });
    let bnd = navier_trace_term(state, &vt, |k, b, q, _| velocity_at(state, k, b, q));
    Ok(((gu + bnd).sqrt(), (gu + bnd + p2 + gpsi).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{PressureGauge, SpaceTriple};
    use crate::mesh::{make_rect_mesh, refine_uniform, BoundaryRule, Mesh};
    use std::sync::Arc;

    /// u = (x² + y, -2xy), p = x - y, ψ = x y: all inside P2² × P1 × P2.
    struct Quadratic;

    impl ExactFields for Quadratic {
        fn u(&self, x: [f64; 2]) -> [f64; 2] {
            [x[0] * x[0] + x[1], -2.0 * x[0] * x[1]]
        }
        fn grad_u(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
            [[2.0 * x[0], 1.0], [-2.0 * x[1], -2.0 * x[0]]]
        }
        fn lap_u(&self, _: [f64; 2]) -> [f64; 2] {
            [2.0, 0.0]
        }
        fn p(&self, x: [f64; 2]) -> f64 {
            x[0] - x[1]
        }
        fn grad_p(&self, _: [f64; 2]) -> [f64; 2] {
            [1.0, -1.0]
        }
        fn psi(&self, x: [f64; 2]) -> f64 {
            x[0] * x[1]
        }
        fn grad_psi(&self, x: [f64; 2]) -> [f64; 2] {
            [x[1], x[0]]
        }
        fn lap_psi(&self, _: [f64; 2]) -> f64 {
            0.0
        }
    }

    /// ψ = x(1-x)y(1-y) with zero velocity and pressure.
    struct Bubble;

    impl ExactFields for Bubble {
        fn u(&self, _: [f64; 2]) -> [f64; 2] {
            [0.0; 2]
        }
        fn grad_u(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
            [[0.0; 2]; 2]
        }
        fn lap_u(&self, _: [f64; 2]) -> [f64; 2] {
            [0.0; 2]
        }
        fn p(&self, _: [f64; 2]) -> f64 {
            0.0
        }
        fn grad_p(&self, _: [f64; 2]) -> [f64; 2] {
            [0.0; 2]
        }
        fn psi(&self, x: [f64; 2]) -> f64 {
            x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
        }
        fn grad_psi(&self, x: [f64; 2]) -> [f64; 2] {
            [(1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]), x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1])]
        }
        fn lap_psi(&self, x: [f64; 2]) -> f64 {
            -2.0 * x[1] * (1.0 - x[1]) - 2.0 * x[0] * (1.0 - x[0])
        }
    }

    fn mesh(n: usize, tag: BoundaryTag) -> Mesh<f64> {
        make_rect_mesh(n, n, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(tag)).unwrap()
    }

    fn interp(space: Arc<SpaceTriple>, e: &dyn ExactFields) -> SystemState {
        SystemState::interpolate(space, |x| e.u(x), |x| e.p(x), |x| e.psi(x))
    }

    #[test]
    fn interpolant_of_space_member_has_zero_error() {
        for gauge in [PressureGauge::MeanZero, PressureGauge::None] {
            let s = Arc::new(SpaceTriple::new(Arc::new(mesh(3, BoundaryTag::Navier)), 1, gauge).unwrap());
            let n = error_norms(&interp(s, &Quadratic), &Quadratic).unwrap();
            assert!(n.u < 1e-10 && n.p < 1e-10 && n.psi < 1e-10 && n.total < 1e-10, "{n:?}");
        }
    }

    #[test]
    fn bubble_interpolation_converges_at_second_order() {
        let mut m = mesh(2, BoundaryTag::Dirichlet);
        let mut prev = None;
        for _ in 0..4 {
            let s = Arc::new(SpaceTriple::new(Arc::new(m.clone()), 1, PressureGauge::MeanZero).unwrap());
            let st = interp(s.clone(), &Bubble);
            // Nodal values are exact.
            for (d, x) in s.potential().dof_points().iter().enumerate() {
                assert!((st.psi[d] - Bubble.psi(*x)).abs() < 1e-15);
            }
            let e = error_norms(&st, &Bubble).unwrap().psi;
            if let Some(p) = prev {
                let rate = f64::log2(p / e);
                assert!((rate - 2.0).abs() < 0.15, "rate {rate}");
            }
            prev = Some(e);
            m = refine_uniform(&m);
        }
    }

    #[test]
    fn pure_dirichlet_norm_has_no_trace_term() {
        let s = Arc::new(SpaceTriple::new(Arc::new(mesh(2, BoundaryTag::Dirichlet)), 1, PressureGauge::MeanZero).unwrap());
        let zero = SystemState::zeros(s);
        let n = error_norms(&zero, &Quadratic).unwrap();
        assert_eq!(n.squares[1], 0.0);
        // ∫|∇u|² of the quadratic field over the unit square: 4/3 + 1 + 4/3 + 4/3 = 5.
        assert!((n.squares[0] - 5.0).abs() < 1e-12);
        assert!((n.u - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trace_term_on_navier_boundary() {
        // u = (y, 0): u·n vanishes on y = 0, 1; on x = 1 it is y, on x = 0 it is -y.
        struct Shear;
        impl ExactFields for Shear {
            fn u(&self, x: [f64; 2]) -> [f64; 2] {
                [x[1], 0.0]
            }
            fn grad_u(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
                [[0.0, 1.0], [0.0, 0.0]]
            }
            fn lap_u(&self, _: [f64; 2]) -> [f64; 2] {
                [0.0; 2]
            }
            fn p(&self, _: [f64; 2]) -> f64 {
                0.0
            }
            fn grad_p(&self, _: [f64; 2]) -> [f64; 2] {
                [0.0; 2]
            }
            fn psi(&self, _: [f64; 2]) -> f64 {
                0.0
            }
            fn grad_psi(&self, _: [f64; 2]) -> [f64; 2] {
                [0.0; 2]
            }
            fn lap_psi(&self, _: [f64; 2]) -> f64 {
                0.0
            }
        }
        let n = 4;
        let s = Arc::new(SpaceTriple::new(Arc::new(mesh(n, BoundaryTag::Navier)), 1, PressureGauge::None).unwrap());
        let st = interp(s.clone(), &Shear);
        let (u1h, total) = triple_norm(&st).unwrap();
        // ∫|∇u|² = 1; each vertical side contributes h⁻¹ ∫ y² = n/3.
        let expect = 1.0 + 2.0 * n as f64 / 3.0;
        assert!((u1h * u1h - expect).abs() < 1e-12);
        assert!((total - u1h).abs() < 1e-14);
        let e = error_norms(&SystemState::zeros(s), &Shear).unwrap();
        assert!((e.u - u1h).abs() < 1e-12);
    }

    #[test]
    fn mean_zero_gauge_ignores_constant_pressure_shift() {
        let s = Arc::new(SpaceTriple::new(Arc::new(mesh(2, BoundaryTag::Dirichlet)), 1, PressureGauge::MeanZero).unwrap());
        let mut st = interp(s, &Quadratic);
        st.p.iter_mut().for_each(|p| *p += 4.0);
        assert!(error_norms(&st, &Quadratic).unwrap().p < 1e-12);
        let s = Arc::new(SpaceTriple::new(Arc::new(mesh(2, BoundaryTag::Dirichlet)), 1, PressureGauge::None).unwrap());
        let mut st = interp(s, &Quadratic);
        st.p.iter_mut().for_each(|p| *p += 4.0);
        assert!((error_norms(&st, &Quadratic).unwrap().p - 4.0).abs() < 1e-12);
    }
}
