#![allow(dead_code)]

use spb_core::assembly::{LoadData, PhysParams};
use spb_core::fespace::{triple_norm, PressureGauge, SpaceTriple, SystemState};
use spb_core::mesh::{make_rect_mesh, BoundaryRule, BoundaryTag, Mesh};
use std::f64::consts::PI;
use std::sync::Arc;

pub type P = [f64; 2];

/// A smooth exact solution with everything needed to build consistent data.
pub struct Exact {
    pub u: fn(P) -> P,
    pub grad_u: fn(P) -> [P; 2],
    pub lap_u: fn(P) -> P,
    pub p: fn(P) -> f64,
    pub grad_p: fn(P) -> P,
    pub psi: fn(P) -> f64,
    pub grad_psi: fn(P) -> P,
    pub lap_psi: fn(P) -> f64,
}

pub fn polynomial() -> Exact {
    Exact {
        u: |x| [x[1] * x[1], x[0] * x[0]],
        grad_u: |x| [[0.0, 2.0 * x[1]], [2.0 * x[0], 0.0]],
        lap_u: |_| [2.0, 2.0],
        p: |x| x[0] - x[1],
        grad_p: |_| [1.0, -1.0],
        psi: |x| 0.2 * (x[0] * x[0] + x[0] * x[1]),
        grad_psi: |x| [0.2 * (2.0 * x[0] + x[1]), 0.2 * x[0]],
        lap_psi: |_| 0.4,
    }
}

/// Quadratic flow with zero potential: all data are polynomial.
pub fn polynomial_flow() -> Exact {
    Exact { psi: |_| 0.0, grad_psi: |_| [0.0; 2], lap_psi: |_| 0.0, ..polynomial() }
}

pub fn trigonometric() -> Exact {
    Exact {
        u: |x| {
            let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
            [0.5 * PI * sx * cy, -0.5 * PI * cx * sy]
        },
        grad_u: |x| {
            let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
            let a = 0.5 * PI * PI;
            [[a * cx * cy, -a * sx * sy], [a * sx * sy, -a * cx * cy]]
        },
        lap_u: |x| {
            let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
            let a = -2.0 * PI * PI * 0.5 * PI;
            [a * sx * cy, -a * cx * sy]
        },
        p: |x| (PI * x[0]).cos() * (PI * x[1]).cos(),
        grad_p: |x| {
            [-PI * (PI * x[0]).sin() * (PI * x[1]).cos(), -PI * (PI * x[0]).cos() * (PI * x[1]).sin()]
        },
        psi: |x| 0.3 * x[0] * x[1] + 0.2 * (PI * x[0]).sin() * (PI * x[1]).sin(),
        grad_psi: |x| {
            [
                0.3 * x[1] + 0.2 * PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                0.3 * x[0] + 0.2 * PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            ]
        },
        lap_psi: |x| -0.4 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin(),
    }
}

/// Data for which `ex` solves the continuous problem.
pub fn loads_for(ex: &Exact, prm: &PhysParams) -> LoadData {
    let (mu, eps, beta, k0, k1) = (prm.mu, prm.eps, prm.beta, prm.k0, prm.k1);
    let e = prm.efield.clone();
    let (u, gu, lu, gp, psi, gpsi, lpsi) = (ex.u, ex.grad_u, ex.lap_u, ex.grad_p, ex.psi, ex.grad_psi, ex.lap_psi);
    let g = move |x: P| {
        let (uu, gs) = (u(x), gpsi(x));
        -eps * lpsi(x) + k0 * (k1 * psi(x)).sinh() + uu[0] * gs[0] + uu[1] * gs[1]
    };
    LoadData {
        f: Arc::new(move |x| {
            let (uu, gs, l, pg, ee) = (u(x), gpsi(x), lu(x), gp(x), e(x));
            let coef = uu[0] * gs[0] + uu[1] * gs[1] + k0 * (k1 * psi(x)).sinh() - g(x);
            [-mu * l[0] + pg[0] + coef * ee[0], -mu * l[1] + pg[1] + coef * ee[1]]
        }),
        g: Arc::new(g),
        g_n: Arc::new(move |x, n| {
            let uu = u(x);
            uu[0] * n[0] + uu[1] * n[1]
        }),
        g_tau: Arc::new(move |x, n| {
            let (uu, d) = (u(x), gu(x));
            let t = [-n[1], n[0]];
            let dn = [d[0][0] * n[0] + d[0][1] * n[1], d[1][0] * n[0] + d[1][1] * n[1]];
            mu * (t[0] * dn[0] + t[1] * dn[1]) + beta * (uu[0] * t[0] + uu[1] * t[1])
        }),
        u_d: Arc::new(u),
        psi_d: Arc::new(psi),
    }
}

pub fn mixed_rule() -> BoundaryRule {
    BoundaryRule::new(|m| {
        if (m[0] - 1.0).abs() < 1e-12 || (m[1] - 1.0).abs() < 1e-12 {
            BoundaryTag::Navier
        } else {
            BoundaryTag::Dirichlet
        }
    })
}

pub fn square(n: usize, rule: &BoundaryRule) -> Mesh<f64> {
    make_rect_mesh(n, n, [0.0, 1.0, 0.0, 1.0], rule).unwrap()
}

pub fn space(mesh: Mesh<f64>, gauge: PressureGauge) -> Arc<SpaceTriple> {
    Arc::new(SpaceTriple::new(Arc::new(mesh), 1, gauge).unwrap())
}

pub fn params() -> PhysParams {
    PhysParams::new(1.0, 1.0, 1.0, 10.0, 1.0, 1.0, [1.0, -1.0])
}

pub fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn diff_norm(a: &SystemState, b: &SystemState) -> f64 {
    let x: Vec<f64> = a.to_vector().iter().zip(b.to_vector()).map(|(p, q)| p - q).collect();
    triple_norm(&SystemState::from_vector(a.space.clone(), &x).unwrap()).unwrap().1
}
