//! Closed-form solutions and the data they induce.

use crate::jet::Jet;
use spb_core::assembly::{LoadData, PhysParams};
use spb_core::fespace::ExactFields;
use std::sync::Arc;

pub type JetFn = fn(Jet, Jet) -> Jet;

/// Velocity `curl φ = (∂_y φ, -∂_x φ)` of a stream function together with a
/// pressure and a potential, all differentiated exactly through [`Jet`]s.
#[derive(Clone, Copy)]
pub struct StreamSolution {
    pub stream: JetFn,
    pub pressure: JetFn,
    pub potential: JetFn,
}

impl StreamSolution {
    fn eval(f: JetFn, x: [f64; 2]) -> Jet {
        f(Jet::x(x[0]), Jet::y(x[1]))
    }
}

impl ExactFields for StreamSolution {
    fn u(&self, x: [f64; 2]) -> [f64; 2] {
        let s = Self::eval(self.stream, x);
        [s.d(0, 1), -s.d(1, 0)]
    }

    fn grad_u(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let s = Self::eval(self.stream, x);
        [[s.d(1, 1), s.d(0, 2)], [-s.d(2, 0), -s.d(1, 1)]]
    }

    fn lap_u(&self, x: [f64; 2]) -> [f64; 2] {
        let s = Self::eval(self.stream, x);
        [s.d(2, 1) + s.d(0, 3), -(s.d(3, 0) + s.d(1, 2))]
    }

    fn p(&self, x: [f64; 2]) -> f64 {
        Self::eval(self.pressure, x).value()
    }

    fn grad_p(&self, x: [f64; 2]) -> [f64; 2] {
        Self::eval(self.pressure, x).grad()
    }

    fn psi(&self, x: [f64; 2]) -> f64 {
        Self::eval(self.potential, x).value()
    }

    fn grad_psi(&self, x: [f64; 2]) -> [f64; 2] {
        Self::eval(self.potential, x).grad()
    }

    fn lap_psi(&self, x: [f64; 2]) -> f64 {
        Self::eval(self.potential, x).laplacian()
    }
}

/// `u = curl(x²(1-x)²y²)`, `p = sin(πx) sin(πy)`, `ψ = x(1-x)y(1-y)`.
pub fn smooth_square() -> StreamSolution {
    use std::f64::consts::PI;
    StreamSolution {
        stream: |x, y| x.powi(2) * (1.0 - x).powi(2) * y.powi(2),
        pressure: |x, y| (x * PI).sin() * (y * PI).sin(),
        potential: |x, y| x * (1.0 - x) * y * (1.0 - y),
    }
}

/// Stream function with an exponential layer of width 1/50 along `x = 0`;
/// `p = cos(2πy)/1024`, `ψ = (eˣ + eʸ)/1024`.
pub fn boundary_layer() -> StreamSolution {
    use std::f64::consts::PI;
    StreamSolution {
        stream: |x, y| {
            let e50 = (-50.0f64).exp();
            let layer = 1.0 - x - ((x * -50.0).exp() - e50) * (1.0 / (1.0 - e50));
            x * y.powi(2) * (1.0 - x - y).powi(2) * layer
        },
        pressure: |_, y| (y * (2.0 * PI)).cos() * (1.0 / 1024.0),
        potential: |x, y| (x.exp() + y.exp()) * (1.0 / 1024.0),
    }
}

/// `u = (y², x²)`, `p = x - y`, `ψ = 0`: inside ℙ₂² × ℙ₁ × ℙ₂ with
/// polynomial data.
pub fn polynomial() -> StreamSolution {
    StreamSolution {
        stream: |x, y| (y.powi(3) - x.powi(3)) * (1.0 / 3.0),
        pressure: |x, y| x - y,
        potential: |_, _| Jet::constant(0.0),
    }
}

/// Data for which `exact` solves the continuous problem:
/// `g = K(ψ) + u·∇ψ - εΔψ`, `f = -μΔu + ∇p + (K(ψ) + u·∇ψ - g)E`, with
/// `u_D = u`, `ψ_D = ψ`, `g_N = u·n` and `g_τ = μ τ·(∇u n) + β u·τ`.
pub fn manufactured_data(exact: Arc<dyn ExactFields + Send + Sync>, params: &PhysParams) -> LoadData {
    let (mu, eps, beta, k0, k1) = (params.mu, params.eps, params.beta, params.k0, params.k1);
    let efield = params.efield.clone();
    let g = {
        let ex = exact.clone();
        move |x: [f64; 2]| {
            let (u, gp) = (ex.u(x), ex.grad_psi(x));
            k0 * (k1 * ex.psi(x)).sinh() + u[0] * gp[0] + u[1] * gp[1] - eps * ex.lap_psi(x)
        }
    };
    let g = Arc::new(g);
    let f = {
        let (ex, g) = (exact.clone(), g.clone());
        move |x: [f64; 2]| {
            let (u, gp, lu, gpr, e) = (ex.u(x), ex.grad_psi(x), ex.lap_u(x), ex.grad_p(x), efield(x));
            let c = k0 * (k1 * ex.psi(x)).sinh() + u[0] * gp[0] + u[1] * gp[1] - g(x);
            [-mu * lu[0] + gpr[0] + c * e[0], -mu * lu[1] + gpr[1] + c * e[1]]
        }
    };
    let (e1, e2, e3, e4) = (exact.clone(), exact.clone(), exact.clone(), exact);
    LoadData {
        f: Arc::new(f),
        g,
        g_n: Arc::new(move |x, n| {
            let u = e1.u(x);
            u[0] * n[0] + u[1] * n[1]
        }),
        g_tau: Arc::new(move |x, n| {
            let (u, d) = (e2.u(x), e2.grad_u(x));
            let t = [-n[1], n[0]];
            let dn = [d[0][0] * n[0] + d[0][1] * n[1], d[1][0] * n[0] + d[1][1] * n[1]];
            mu * (t[0] * dn[0] + t[1] * dn[1]) + beta * (u[0] * t[0] + u[1] * t[1])
        }),
        u_d: Arc::new(move |x| e3.u(x)),
        psi_d: Arc::new(move |x| e4.psi(x)),
    }
}
