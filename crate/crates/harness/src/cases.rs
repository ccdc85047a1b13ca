//! The experiment library.

use crate::manufactured::{boundary_layer, manufactured_data, polynomial, smooth_square};
use crate::HarnessError;
use spb_core::assembly::{LoadData, PhysParams};
use spb_core::fespace::{ExactFields, PressureGauge};
use spb_core::mesh::{make_named_domain, BoundaryRule, BoundaryTag, DomainKind, DomainSpec, Mesh};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseName {
    ConvergenceSquare,
    NonconvexC,
    NonconvexL,
    NonconvexT,
    BoundaryLayerTriangle,
    PipeObstacle,
    /// Polynomial solution reproduced exactly by the discretization.
    PolynomialNull,
}

impl CaseName {
    pub const ALL: [CaseName; 7] = [
        CaseName::ConvergenceSquare,
        CaseName::NonconvexC,
        CaseName::NonconvexL,
        CaseName::NonconvexT,
        CaseName::BoundaryLayerTriangle,
        CaseName::PipeObstacle,
        CaseName::PolynomialNull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::ConvergenceSquare => "convergence-square",
            CaseName::NonconvexC => "nonconvex-C",
            CaseName::NonconvexL => "nonconvex-L",
            CaseName::NonconvexT => "nonconvex-T",
            CaseName::BoundaryLayerTriangle => "boundary-layer-triangle",
            CaseName::PipeObstacle => "pipe-obstacle",
            CaseName::PolynomialNull => "polynomial-null",
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::Usage(format!("unknown case `{s}`")))
    }
}

/// Physical coefficients that override a case's defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub k0: Option<f64>,
    pub k1: Option<f64>,
}

impl ParamOverrides {
    fn apply(&self, p: &mut PhysParams) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.mu, self.mu);
        set(&mut p.gamma, self.gamma);
        set(&mut p.beta, self.beta);
        set(&mut p.eps, self.eps);
        set(&mut p.k0, self.k0);
        set(&mut p.k1, self.k1);
    }
}

#[derive(Clone)]
pub struct CaseSpec {
    pub name: CaseName,
    pub params: PhysParams,
    pub loads: LoadData,
    /// Present exactly for manufactured cases.
    pub exact: Option<Arc<dyn ExactFields + Send + Sync>>,
    pub domain: DomainSpec,
    /// Target cell size of the initial mesh.
    pub initial_h: f64,
    pub gauge: PressureGauge,
    /// Modelling choices not fixed by the problem statement, written to the
    /// run metadata.
    pub assumptions: Vec<&'static str>,
}

const TOL: f64 = 1e-9;

/// Navier on `x = 1` and `y = 1`, Dirichlet on the other sides.
fn square_rule() -> BoundaryRule {
    BoundaryRule::new(|m| {
        if (m[0] - 1.0).abs() < TOL || (m[1] - 1.0).abs() < TOL {
            BoundaryTag::Navier
        } else {
            BoundaryTag::Dirichlet
        }
    })
}

/// Navier on the straight sides that end in a re-entrant corner.
fn corner_rule(kind: DomainKind) -> BoundaryRule {
    BoundaryRule::new(move |m| {
        let navier = match kind {
            DomainKind::LShape => (m[0].abs() < TOL && m[1] > 0.0) || (m[1].abs() < TOL && m[0] > 0.0),
            DomainKind::CShape => {
                ((m[0] + 0.2).abs() < TOL && m[1].abs() < 0.5)
                    || ((m[1].abs() - 0.5).abs() < TOL && m[0] > -0.2 && m[0] < 1.0)
            }
            DomainKind::TShape => {
                (m[1].abs() < TOL && m[0].abs() > 0.5) || ((m[0].abs() - 0.5).abs() < TOL && m[1] < 0.0)
            }
            _ => false,
        };
        if navier {
            BoundaryTag::Navier
        } else {
            BoundaryTag::Dirichlet
        }
    })
}

/// Navier on the hypotenuse, Dirichlet on the legs.
fn triangle_rule() -> BoundaryRule {
    BoundaryRule::new(|m| {
        if (m[0] + m[1] - 1.0).abs() < TOL {
            BoundaryTag::Navier
        } else {
            BoundaryTag::Dirichlet
        }
    })
}

fn with_exact(
    name: CaseName,
    exact: Arc<dyn ExactFields + Send + Sync>,
    params: PhysParams,
    domain: DomainSpec,
    initial_h: f64,
    assumptions: Vec<&'static str>,
) -> CaseSpec {
    let loads = manufactured_data(exact.clone(), &params);
    CaseSpec { name, params, loads, exact: Some(exact), domain, initial_h, gauge: PressureGauge::MeanZero, assumptions }
}

impl CaseSpec {
    pub fn new(name: CaseName, overrides: &ParamOverrides) -> Result<Self, HarnessError> {
        let params = |mu, eps, beta, gamma, k0, k1, e| {
            let mut p = PhysParams::new(mu, eps, beta, gamma, k0, k1, e);
            overrides.apply(&mut p);
            p
        };
        let unit = DomainKind::Rectangle([0.0, 1.0, 0.0, 1.0]);
        let spec = match name {
            CaseName::ConvergenceSquare => with_exact(
                name,
                Arc::new(smooth_square()),
                params(1.0, 1.0, 1.0, 10.0, 1.0, 1.0, [1.0, -1.0]),
                DomainSpec::with_rule(unit, square_rule()),
                0.25,
                vec!["pressure compared after removing its mean"],
            ),
            CaseName::PolynomialNull => with_exact(
                name,
                Arc::new(polynomial()),
                params(1.0, 1.0, 1.0, 10.0, 1.0, 1.0, [1.0, -1.0]),
                DomainSpec::with_rule(unit, square_rule()),
                0.25,
                vec![],
            ),
            CaseName::BoundaryLayerTriangle => with_exact(
                name,
                Arc::new(boundary_layer()),
                params(1.0, 10.0, 10.0, 50.0, 1.0, 10.0, [-10.0, 0.0]),
                DomainSpec::with_rule(DomainKind::UnitTriangle, triangle_rule()),
                1.0 / 12.0,
                vec!["Navier on the hypotenuse, Dirichlet on the legs", "pressure compared after removing its mean"],
            ),
            CaseName::NonconvexC | CaseName::NonconvexL | CaseName::NonconvexT => {
                let kind = match name {
                    CaseName::NonconvexC => DomainKind::CShape,
                    CaseName::NonconvexL => DomainKind::LShape,
                    _ => DomainKind::TShape,
                };
                let p = params(1.0, 1.0, 1.0, 25.0, 1.0, 1.0, [0.0, -1.0]);
                let loads = LoadData {
                    f: Arc::new(|_| [1.0, 1.0]),
                    g: Arc::new(|_| 1.0),
                    ..LoadData::zero()
                };
                CaseSpec {
                    name,
                    params: p,
                    loads,
                    exact: None,
                    domain: DomainSpec::with_rule(kind, corner_rule(kind)),
                    initial_h: if kind == DomainKind::CShape { 0.1 } else { 0.25 },
                    gauge: PressureGauge::MeanZero,
                    assumptions: vec![
                        "homogeneous Dirichlet data for u and psi",
                        "Navier on the sides meeting a re-entrant corner, Dirichlet elsewhere",
                    ],
                }
            }
            CaseName::PipeObstacle => {
                let kind = DomainKind::PipeWithHole { center: [0.2, 0.2], radius: 0.1 };
                let p = params(1.0, 1.0, 1.0, 50.0, 1.0, 1.0, [-1.0, 0.0]);
                let loads = LoadData {
                    u_d: Arc::new(|x| if x[0].abs() < TOL { [4.0 * x[1] * (0.41 - x[1]) / (0.41 * 0.41), 0.0] } else { [0.0; 2] }),
                    psi_d: Arc::new(|x| if x[0].abs() < TOL { (std::f64::consts::PI * (x[0] + x[1])).cos() } else { 0.0 }),
                    ..LoadData::zero()
                };
                CaseSpec {
                    name,
                    params: p,
                    loads,
                    exact: None,
                    domain: DomainSpec::new(kind),
                    initial_h: 0.04,
                    gauge: PressureGauge::None,
                    assumptions: vec![
                        "no-slip walls, Navier obstacle, traction-free outlet",
                        "psi = cos(pi(x+y)) on the inlet and 0 on the rest of the boundary",
                        "obstacle approximated by a polygon",
                    ],
                }
            }
        };
        spec.params.validate(0.0)?;
        Ok(spec)
    }

    pub fn initial_mesh(&self) -> Result<Mesh<f64>, HarnessError> {
        Ok(make_named_domain(&self.domain, self.initial_h)?)
    }

    pub fn is_manufactured(&self) -> bool {
        self.exact.is_some()
    }
}
