//! Uniform convergence series and the adaptive Solve → Estimate → Mark → Refine loop.

use crate::cases::CaseSpec;
use crate::HarnessError;
use spb_core::estimator::{compute_indicators, mark_max_strategy, EstimatorReport};
use spb_core::fespace::{error_norms, ErrorNorms, PressureGauge, SpaceTriple, SystemState};
use spb_core::mesh::{refine_bisect, refine_uniform, Mesh};
use spb_core::solver::{newton_solve, picard_solve, NewtonConfig, PicardConfig, SolveReport};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverKind {
    #[default]
    Newton,
    Picard,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Newton => "newton",
            SolverKind::Picard => "picard",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newton" => Ok(SolverKind::Newton),
            "picard" => Ok(SolverKind::Picard),
            _ => Err(HarnessError::Usage(format!("unknown solver `{s}` (expected newton or picard)"))),
        }
    }
}

pub fn parse_gauge(s: &str) -> Result<PressureGauge, HarnessError> {
    match s {
        "mean-zero" => Ok(PressureGauge::MeanZero),
        "none" => Ok(PressureGauge::None),
        _ => Err(HarnessError::Usage(format!("unknown gauge `{s}` (expected mean-zero or none)"))),
    }
}

pub fn gauge_name(g: PressureGauge) -> &'static str {
    match g {
        PressureGauge::MeanZero => "mean-zero",
        PressureGauge::None => "none",
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveSettings {
    pub kind: SolverKind,
    pub newton: NewtonConfig,
    pub picard: PicardConfig,
}

/// Solution, indicators and (for manufactured cases) errors on one mesh.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub state: SystemState,
    pub report: SolveReport,
    pub estimate: EstimatorReport,
    pub errors: Option<ErrorNorms>,
}

impl LevelSolution {
    pub fn mesh(&self) -> &Arc<Mesh<f64>> {
        self.state.space.mesh()
    }

    pub fn dofs(&self) -> usize {
        self.state.space.n_total()
    }
}

/// Solves `case` on `mesh` with the velocity/pressure pair of pressure degree
/// `degree`, then evaluates the estimator and, when available, the errors.
pub fn solve_level(
    case: &CaseSpec,
    mesh: Arc<Mesh<f64>>,
    degree: usize,
    settings: &SolveSettings,
) -> Result<LevelSolution, HarnessError> {
    let space = Arc::new(SpaceTriple::new(mesh, degree, case.gauge)?);
    let (state, report) = match settings.kind {
        SolverKind::Newton => newton_solve(&case.loads, &case.params, space, &settings.newton)?,
        SolverKind::Picard => picard_solve(&case.loads, &case.params, space, &settings.picard)?,
    };
    if !report.converged {
        let residual = report.final_residual();
        return Err(HarnessError::NotConverged { solver: settings.kind, iterations: report.iterations, residual });
    }
    let mut estimate = compute_indicators(&state, &case.params, &case.loads)?;
    let errors = match &case.exact {
        Some(exact) => Some(error_norms(&state, exact.as_ref())?),
        None => None,
    };
    if let Some(e) = &errors {
        estimate.set_effectivity(e.total);
    }
    Ok(LevelSolution { state, report, estimate, errors })
}

/// `log(e_prev / e) / log(h_prev / h)`.
pub fn observed_order(e_prev: f64, e: f64, h_prev: f64, h: f64) -> f64 {
    (e_prev / e).ln() / (h_prev / h).ln()
}

/// One row of a uniform convergence table. Orders are `None` on the first row.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    /// `[‖u - u_h‖_{1,h}, ‖p - p_h‖, ‖ψ - ψ_h‖_1]`.
    pub errors: [f64; 3],
    pub orders: [Option<f64>; 3],
    pub total: f64,
    pub total_order: Option<f64>,
    pub estimator: f64,
    pub estimator_order: Option<f64>,
    pub effectivity: f64,
    pub iterations: usize,
}

impl ConvergenceRow {
    fn new(level: usize, sol: &LevelSolution, prev: Option<&ConvergenceRow>) -> Result<Self, HarnessError> {
        let e = sol.errors.ok_or_else(|| HarnessError::Usage("convergence study needs an exact solution".into()))?;
        let h = sol.mesh().h_max();
        let errors = [e.u, e.p, e.psi];
        let order = |a: f64, b: f64| prev.map(|r| observed_order(a, b, r.h, h));
        Ok(ConvergenceRow {
            level,
            h,
            dofs: sol.dofs(),
            errors,
            orders: [0, 1, 2].map(|i| order(prev.map_or(0.0, |r| r.errors[i]), errors[i])),
            total: e.total,
            total_order: order(prev.map_or(0.0, |r| r.total), e.total),
            estimator: sol.estimate.psi,
            estimator_order: order(prev.map_or(0.0, |r| r.estimator), sol.estimate.psi),
            effectivity: sol.estimate.psi / e.total,
            iterations: sol.report.iterations,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceOptions {
    pub levels: usize,
    pub degree: usize,
    /// Levels whose system would exceed this many unknowns are skipped.
    pub max_dofs: Option<usize>,
    pub settings: SolveSettings,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { levels: 6, degree: 1, max_dofs: None, settings: SolveSettings::default() }
    }
}

/// Rows computed so far and the error that stopped the series, if any.
#[derive(Debug)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub failure: Option<HarnessError>,
}

/// Uniform red-refinement series starting from the case's initial mesh.
/// `on_level` sees every solved level, e.g. to write field snapshots.
pub fn run_convergence(
    case: &CaseSpec,
    opts: &ConvergenceOptions,
    mut on_level: impl FnMut(&LevelSolution, &ConvergenceRow) -> Result<(), HarnessError>,
) -> ConvergenceStudy {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut run = || -> Result<(), HarnessError> {
        if opts.levels == 0 {
            return Err(HarnessError::Usage("at least one level is required".into()));
        }
        let mut mesh = Arc::new(case.initial_mesh()?);
        for level in 0..opts.levels {
            if level > 0 {
                mesh = Arc::new(refine_uniform(&mesh));
            }
            if let Some(max) = opts.max_dofs {
                if SpaceTriple::new(mesh.clone(), opts.degree, case.gauge)?.n_total() > max {
                    break;
                }
            }
            let sol = solve_level(case, mesh.clone(), opts.degree, &opts.settings)?;
            let row = ConvergenceRow::new(level, &sol, rows.last())?;
            on_level(&sol, &row)?;
            rows.push(row);
        }
        Ok(())
    };
    let failure = run().err();
    ConvergenceStudy { rows, failure }
}

/// Per-round summary of an adaptive run.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveHistoryRow {
    pub round: usize,
    pub dofs: usize,
    pub cells: usize,
    pub vertices: usize,
    /// Global estimator `Ψ`.
    pub estimator: f64,
    /// Data oscillation `Θ`.
    pub oscillation: f64,
    pub total_error: Option<f64>,
    pub effectivity: Option<f64>,
    /// Cells marked for refinement after this round (0 on the last round).
    pub marked: usize,
    pub h_max: f64,
    pub h_min: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub theta: f64,
    /// The loop stops before solving a system with more unknowns than this.
    pub max_dofs: usize,
    pub max_rounds: Option<usize>,
    pub degree: usize,
    pub settings: SolveSettings,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { theta: 0.5, max_dofs: 200_000, max_rounds: None, degree: 1, settings: SolveSettings::default() }
    }
}

#[derive(Debug)]
pub struct AdaptiveRun {
    pub rows: Vec<AdaptiveHistoryRow>,
    pub failure: Option<HarnessError>,
}

/// Solve → Estimate → Mark → Refine with the maximum marking strategy.
/// `on_round` receives each solved round and the cells marked in it.
pub fn run_adaptive(
    case: &CaseSpec,
    opts: &AdaptiveOptions,
    mut on_round: impl FnMut(&LevelSolution, &AdaptiveHistoryRow) -> Result<(), HarnessError>,
) -> AdaptiveRun {
    let mut rows = Vec::new();
    let mut run = || -> Result<(), HarnessError> {
        if !(opts.theta > 0.0 && opts.theta < 1.0) {
            return Err(HarnessError::Usage(format!("theta = {} must lie in (0, 1)", opts.theta)));
        }
        let mut mesh = Arc::new(case.initial_mesh()?);
        for round in 0.. {
            if opts.max_rounds.is_some_and(|m| round >= m) {
                break;
            }
            let n = SpaceTriple::new(mesh.clone(), opts.degree, case.gauge)?.n_total();
            if round > 0 && n > opts.max_dofs {
                break;
            }
            let sol = solve_level(case, mesh.clone(), opts.degree, &opts.settings)?;
            let last = opts.max_rounds.is_some_and(|m| round + 1 >= m);
            let marked = if last { Default::default() } else { mark_max_strategy(&sol.estimate, opts.theta)? };
            let row = AdaptiveHistoryRow {
                round,
                dofs: n,
                cells: mesh.n_cells(),
                vertices: mesh.n_vertices(),
                estimator: sol.estimate.psi,
                oscillation: sol.estimate.theta,
                total_error: sol.errors.map(|e| e.total),
                effectivity: sol.estimate.effectivity,
                marked: marked.len(),
                h_max: mesh.h_max(),
                h_min: mesh.h_min(),
                iterations: sol.report.iterations,
            };
            on_round(&sol, &row)?;
            rows.push(row);
            if last || marked.is_empty() {
                break;
            }
            mesh = Arc::new(refine_bisect(&mesh, &marked)?);
        }
        Ok(())
    };
    let failure = run().err();
    AdaptiveRun { rows, failure }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_halved_mesh_is_log2_ratio() {
        assert!((observed_order(4.0, 1.0, 0.2, 0.1) - 2.0).abs() < 1e-15);
        assert!((observed_order(3.0, 1.0, 1.0, 0.5) - 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (10f64.powi(i), 3.0 * 10f64.powi(i).powf(-0.75))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.75).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_none());
    }

    #[test]
    fn solver_and_gauge_names() {
        assert_eq!("picard".parse::<SolverKind>().unwrap(), SolverKind::Picard);
        assert!("gmres".parse::<SolverKind>().is_err());
        for g in [PressureGauge::MeanZero, PressureGauge::None] {
            assert_eq!(parse_gauge(gauge_name(g)).unwrap(), g);
        }
        assert!(parse_gauge("zero").is_err());
    }
}
