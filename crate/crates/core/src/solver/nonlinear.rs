use super::{apply_pressure_gauge, LinearSolver, PressureConstraint, SolverError};
use crate::assembly::{dirichlet_data, Assembler, AssemblyError, BlockSystem, LoadData, PhysParams};
use crate::fespace::{triple_norm, PressureGauge, SpaceTriple, SystemState};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Starting point of a nonlinear solve.
#[derive(Clone, Debug, Default)]
pub enum InitialGuess {
    Zero,
    /// Dirichlet data on the boundary, zero elsewhere.
    #[default]
    InterpolatedData,
    State(SystemState),
}

#[derive(Clone, Debug)]
pub struct NewtonConfig {
    /// Threshold on the residual ∞-norm.
    pub abs_tol: f64,
    /// Stop once the residual has dropped by this factor.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Initial step factor in `(0, 1]`.
    pub damping: f64,
    /// Smallest step factor tried by the backtracking.
    pub min_damping: f64,
    pub initial_guess: InitialGuess,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_iter: 25,
            damping: 1.0,
            min_damping: 1.0 / 16.0,
            initial_guess: InitialGuess::InterpolatedData,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(SolverError::Config("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Config("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0 && self.min_damping > 0.0 && self.min_damping <= self.damping) {
            return Err(SolverError::Config(format!(
                "damping {} and floor {} must satisfy 0 < floor ≤ damping ≤ 1",
                self.damping, self.min_damping
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PicardConfig {
    /// Stop once successive velocities differ by at most this in `‖·‖_{1,h}`.
    pub tol: f64,
    pub max_outer: usize,
    /// Settings of the inner potential solve; `initial_guess` is used for the
    /// first outer iterate.
    pub inner: NewtonConfig,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { tol: 1e-11, max_outer: 200, inner: NewtonConfig::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    /// Newton steps, or outer iterations for Picard.
    pub iterations: usize,
    /// Residual ∞-norms, starting with the initial guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Condition estimates of every linear solve.
    pub condition_estimates: Vec<f64>,
    /// Accepted step factors.
    pub step_lengths: Vec<f64>,
    /// Picard only: `‖u^{m+1} - u^m‖_{1,h}` per outer iteration.
    pub increments: Vec<f64>,
    /// Picard only: ratios of successive increments.
    pub contraction: Vec<f64>,
    /// Lagrange multiplier of the mean-zero pressure constraint.
    pub multiplier: f64,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Slope of `log r_{m+1}` against `log r_m` over the last three residuals
    /// still above `floor`. Close to 2 in the quadratic regime.
    pub fn observed_order(&self, floor: f64) -> Option<f64> {
        let r: Vec<f64> = self.residual_history.iter().copied().filter(|&v| v > floor).collect();
        if r.len() < 3 {
            return None;
        }
        let n = r.len();
        Some((r[n - 1] / r[n - 2]).ln() / (r[n - 2] / r[n - 3]).ln())
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_condition(&self) -> f64 {
        self.condition_estimates.iter().copied().fold(0.0, f64::max)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

fn initial_vector(space: &Arc<SpaceTriple>, loads: &LoadData, guess: &InitialGuess) -> Result<Vec<f64>, SolverError> {
    Ok(match guess {
        InitialGuess::Zero => vec![0.0; space.n_total()],
        InitialGuess::InterpolatedData => dirichlet_data(space, loads).values,
        InitialGuess::State(s) => {
            if !Arc::ptr_eq(&s.space, space) && s.space.n_total() != space.n_total() {
                return Err(SolverError::Dimension("initial state lives on a different space".into()));
            }
            s.to_vector()
        }
    })
}

/// Nonlinear residual including the pressure multiplier: pressure rows carry
/// `+ λ m_i`, and the constraint residual `∫ p_h` is appended.
struct Residual<'a> {
    asm: &'a Assembler,
    params: &'a PhysParams,
    loads: &'a LoadData,
    gauge: Option<&'a PressureConstraint>,
}

impl Residual<'_> {
    fn augment(&self, r: &mut Vec<f64>, x: &[f64], lambda: f64) {
        if let Some(c) = self.gauge {
            for (i, m) in c.mass.iter().enumerate() {
                r[c.offset + i] += lambda * m;
            }
            r.push(c.integral(x));
        }
    }

    fn eval(&self, x: &[f64], lambda: f64) -> Result<Vec<f64>, SolverError> {
        let state = SystemState::from_vector(self.asm.space().clone(), x)?;
        let mut r = self.asm.residual(&state, self.params, self.loads)?;
        self.augment(&mut r, x, lambda);
        Ok(r)
    }

    /// Newton system for the augmented unknowns `(x, λ)` and the augmented
    /// residual at the current point.
    fn system(&self, x: &[f64], lambda: f64) -> Result<(BlockSystem, Vec<f64>), SolverError> {
        let state = SystemState::from_vector(self.asm.space().clone(), x)?;
        let (mut sys, mut r) = self.asm.newton_system(&state, self.params, self.loads)?;
        self.augment(&mut r, x, lambda);
        match self.gauge {
            Some(c) => {
                for (i, m) in c.mass.iter().enumerate() {
                    sys.rhs[c.offset + i] -= lambda * m;
                }
                let bordered = apply_pressure_gauge(&sys, PressureGauge::MeanZero, c, -c.integral(x));
                Ok((bordered, r))
            }
            None => Ok((sys, r)),
        }
    }
}

/// Evaluates `eval(t)` for `t = t0, t0/2, …` down to `floor` and returns the
/// first step that reduces the residual below `current`, or the floor step.
/// A charge-law overflow at a trial point counts as an increase.
fn backtrack<T>(
    t0: f64,
    floor: f64,
    current: f64,
    mut eval: impl FnMut(f64) -> Result<(T, f64), SolverError>,
) -> Result<(f64, T, f64), SolverError> {
    let mut t = t0;
    loop {
        let at_floor = t <= floor * (1.0 + 1e-12);
        match eval(t) {
            Ok((v, r)) if r < current || at_floor => return Ok((t, v, r)),
            Ok(_) => {}
            Err(SolverError::Assembly(AssemblyError::ChargeOverflow { .. })) if !at_floor => {}
            Err(e) => return Err(e),
        }
        t = (t / 2.0).max(floor);
    }
}

/// Monolithic Newton iteration on `(u, p, ψ)`.
pub fn newton_solve(
    loads: &LoadData,
    params: &PhysParams,
    space: Arc<SpaceTriple>,
    cfg: &NewtonConfig,
) -> Result<(SystemState, SolveReport), SolverError> {
    newton_solve_with(&Assembler::new(space)?, loads, params, cfg)
}

/// [`newton_solve`] with a caller-provided assembler.
pub fn newton_solve_with(
    asm: &Assembler,
    loads: &LoadData,
    params: &PhysParams,
    cfg: &NewtonConfig,
) -> Result<(SystemState, SolveReport), SolverError> {
    cfg.validate()?;
    let start = Instant::now();
    let space = asm.space().clone();
    let constraint = match space.gauge() {
        PressureGauge::MeanZero => Some(PressureConstraint::new(&space)?),
        PressureGauge::None => None,
    };
    let res = Residual { asm, params, loads, gauge: constraint.as_ref() };
    let n = space.n_total();
    let mut x = initial_vector(&space, loads, &cfg.initial_guess)?;
    let mut lambda = 0.0;
    let mut solver = LinearSolver::with_points(space.global_points());
    let mut report = SolveReport::default();

    let mut r0 = f64::NAN;
    loop {
        let (sys, r) = res.system(&x, lambda)?;
        let rn = inf_norm(&r);
        if report.residual_history.is_empty() {
            report.residual_history.push(rn);
            r0 = rn;
            if rn <= cfg.abs_tol {
                report.converged = true;
                break;
            }
        }
        if report.iterations >= cfg.max_iter {
            break;
        }
        let sol = solver.solve(&sys.matrix, &sys.rhs)?;
        report.condition_estimates.push(sol.condition);
        let dl = if constraint.is_some() { sol.x[n] } else { 0.0 };
        let (t, xt, rt) = backtrack(cfg.damping, cfg.min_damping, rn, |t| {
            let xt: Vec<f64> = x.iter().zip(&sol.x).map(|(a, d)| a + t * d).collect();
            let r = res.eval(&xt, lambda + t * dl)?;
            let rn = inf_norm(&r);
            Ok((xt, rn))
        })?;
        x = xt;
        lambda += t * dl;
        report.iterations += 1;
        report.step_lengths.push(t);
        report.residual_history.push(rt);
        if !rt.is_finite() {
            break;
        }
        if rt <= cfg.abs_tol || rt <= cfg.rel_tol * r0 {
            report.converged = true;
            break;
        }
    }
    report.multiplier = lambda;
    report.wall_time = start.elapsed();
    Ok((SystemState::from_vector(space, &x)?, report))
}

/// Fixed-point iteration alternating a Stokes solve with frozen potential and
/// a Newton solve for the potential with frozen velocity.
pub fn picard_solve(
    loads: &LoadData,
    params: &PhysParams,
    space: Arc<SpaceTriple>,
    cfg: &PicardConfig,
) -> Result<(SystemState, SolveReport), SolverError> {
    picard_solve_with(&Assembler::new(space)?, loads, params, cfg)
}

/// [`picard_solve`] with a caller-provided assembler.
pub fn picard_solve_with(
    asm: &Assembler,
    loads: &LoadData,
    params: &PhysParams,
    cfg: &PicardConfig,
) -> Result<(SystemState, SolveReport), SolverError> {
    cfg.inner.validate()?;
    if !(cfg.tol > 0.0) || cfg.max_outer == 0 {
        return Err(SolverError::Config("picard tolerance must be positive and max_outer at least 1".into()));
    }
    let start = Instant::now();
    let space = asm.space().clone();
    let constraint = match space.gauge() {
        PressureGauge::MeanZero => Some(PressureConstraint::new(&space)?),
        PressureGauge::None => None,
    };
    let res = Residual { asm, params, loads, gauge: constraint.as_ref() };
    let n = space.n_total();
    let flow = 0..space.psi_offset();
    let pot = space.psi_offset()..n;
    let pot_idx: Vec<usize> = pot.clone().collect();

    // Dirichlet values are imposed up front so eliminated columns of the
    // frozen block never carry a correction.
    let dd = dirichlet_data(&space, loads);
    let mut x = initial_vector(&space, loads, &cfg.inner.initial_guess)?;
    for i in 0..n {
        if dd.mask[i] {
            x[i] = dd.values[i];
        }
    }
    let mut lambda = 0.0;
    let points = space.global_points();
    let mut flow_solver = LinearSolver::with_points(points[flow.clone()].to_vec());
    let mut pot_solver = LinearSolver::with_points(points[pot.clone()].to_vec());
    let mut report = SolveReport::default();
    report.residual_history.push(inf_norm(&res.eval(&x, lambda)?));

    for _ in 0..cfg.max_outer {
        let u_old = x[..space.p_offset()].to_vec();

        // Flow step: the (u, p) equations are affine in (u, p) for fixed ψ,
        // so one Newton step on that block solves them exactly.
        let (sys, _) = res.system(&x, lambda)?;
        let mut idx: Vec<usize> = flow.clone().collect();
        if constraint.is_some() {
            idx.push(n);
        }
        let sub = sub_system(&sys, &idx);
        let sol = flow_solver.solve(&sub.0, &sub.1)?;
        report.condition_estimates.push(sol.condition);
        for (k, &i) in idx.iter().enumerate() {
            if i == n {
                lambda += sol.x[k];
            } else {
                x[i] += sol.x[k];
            }
        }

        // Potential step: Newton on the ψ block, warm-started.
        let mut pr0 = f64::NAN;
        for it in 0..=cfg.inner.max_iter {
            let (sys, r) = res.system(&x, lambda)?;
            let rn = inf_norm(&r[pot.clone()]);
            if it == 0 {
                pr0 = rn;
            }
            if rn <= cfg.inner.abs_tol || (it > 0 && rn <= cfg.inner.rel_tol * pr0) || it == cfg.inner.max_iter {
                break;
            }
            let (a, b) = sub_system(&sys, &pot_idx);
            let sol = pot_solver.solve(&a, &b)?;
            report.condition_estimates.push(sol.condition);
            let (_, xt, _) = backtrack(cfg.inner.damping, cfg.inner.min_damping, rn, |t| {
                let mut xt = x.clone();
                for (k, i) in pot.clone().enumerate() {
                    xt[i] += t * sol.x[k];
                }
                let r = res.eval(&xt, lambda)?;
                let rn = inf_norm(&r[pot.clone()]);
                Ok((xt, rn))
            })?;
            x = xt;
        }

        report.iterations += 1;
        let mut diff = SystemState::zeros(space.clone());
        diff.u.iter_mut().zip(x.iter().zip(&u_old)).for_each(|(d, (a, b))| *d = a - b);
        let inc = triple_norm(&diff)?.0;
        if let Some(&prev) = report.increments.last() {
            if prev > 0.0 {
                report.contraction.push(inc / prev);
            }
        }
        report.increments.push(inc);
        report.residual_history.push(inf_norm(&res.eval(&x, lambda)?));
        if !inc.is_finite() {
            break;
        }
        if inc <= cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.multiplier = lambda;
    report.wall_time = start.elapsed();
    Ok((SystemState::from_vector(space, &x)?, report))
}

/// Sub-system on the sorted index set `idx`.
fn sub_system(sys: &BlockSystem, idx: &[usize]) -> (crate::assembly::CsrMatrix, Vec<f64>) {
    let n = sys.matrix.n_rows;
    let mut map = vec![usize::MAX; n];
    for (k, &i) in idx.iter().enumerate() {
        map[i] = k;
    }
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for &i in idx {
        let (cols, vals) = sys.matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if map[j] != usize::MAX {
                col_idx.push(map[j]);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    let m = idx.len();
    let a = crate::assembly::CsrMatrix { n_rows: m, n_cols: m, row_ptr, col_idx, values };
    (a, idx.iter().map(|&i| sys.rhs[i]).collect())
}
