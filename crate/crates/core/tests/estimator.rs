mod common;

use common::*;
use spb_core::assembly::{LoadData, PhysParams};
use spb_core::estimator::{compute_indicators, mark_max_strategy, Estimator, EstimatorOptions, EstimatorReport};
use spb_core::fespace::{PressureGauge, SystemState};
use spb_core::mesh::{refine_uniform, BoundaryRule, BoundaryTag};
use spb_core::solver::{newton_solve, NewtonConfig};

fn solve(n: usize, prm: &PhysParams, ld: &LoadData) -> SystemState {
    let s = space(square(n, &mixed_rule()), PressureGauge::MeanZero);
    let (st, rep) = newton_solve(ld, prm, s, &NewtonConfig::default()).unwrap();
    assert!(rep.converged);
    st
}

#[test]
fn zero_state_and_data_give_zero_indicators() {
    let s = space(square(3, &mixed_rule()), PressureGauge::MeanZero);
    let st = SystemState::zeros(s.clone());
    let prm = params();
    let ld = LoadData::zero();
    let est = Estimator::new(&st, &prm, &ld).unwrap();
    for k in 0..s.mesh().n_cells() {
        let r = est.element_residuals(k).unwrap();
        assert!(r.r.iter().all(|v| *v == [0.0; 2]) && r.r1.iter().all(|v| *v == 0.0) && r.r2.iter().all(|v| *v == 0.0));
    }
    let rep = est.report().unwrap();
    assert_eq!((rep.psi, rep.theta), (0.0, 0.0));
    assert!(mark_max_strategy(&rep, 0.5).unwrap().is_empty());
}

#[test]
fn quadratic_velocity_has_cellwise_constant_laplacian() {
    let s = space(square(3, &mixed_rule()), PressureGauge::MeanZero);
    let ex = trigonometric();
    let st = SystemState::interpolate(s.clone(), ex.u, ex.p, ex.psi);
    let prm = params();
    let ld = loads_for(&ex, &prm);
    let est = Estimator::new(&st, &prm, &ld).unwrap();
    for k in 0..s.mesh().n_cells() {
        let r = est.element_residuals(k).unwrap();
        let l0 = r.lap_u[0];
        for l in &r.lap_u {
            assert!((l[0] - l0[0]).abs() < 1e-9 && (l[1] - l0[1]).abs() < 1e-9);
        }
        assert!(r.lap_psi.iter().all(|v| (v - r.lap_psi[0]).abs() < 1e-9));
    }
}

#[test]
fn affine_potential_has_no_flux_jump() {
    let s = space(square(3, &mixed_rule()), PressureGauge::MeanZero);
    let st = SystemState::interpolate(s.clone(), |_| [0.0; 2], |_| 0.0, |x| 2.0 * x[0] - 0.5 * x[1] + 1.0);
    let prm = params();
    let ld = LoadData::zero();
    let est = Estimator::new(&st, &prm, &ld).unwrap();
    let mesh = s.mesh();
    for f in 0..mesh.n_facets() {
        let r = est.facet_residuals(f).unwrap();
        assert!(r.r1_e.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn unit_kink_across_shared_edge() {
    let s = space(square(1, &mixed_rule()), PressureGauge::MeanZero);
    let mesh = s.mesh();
    let f = (0..mesh.n_facets()).find(|&f| !mesh.facets()[f].is_boundary()).unwrap();
    let [a, b] = mesh.facets()[f].vertices;
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let h = mesh.facet_length(f);
    let nu = [-(pb[1] - pa[1]) / h, (pb[0] - pa[0]) / h];
    // ψ = max(0, (x - a)·ν): gradient jumps by the unit vector ν.
    let psi = move |x: [f64; 2]| ((x[0] - pa[0]) * nu[0] + (x[1] - pa[1]) * nu[1]).max(0.0);
    let st = SystemState::interpolate(s.clone(), |_| [0.0; 2], |_| 0.0, psi);
    let mut prm = params();
    prm.eps = 1.0;
    let ld = LoadData::zero();
    let est = Estimator::new(&st, &prm, &ld).unwrap();
    let [re, r1e] = est.facet_residuals(f).unwrap().norms_sq();
    assert!(re.abs() < 1e-28);
    assert!((r1e - h / 4.0).abs() < 1e-13, "{r1e} vs {}", h / 4.0);
}

#[test]
fn boundary_facets_have_zero_jumps_and_navier_check() {
    let s = space(square(2, &mixed_rule()), PressureGauge::MeanZero);
    let ex = trigonometric();
    let st = SystemState::interpolate(s.clone(), ex.u, ex.p, ex.psi);
    let prm = params();
    let ld = loads_for(&ex, &prm);
    let est = Estimator::new(&st, &prm, &ld).unwrap();
    let mesh = s.mesh();
    for f in 0..mesh.n_facets() {
        if mesh.facets()[f].is_boundary() {
            let r = est.facet_residuals(f).unwrap();
            assert!(r.r_e.iter().all(|v| *v == [0.0; 2]) && r.r1_e.iter().all(|v| *v == 0.0));
        }
        match mesh.boundary_tag(f) {
            Some(BoundaryTag::Navier) => assert!(est.boundary_residuals(f).is_ok()),
            _ => assert!(est.boundary_residuals(f).is_err()),
        }
    }
}

#[test]
fn exact_slip_state_has_zero_normal_trace_residual() {
    let s = space(square(3, &mixed_rule()), PressureGauge::MeanZero);
    let ex = polynomial();
    let st = SystemState::interpolate(s.clone(), ex.u, ex.p, ex.psi);
    let prm = params();
    let ld = loads_for(&ex, &prm);
    let est = Estimator::new(&st, &prm, &ld).unwrap();
    for f in s.mesh().facets_with_tag(BoundaryTag::Navier) {
        let r = est.boundary_residuals(f).unwrap();
        assert!(r.r2.iter().all(|v| v.abs() < 1e-13));
        assert!(r.r1.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn exact_reproduction_gives_vanishing_estimator() {
    let prm = params();
    let ex = polynomial_flow();
    let ld = loads_for(&ex, &prm);
    let st = solve(3, &prm, &ld);
    let rep = compute_indicators(&st, &prm, &ld).unwrap();
    assert!(rep.psi <= 1e-9, "{}", rep.psi);
    assert!(rep.theta <= 1e-12);
}

#[test]
fn global_estimator_is_sum_of_local_ones() {
    let prm = params();
    let ld = loads_for(&trigonometric(), &prm);
    let st = solve(4, &prm, &ld);
    let rep = compute_indicators(&st, &prm, &ld).unwrap();
    let sum: f64 = rep.indicators.iter().map(|i| i.psi_r_sq + i.psi_e_sq + i.psi_j_sq).sum();
    assert!((rep.psi * rep.psi - sum).abs() <= 1e-12 * sum);
    for i in &rep.indicators {
        assert!(i.psi_r_sq >= 0.0 && i.psi_e_sq >= 0.0 && i.psi_j_sq >= 0.0 && i.osc_sq >= 0.0);
        assert_eq!(i.psi() * i.psi(), (i.psi_r_sq + i.psi_e_sq + i.psi_j_sq).sqrt().powi(2));
    }
    assert!(rep.theta > 0.0);
}

#[test]
fn swapping_facet_sides_changes_nothing() {
    let prm = params();
    let ld = loads_for(&trigonometric(), &prm);
    let st = solve(3, &prm, &ld);
    let a = Estimator::new(&st, &prm, &ld).unwrap().report().unwrap();
    let opts = EstimatorOptions { swap_facet_sides: true };
    let b = Estimator::new(&st, &prm, &ld).unwrap().with_options(opts).report().unwrap();
    for (x, y) in a.indicators.iter().zip(&b.indicators) {
        assert!((x.psi_e_sq - y.psi_e_sq).abs() <= 1e-13 * x.psi_e_sq.max(1e-30));
    }
    assert!((a.psi - b.psi).abs() <= 1e-13 * a.psi);
}

#[test]
fn residuals_decay_under_uniform_refinement() {
    let prm = params();
    let ld = loads_for(&trigonometric(), &prm);
    let mut mesh = square(2, &mixed_rule());
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..3 {
        mesh = refine_uniform(&mesh);
        let s = space(mesh.clone(), PressureGauge::MeanZero);
        let (st, _) = newton_solve(&ld, &prm, s.clone(), &NewtonConfig::default()).unwrap();
        let est = Estimator::new(&st, &prm, &ld).unwrap();
        let m = s.mesh();
        let rk: f64 = (0..m.n_cells())
            .map(|k| m.cell_diameter(k).powi(2) * est.element_residuals(k).unwrap().norms_sq()[0])
            .sum::<f64>()
            .sqrt();
        let trace: f64 = m
            .facets_with_tag(BoundaryTag::Navier)
            .into_iter()
            .map(|f| est.boundary_residuals(f).unwrap().norms_sq()[1] / m.facet_length(f))
            .sum();
        if let Some((rk0, tr0)) = prev {
            assert!((rk0 / rk).log2() >= 1.0 - 0.1, "element residual rate {}", (rk0 / rk).log2());
            assert!(tr0 / trace >= 3.0, "trace residual ratio {}", tr0 / trace);
        }
        prev = Some((rk, trace));
    }
}

#[test]
fn larger_penalty_tightens_normal_trace() {
    let ex = trigonometric();
    let norm_trace = |gamma: f64| {
        let prm = PhysParams { gamma, ..params() };
        let ld = loads_for(&ex, &prm);
        let st = solve(4, &prm, &ld);
        let est = Estimator::new(&st, &prm, &ld).unwrap();
        st.space
            .mesh()
            .facets_with_tag(BoundaryTag::Navier)
            .into_iter()
            .map(|f| est.boundary_residuals(f).unwrap().norms_sq()[1])
            .sum::<f64>()
    };
    assert!(norm_trace(20.0) < norm_trace(10.0));
}

#[test]
fn indicators_do_not_depend_on_thread_count() {
    let prm = params();
    let ld = loads_for(&trigonometric(), &prm);
    let st = solve(4, &prm, &ld);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| compute_indicators(&st, &prm, &ld).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.indicators, b.indicators);
    assert_eq!(a.psi.to_bits(), b.psi.to_bits());
}

#[test]
fn csv_dump_has_one_row_per_cell() {
    let prm = params();
    let ld = loads_for(&trigonometric(), &prm);
    let st = solve(2, &prm, &ld);
    let rep = compute_indicators(&st, &prm, &ld).unwrap();
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cell_id,psi_R,psi_e,psi_J,psi_K,osc");
    assert_eq!(lines.len(), rep.indicators.len() + 1);
    let row: Vec<f64> = lines[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[3], rep.indicators[0].psi());
}

fn report_from(values: &[f64]) -> EstimatorReport {
    let s = space(square(1, &BoundaryRule::uniform(BoundaryTag::Dirichlet)), PressureGauge::MeanZero);
    let st = SystemState::zeros(s);
    let prm = params();
    let ld = LoadData::zero();
    let mut rep = compute_indicators(&st, &prm, &ld).unwrap();
    rep.indicators = values.iter().map(|&v| spb_core::estimator::ElementIndicator { psi_r_sq: v * v, ..Default::default() }).collect();
    rep
}

#[test]
fn maximum_strategy_marking() {
    let equal = report_from(&[0.5; 6]);
    assert_eq!(mark_max_strategy(&equal, 0.5).unwrap().len(), 6);
    let mixed = report_from(&[0.1, 0.9, 0.5, 0.9, 0.44]);
    assert_eq!(mark_max_strategy(&mixed, 0.999_999).unwrap().into_iter().collect::<Vec<_>>(), vec![1, 3]);
    assert_eq!(mark_max_strategy(&mixed, 0.5).unwrap().into_iter().collect::<Vec<_>>(), vec![1, 2, 3]);
    for theta in [0.0, 1.0, -0.3, f64::NAN] {
        assert!(mark_max_strategy(&mixed, theta).is_err());
    }
}
