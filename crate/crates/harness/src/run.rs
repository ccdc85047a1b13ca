//! The `converge`, `adapt` and `solve-once` commands.

use crate::cases::CaseSpec;
use crate::config::RunConfig;
use crate::output::{write_adaptive_csv, write_convergence_csv, write_file, write_mesh_file, write_metadata, write_vtk};
use crate::study::{
    run_adaptive, run_convergence, solve_level, AdaptiveOptions, ConvergenceOptions, LevelSolution, SolveSettings,
};
use crate::HarnessError;
use spb_core::mesh::refine_uniform;
use std::fs;
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Converge,
    Adapt,
    SolveOnce,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::Adapt => "adapt",
            Command::SolveOnce => "solve-once",
        }
    }
}

/// Runs `command` and writes its outputs under `cfg.out_dir`. Partial results
/// are written before a failure is returned.
pub fn run(command: Command, cfg: &RunConfig) -> Result<(), HarnessError> {
    fs::create_dir_all(&cfg.out_dir)?;
    match command {
        Command::Converge => converge(cfg),
        Command::Adapt => adapt(cfg),
        Command::SolveOnce => solve_once(cfg),
    }
}

fn settings(cfg: &RunConfig) -> SolveSettings {
    SolveSettings { kind: cfg.solver, ..Default::default() }
}

fn case_for(cfg: &RunConfig, mu: Option<f64>) -> Result<CaseSpec, HarnessError> {
    let mut case = CaseSpec::new(cfg.case, &cfg.overrides(mu))?;
    if let Some(g) = cfg.gauge {
        case.gauge = g;
    }
    Ok(case)
}

fn single_mu(cfg: &RunConfig, command: Command) -> Result<Option<f64>, HarnessError> {
    match cfg.mu_values().as_slice() {
        [mu] => Ok(*mu),
        _ => Err(HarnessError::Usage(format!("{} takes a single value of mu", command.as_str()))),
    }
}

fn metadata(
    cfg: &RunConfig,
    command: Command,
    case: &CaseSpec,
    extra: Vec<(String, String)>,
    status: &Result<(), HarnessError>,
) -> Vec<(String, String)> {
    let mut m = vec![("command".to_string(), command.as_str().to_string())];
    m.extend(cfg.metadata());
    let p = &case.params;
    for (k, v) in [("mu", p.mu), ("eps", p.eps), ("beta", p.beta), ("gamma", p.gamma), ("k0", p.k0), ("k1", p.k1)] {
        m.push((format!("param.{k}"), v.to_string()));
    }
    m.push(("param.gauge".into(), crate::study::gauge_name(case.gauge).into()));
    for a in &case.assumptions {
        m.push(("assumption".into(), (*a).to_string()));
    }
    m.extend(extra);
    let status = match status {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    m.push(("status".into(), status));
    m
}

fn write_meta(path: &Path, entries: &[(String, String)]) -> Result<(), HarnessError> {
    write_file(path, |w| write_metadata(entries, w))
}

fn converge(cfg: &RunConfig) -> Result<(), HarnessError> {
    let opts = ConvergenceOptions {
        levels: cfg.levels.unwrap_or(6),
        degree: cfg.degree,
        max_dofs: cfg.max_dofs,
        settings: settings(cfg),
    };
    let mut first_failure = None;
    for mu in cfg.mu_values() {
        let case = case_for(cfg, mu)?;
        if !case.is_manufactured() {
            return Err(HarnessError::Usage(format!("case {} has no exact solution to converge to", case.name)));
        }
        let label = case.params.mu.to_string();
        let study = run_convergence(&case, &opts, |_, r| {
            eprintln!(
                "mu={label} level {}: h={:.4e} dofs={} error={:.4e} estimator={:.4e}",
                r.level, r.h, r.dofs, r.total, r.estimator
            );
            Ok(())
        });
        write_file(&cfg.out_dir.join(format!("convergence_mu{label}.csv")), |w| write_convergence_csv(&study.rows, w))?;
        let status = study.failure.map_or(Ok(()), Err);
        let extra = vec![("levels_completed".to_string(), study.rows.len().to_string())];
        write_meta(&cfg.out_dir.join(format!("metadata_mu{label}.txt")), &metadata(cfg, Command::Converge, &case, extra, &status))?;
        if let Err(e) = status {
            eprintln!("mu={label}: {e}");
            first_failure.get_or_insert(e);
        }
    }
    first_failure.map_or(Ok(()), Err)
}

fn write_snapshot(dir: &Path, tag: &str, sol: &LevelSolution) -> Result<(), HarnessError> {
    write_mesh_file(sol.mesh(), &dir.join(format!("mesh_{tag}.txt")))?;
    write_file(&dir.join(format!("fields_{tag}.vtk")), |w| write_vtk(&sol.state, Some(&sol.estimate), w))?;
    write_file(&dir.join(format!("indicators_{tag}.csv")), |w| sol.estimate.write_csv(w))
}

fn adapt(cfg: &RunConfig) -> Result<(), HarnessError> {
    let case = case_for(cfg, single_mu(cfg, Command::Adapt)?)?;
    let opts = AdaptiveOptions {
        theta: cfg.theta,
        max_dofs: cfg.max_dofs.unwrap_or(AdaptiveOptions::default().max_dofs),
        max_rounds: cfg.levels,
        degree: cfg.degree,
        settings: settings(cfg),
    };
    let run = run_adaptive(&case, &opts, |sol, row| {
        eprintln!(
            "round {}: dofs={} estimator={:.4e} marked={}",
            row.round, row.dofs, row.estimator, row.marked
        );
        write_snapshot(&cfg.out_dir, &format!("round{:03}", row.round), sol)
    });
    write_file(&cfg.out_dir.join("adaptive_history.csv"), |w| write_adaptive_csv(&run.rows, w))?;
    let status = run.failure.map_or(Ok(()), Err);
    let extra = vec![("rounds_completed".to_string(), run.rows.len().to_string())];
    write_meta(&cfg.out_dir.join("metadata.txt"), &metadata(cfg, Command::Adapt, &case, extra, &status))?;
    status
}

fn solve_once(cfg: &RunConfig) -> Result<(), HarnessError> {
    let case = case_for(cfg, single_mu(cfg, Command::SolveOnce)?)?;
    let mut extra = Vec::new();
    let mut run = || -> Result<(), HarnessError> {
        let levels = cfg.levels.unwrap_or(1);
        if levels == 0 {
            return Err(HarnessError::Usage("levels must be at least 1".into()));
        }
        let mut mesh = case.initial_mesh()?;
        for _ in 1..levels {
            mesh = refine_uniform(&mesh);
        }
        let sol = solve_level(&case, Arc::new(mesh), cfg.degree, &settings(cfg))?;
        write_snapshot(&cfg.out_dir, "solution", &sol)?;
        extra.push(("dofs".to_string(), sol.dofs().to_string()));
        extra.push(("iterations".into(), sol.report.iterations.to_string()));
        extra.push(("estimator".into(), format!("{:.16e}", sol.estimate.psi)));
        extra.push(("oscillation".into(), format!("{:.16e}", sol.estimate.theta)));
        if let Some(e) = &sol.errors {
            extra.push(("error_total".into(), format!("{:.16e}", e.total)));
            extra.push(("effectivity".into(), format!("{:.16e}", sol.estimate.psi / e.total)));
        }
        Ok(())
    };
    let status = run();
    write_meta(&cfg.out_dir.join("metadata.txt"), &metadata(cfg, Command::SolveOnce, &case, extra, &status))?;
    status
}
