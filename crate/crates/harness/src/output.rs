//! CSV tables, legacy VTK snapshots and run metadata.
//!
//! Floats are written with 17 significant digits so that files round-trip
//! exactly and compare byte for byte between runs.

use crate::study::{AdaptiveHistoryRow, ConvergenceRow};
use crate::HarnessError;
use spb_core::estimator::EstimatorReport;
use spb_core::fespace::SystemState;
use spb_core::mesh::{write_mesh, Mesh};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const CONVERGENCE_HEADER: &str =
    "level,h,dofs,err_u,oc_u,err_p,oc_p,err_psi,oc_psi,err_total,oc_total,estimator,oc_estimator,effectivity";

pub const ADAPTIVE_HEADER: &str =
    "round,dofs,cells,vertices,estimator,oscillation,total_error,effectivity,marked,h_max,h_min";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), num)
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            num(r.h),
            r.dofs,
            num(r.errors[0]),
            opt(r.orders[0]),
            num(r.errors[1]),
            opt(r.orders[1]),
            num(r.errors[2]),
            opt(r.orders[2]),
            num(r.total),
            opt(r.total_order),
            num(r.estimator),
            opt(r.estimator_order),
            num(r.effectivity),
        )?;
    }
    Ok(())
}

pub fn write_adaptive_csv<W: Write>(rows: &[AdaptiveHistoryRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{ADAPTIVE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.dofs,
            r.cells,
            r.vertices,
            num(r.estimator),
            num(r.oscillation),
            opt(r.total_error),
            opt(r.effectivity),
            r.marked,
            num(r.h_max),
            num(r.h_min),
        )?;
    }
    Ok(())
}

/// Legacy ASCII VTK unstructured grid of the mesh vertices and cells, with
/// the vertex values of `u` (padded to 3 components), `p` and `psi`, and the
/// cell indicator `psi_K` when a report is given.
///
/// Vertex values are read from the vertex dofs, which every Lagrange space
/// numbers first and in vertex order.
pub fn write_vtk<W: Write>(state: &SystemState, report: Option<&EstimatorReport>, mut out: W) -> io::Result<()> {
    let space = &state.space;
    let mesh = space.mesh();
    let nv = mesh.n_vertices();
    let nc = mesh.n_cells();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "spb fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", num(p[0]), num(p[1]), num(0.0))?;
    }
    writeln!(out, "CELLS {nc} {}", 4 * nc)?;
    for c in mesh.cells() {
        writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {nv}")?;
    writeln!(out, "VECTORS u double")?;
    let n_u = space.n_u();
    for v in 0..nv {
        writeln!(out, "{} {} {}", num(state.u[v]), num(state.u[n_u + v]), num(0.0))?;
    }
    for (name, values) in [("p", &state.p), ("psi", &state.psi)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in &values[..nv] {
            writeln!(out, "{}", num(*v))?;
        }
    }
    if let Some(report) = report {
        writeln!(out, "CELL_DATA {nc}")?;
        writeln!(out, "SCALARS psi_K double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for i in &report.indicators {
            writeln!(out, "{}", num(i.psi()))?;
        }
    }
    Ok(())
}

/// `key=value` lines, in the given order.
pub fn write_metadata<W: Write>(entries: &[(String, String)], mut out: W) -> io::Result<()> {
    for (k, v) in entries {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `write`.
pub fn write_file<E>(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>) -> Result<(), HarnessError>
where
    HarnessError: From<E>,
{
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_mesh_file(mesh: &Mesh<f64>, path: &Path) -> Result<(), HarnessError> {
    write_file(path, |w| write_mesh(mesh, w))
}
