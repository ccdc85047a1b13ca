//! Plain-text mesh format.
//!
//! ```text
//! ncells nverts nfacets
//! x y                  (nverts lines)
//! v0 v1 v2             (ncells lines, refinement edge opposite v2)
//! v0 v1 tag            (nfacets tagged boundary facets)
//! ```

use super::{local_edge_vertices, BoundaryTag, Mesh, MeshError};
use crate::scalar::Scalar;
use std::collections::HashMap;
use std::io::{BufRead, Write};

pub fn write_mesh<T: Scalar, W: Write>(mesh: &Mesh<T>, mut out: W) -> Result<(), MeshError> {
    let tagged: Vec<usize> = (0..mesh.n_facets()).filter(|&f| mesh.boundary_tag(f).is_some()).collect();
    writeln!(out, "{} {} {}", mesh.n_cells(), mesh.n_vertices(), tagged.len())?;
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e}", p[0].as_f64(), p[1].as_f64())?;
    }
    for (k, c) in mesh.cells().iter().enumerate() {
        // Rotate so the refinement edge is (v0, v1); rotation keeps the orientation.
        let e = mesh.refinement_edge(k) as usize;
        let [i, j] = local_edge_vertices(e);
        writeln!(out, "{} {} {}", c[i], c[j], c[e])?;
    }
    for f in tagged {
        let [a, b] = mesh.facets()[f].vertices;
        writeln!(out, "{} {} {}", a, b, mesh.boundary_tag(f).unwrap())?;
    }
    Ok(())
}

pub fn read_mesh<T: Scalar, R: BufRead>(input: R) -> Result<Mesh<T>, MeshError> {
    let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let mut next = |what: &str| -> Result<String, MeshError> {
        lines
            .next()
            .ok_or_else(|| MeshError::Parse(format!("unexpected end of file reading {what}")))?
            .map_err(MeshError::from)
    };
    let header = parse_fields::<usize>(&next("header")?, 3)?;
    let (nc, nv, nf) = (header[0], header[1], header[2]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let xy = parse_fields::<f64>(&next("vertex")?, 2)?;
        vertices.push([T::lit(xy[0]), T::lit(xy[1])]);
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let c = parse_fields::<usize>(&next("cell")?, 3)?;
        cells.push([c[0], c[1], c[2]]);
    }
    let mut tags = HashMap::with_capacity(nf);
    for _ in 0..nf {
        let line = next("facet")?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(MeshError::Parse(format!("facet line `{line}`")));
        }
        let a: usize = parts[0].parse().map_err(|_| MeshError::Parse(format!("facet line `{line}`")))?;
        let b: usize = parts[1].parse().map_err(|_| MeshError::Parse(format!("facet line `{line}`")))?;
        let tag: BoundaryTag = parts[2].parse()?;
        tags.insert(super::edge_key(a, b), tag);
    }
    let refinement = vec![2u8; cells.len()];
    Mesh::from_tagged_cells(vertices, cells, &tags, Some(refinement), 0)
}

fn parse_fields<F: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<F>, MeshError> {
    let v: Result<Vec<F>, _> = line.split_whitespace().map(str::parse).collect();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(MeshError::Parse(format!("expected {n} fields in `{line}`"))),
    }
}
