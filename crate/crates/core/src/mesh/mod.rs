//! Conforming triangulations with tagged boundary facets.
//!
//! A [`Mesh`] is immutable once built: refinement routines return a new mesh.
//! Interior facets are oriented with respect to their lower-indexed adjacent
//! cell (`K⁻`), which fixes the sign of every jump evaluated on the mesh.

mod generate;
mod io;
mod refine;

pub use generate::{make_named_domain, make_rect_mesh, BoundaryRule, DomainKind, DomainSpec, PIPE_HEIGHT, PIPE_LENGTH};
pub use io::{read_mesh, write_mesh};
pub use refine::{refine_bisect, refine_uniform};

use crate::scalar::{self, Point2, Scalar};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Boundary condition attached to a boundary facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Strongly imposed velocity data.
    Dirichlet,
    /// Slip with friction, imposed weakly.
    Navier,
    /// Natural (traction free) outflow.
    DoNothing,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Navier => "navier",
            BoundaryTag::DoNothing => "do_nothing",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryTag {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dirichlet" => Ok(BoundaryTag::Dirichlet),
            "navier" => Ok(BoundaryTag::Navier),
            "do_nothing" => Ok(BoundaryTag::DoNothing),
            other => Err(MeshError::Parse(format!("unknown boundary tag `{other}`"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("malformed mesh file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An edge of the triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Facet {
    /// Endpoints, sorted ascending.
    pub vertices: [usize; 2],
    /// Lower-indexed adjacent cell `K⁻` and its local edge index.
    pub minus: (usize, u8),
    /// Second adjacent cell `K⁺` for interior facets.
    pub plus: Option<(usize, u8)>,
}

impl Facet {
    #[inline]
    pub fn is_boundary(&self) -> bool {
        self.plus.is_none()
    }
}

/// Normal, tangent and size information of a facet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FacetFrame<T> {
    /// Unit normal pointing out of `K⁻` (out of the domain on the boundary).
    pub normal: Point2<T>,
    /// `normal` rotated by +90°.
    pub tangent: Point2<T>,
    /// Facet length.
    pub h_e: T,
    /// Diameter of `K⁻`.
    pub h_k: T,
}

/// Conforming, positively oriented triangulation.
#[derive(Clone, Debug)]
pub struct Mesh<T> {
    vertices: Vec<Point2<T>>,
    cells: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    /// Local edge `i` of a cell is opposite its local vertex `i`.
    cell_facets: Vec<[usize; 3]>,
    boundary_tags: Vec<Option<BoundaryTag>>,
    refinement_edge: Vec<u8>,
    generation: u32,
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Local vertex pair of local edge `i` (the edge opposite vertex `i`).
#[inline]
pub fn local_edge_vertices(i: usize) -> [usize; 2] {
    [(i + 1) % 3, (i + 2) % 3]
}

impl<T: Scalar> Mesh<T> {
    /// Builds a mesh whose boundary facets are tagged by evaluating `rule` at
    /// each boundary facet midpoint.
    ///
    /// Negatively oriented input cells are flipped. Refinement edges are
    /// initialized to the longest edge of each cell.
    pub fn from_cells(
        vertices: Vec<Point2<T>>,
        cells: Vec<[usize; 3]>,
        rule: impl Fn(Point2<f64>) -> BoundaryTag,
    ) -> Result<Self, MeshError> {
        let mut mesh = Self::build(vertices, cells, None, 0)?;
        for f in 0..mesh.facets.len() {
            if mesh.facets[f].is_boundary() {
                let [a, b] = mesh.facets[f].vertices;
                let m = scalar::midpoint(mesh.vertices[a], mesh.vertices[b]);
                mesh.boundary_tags[f] = Some(rule([m[0].as_f64(), m[1].as_f64()]));
            }
        }
        Ok(mesh)
    }

    /// Builds a mesh from cells with explicit tags for every boundary edge.
    ///
    /// `refinement_edge`, when given, supplies the local refinement edge of
    /// each cell; otherwise the longest edge is used.
    pub fn from_tagged_cells(
        vertices: Vec<Point2<T>>,
        cells: Vec<[usize; 3]>,
        tags: &HashMap<[usize; 2], BoundaryTag>,
        refinement_edge: Option<Vec<u8>>,
        generation: u32,
    ) -> Result<Self, MeshError> {
        let mut mesh = Self::build(vertices, cells, refinement_edge, generation)?;
        for f in 0..mesh.facets.len() {
            let key = mesh.facets[f].vertices;
            match (mesh.facets[f].is_boundary(), tags.get(&key)) {
                (true, Some(&t)) => mesh.boundary_tags[f] = Some(t),
                (true, None) => {
                    return Err(MeshError::Topology(format!("boundary facet {key:?} has no tag")));
                }
                (false, Some(_)) => {
                    return Err(MeshError::Topology(format!("interior facet {key:?} carries a tag")));
                }
                (false, None) => {}
            }
        }
        Ok(mesh)
    }

    fn build(
        vertices: Vec<Point2<T>>,
        mut cells: Vec<[usize; 3]>,
        refinement_edge: Option<Vec<u8>>,
        generation: u32,
    ) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Topology("mesh has no cells".into()));
        }
        let mut refinement_edge = match refinement_edge {
            Some(r) if r.len() == cells.len() => Some(r),
            Some(_) => return Err(MeshError::Topology("refinement edge count mismatch".into())),
            None => None,
        };
        for (k, c) in cells.iter_mut().enumerate() {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::Topology(format!("cell {k} references a missing vertex")));
            }
            let area2 = scalar::orient2d(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
            if area2 == T::zero() || !area2.is_finite() {
                return Err(MeshError::Geometry(format!("cell {k} is degenerate")));
            }
            if area2 < T::zero() {
                c.swap(1, 2);
                // Swapping vertices 1 and 2 exchanges local edges 1 and 2.
                if let Some(r) = refinement_edge.as_mut() {
                    r[k] = match r[k] {
                        1 => 2,
                        2 => 1,
                        e => e,
                    };
                }
            }
        }
        let refinement_edge = refinement_edge.unwrap_or_else(|| {
            cells
                .iter()
                .map(|c| longest_edge(&vertices, c))
                .collect()
        });

        let mut facet_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2);
        let mut facets: Vec<Facet> = Vec::with_capacity(cells.len() * 2);
        let mut cell_facets = vec![[0usize; 3]; cells.len()];
        for (k, c) in cells.iter().enumerate() {
            for i in 0..3 {
                let [a, b] = local_edge_vertices(i);
                let key = edge_key(c[a], c[b]);
                match facet_index.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.plus.is_some() {
                            return Err(MeshError::Topology(format!("edge {key:?} shared by more than two cells")));
                        }
                        facet.plus = Some((k, i as u8));
                        cell_facets[k][i] = f;
                    }
                    None => {
                        facet_index.insert(key, facets.len());
                        cell_facets[k][i] = facets.len();
                        facets.push(Facet { vertices: key, minus: (k, i as u8), plus: None });
                    }
                }
            }
        }
        let nf = facets.len();
        Ok(Mesh {
            vertices,
            cells,
            facets,
            cell_facets,
            boundary_tags: vec![None; nf],
            refinement_edge,
            generation,
        })
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    #[inline]
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    #[inline]
    pub fn cell_facets(&self) -> &[[usize; 3]] {
        &self.cell_facets
    }

    #[inline]
    pub fn boundary_tag(&self, facet: usize) -> Option<BoundaryTag> {
        self.boundary_tags[facet]
    }

    #[inline]
    pub fn boundary_tags(&self) -> &[Option<BoundaryTag>] {
        &self.boundary_tags
    }

    #[inline]
    pub fn refinement_edge(&self, cell: usize) -> u8 {
        self.refinement_edge[cell]
    }

    #[inline]
    pub fn generation(&self) -> u32 {
        self.generation
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.facets.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn n_interior_facets(&self) -> usize {
        self.facets.len() - self.n_boundary_facets()
    }

    /// Facet ids carrying `tag`, in ascending order.
    pub fn facets_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.facets.len())
            .filter(|&f| self.boundary_tags[f] == Some(tag))
            .collect()
    }

    #[inline]
    pub fn cell_points(&self, cell: usize) -> [Point2<T>; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn cell_area(&self, cell: usize) -> T {
        let [a, b, c] = self.cell_points(cell);
        scalar::orient2d(a, b, c) * T::lit(0.5)
    }

    /// Cell diameter (longest edge).
    pub fn cell_diameter(&self, cell: usize) -> T {
        let p = self.cell_points(cell);
        (0..3)
            .map(|i| scalar::norm(scalar::sub(p[(i + 1) % 3], p[(i + 2) % 3])))
            .fold(T::zero(), T::max)
    }

    pub fn cell_inradius(&self, cell: usize) -> T {
        let p = self.cell_points(cell);
        let perimeter: T = (0..3)
            .map(|i| scalar::norm(scalar::sub(p[(i + 1) % 3], p[(i + 2) % 3])))
            .sum();
        T::lit(2.0) * self.cell_area(cell) / perimeter
    }

    pub fn cell_centroid(&self, cell: usize) -> Point2<T> {
        let p = self.cell_points(cell);
        let third = T::lit(1.0 / 3.0);
        [(p[0][0] + p[1][0] + p[2][0]) * third, (p[0][1] + p[1][1] + p[2][1]) * third]
    }

    pub fn facet_length(&self, facet: usize) -> T {
        let [a, b] = self.facets[facet].vertices;
        scalar::norm(scalar::sub(self.vertices[a], self.vertices[b]))
    }

    pub fn facet_midpoint(&self, facet: usize) -> Point2<T> {
        let [a, b] = self.facets[facet].vertices;
        scalar::midpoint(self.vertices[a], self.vertices[b])
    }

    /// Maximum cell diameter.
    pub fn h_max(&self) -> T {
        (0..self.n_cells()).map(|k| self.cell_diameter(k)).fold(T::zero(), T::max)
    }

    pub fn h_min(&self) -> T {
        (0..self.n_cells()).map(|k| self.cell_diameter(k)).fold(T::infinity(), T::min)
    }

    /// Largest ratio `h_K / inradius(K)` over the mesh.
    pub fn max_shape_ratio(&self) -> T {
        (0..self.n_cells())
            .map(|k| self.cell_diameter(k) / self.cell_inradius(k))
            .fold(T::zero(), T::max)
    }

    /// Outward unit normal of local edge `local` of `cell`.
    pub fn cell_edge_normal(&self, cell: usize, local: usize) -> Point2<T> {
        let c = self.cells[cell];
        let [a, b] = local_edge_vertices(local);
        let d = scalar::sub(self.vertices[c[b]], self.vertices[c[a]]);
        let len = scalar::norm(d);
        // For a counter-clockwise cell the outward normal is the edge direction rotated by -90°.
        [d[1] / len, -d[0] / len]
    }

    /// Normal, tangent and sizes of `facet` (see [`FacetFrame`]).
    pub fn facet_frame(&self, facet: usize) -> FacetFrame<T> {
        let f = &self.facets[facet];
        let (cell, local) = f.minus;
        let normal = self.cell_edge_normal(cell, local as usize);
        FacetFrame {
            normal,
            tangent: [-normal[1], normal[0]],
            h_e: self.facet_length(facet),
            h_k: self.cell_diameter(cell),
        }
    }

    /// Cells sharing a facet with `cell`.
    pub fn cell_neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_facets[cell].iter().filter_map(move |&f| {
            let facet = &self.facets[f];
            match facet.plus {
                Some((p, _)) if facet.minus.0 == cell => Some(p),
                Some(_) => Some(facet.minus.0),
                None => None,
            }
        })
    }

    /// Checks the structural invariants: facet adjacency, orientation, tag
    /// partition and the absence of hanging vertices.
    pub fn check_invariants(&self) -> Result<(), MeshError> {
        for k in 0..self.n_cells() {
            if self.cell_area(k) <= T::zero() {
                return Err(MeshError::Geometry(format!("cell {k} is not positively oriented")));
            }
        }
        for (i, f) in self.facets.iter().enumerate() {
            match (f.is_boundary(), self.boundary_tags[i]) {
                (true, None) => return Err(MeshError::Topology(format!("boundary facet {i} untagged"))),
                (false, Some(_)) => return Err(MeshError::Topology(format!("interior facet {i} tagged"))),
                _ => {}
            }
            if let Some((p, _)) = f.plus {
                if p <= f.minus.0 {
                    return Err(MeshError::Topology(format!("facet {i} violates the K- < K+ convention")));
                }
            }
        }
        // A hanging vertex shows up as a vertex lying in the interior of a boundary-like
        // (single-sided) facet that is not on the domain boundary. Check every vertex
        // against every boundary facet it could split.
        let eps = T::geometric_eps();
        let mut on_vertex = vec![false; self.n_vertices()];
        for c in &self.cells {
            for &v in c {
                on_vertex[v] = true;
            }
        }
        if on_vertex.iter().any(|&u| !u) {
            return Err(MeshError::Topology("mesh has unreferenced vertices".into()));
        }
        let boundary: Vec<usize> = (0..self.n_facets()).filter(|&f| self.facets[f].is_boundary()).collect();
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let h = self.h_max().as_f64().max(1e-300);
        let key = |p: Point2<T>| ((p[0].as_f64() / h).floor() as i64, (p[1].as_f64() / h).floor() as i64);
        for (v, &p) in self.vertices.iter().enumerate() {
            buckets.entry(key(p)).or_default().push(v);
        }
        for &f in &boundary {
            let [a, b] = self.facets[f].vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len = scalar::norm(scalar::sub(pb, pa));
            let (k0, k1) = (key(pa), key(pb));
            for bx in k0.0.min(k1.0) - 1..=k0.0.max(k1.0) + 1 {
                for by in k0.1.min(k1.1) - 1..=k0.1.max(k1.1) + 1 {
                    let Some(list) = buckets.get(&(bx, by)) else { continue };
                    for &v in list {
                        if v == a || v == b {
                            continue;
                        }
                        let p = self.vertices[v];
                        let d = scalar::cross(scalar::sub(pb, pa), scalar::sub(p, pa)).abs() / len;
                        let t = scalar::dot(scalar::sub(p, pa), scalar::sub(pb, pa)) / (len * len);
                        if d <= eps * len && t > eps && t < T::one() - eps {
                            return Err(MeshError::Topology(format!("hanging vertex {v} on facet {f}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn into_parts(self) -> MeshParts<T> {
        MeshParts {
            vertices: self.vertices,
            cells: self.cells,
            refinement_edge: self.refinement_edge,
        }
    }

    /// Tags of all boundary edges keyed by their sorted endpoints.
    pub(crate) fn tag_map(&self) -> HashMap<[usize; 2], BoundaryTag> {
        self.facets
            .iter()
            .zip(&self.boundary_tags)
            .filter_map(|(f, t)| t.map(|t| (f.vertices, t)))
            .collect()
    }
}

pub(crate) struct MeshParts<T> {
    pub vertices: Vec<Point2<T>>,
    pub cells: Vec<[usize; 3]>,
    pub refinement_edge: Vec<u8>,
}

fn longest_edge<T: Scalar>(vertices: &[Point2<T>], c: &[usize; 3]) -> u8 {
    let mut best = 0;
    let mut best_len = T::neg_infinity();
    for i in 0..3 {
        let [a, b] = local_edge_vertices(i);
        let len = scalar::norm(scalar::sub(vertices[c[b]], vertices[c[a]]));
        // Ties resolve to the lowest local index; the tolerance keeps the choice
        // stable against round-off in otherwise congruent cells.
        if len > best_len * (T::one() + T::geometric_eps()) {
            best = i as u8;
            best_len = len;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh<f64> {
        make_rect_mesh(1, 1, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Dirichlet)).unwrap()
    }

    #[test]
    fn facet_on_top_edge_has_upward_normal() {
        let m = unit_square();
        let f = (0..m.n_facets())
            .find(|&f| {
                let mid = m.facet_midpoint(f);
                m.facets()[f].is_boundary() && (mid[1] - 1.0).abs() < 1e-14
            })
            .unwrap();
        let frame = m.facet_frame(f);
        assert!((frame.normal[0]).abs() < 1e-14 && (frame.normal[1] - 1.0).abs() < 1e-14);
        assert!((frame.tangent[0] + 1.0).abs() < 1e-14 && frame.tangent[1].abs() < 1e-14);
    }

    #[test]
    fn diagonal_facet_length() {
        let m = unit_square();
        let f = (0..m.n_facets()).find(|&f| !m.facets()[f].is_boundary()).unwrap();
        assert!((m.facet_frame(f).h_e - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn interior_normals_are_opposite_from_either_side() {
        let m = make_rect_mesh(4, 4, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Navier)).unwrap();
        for f in m.facets() {
            if let Some((p, lp)) = f.plus {
                let nm: [f64; 2] = m.cell_edge_normal(f.minus.0, f.minus.1 as usize);
                let np = m.cell_edge_normal(p, lp as usize);
                assert!((nm[0] + np[0]).abs() < 1e-14 && (nm[1] + np[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn frame_invariants() {
        let m: Mesh<f64> = make_named_domain(
            &DomainSpec::new(DomainKind::PipeWithHole { center: [0.2, 0.2], radius: 0.1 }),
            0.05,
        )
        .unwrap();
        for f in 0..m.n_facets() {
            let fr = m.facet_frame(f);
            assert!((scalar::norm(fr.normal) - 1.0).abs() < 1e-12);
            assert!(scalar::dot(fr.normal, fr.tangent).abs() < 1e-12);
            assert!(fr.h_e > 0.0);
        }
    }

    #[test]
    fn flips_clockwise_input() {
        let m = Mesh::<f64>::from_cells(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            |_| BoundaryTag::Dirichlet,
        )
        .unwrap();
        assert!(m.cell_area(0) > 0.0);
        m.check_invariants().unwrap();
    }

    #[test]
    fn detects_hanging_vertex() {
        // Right cell split at the midpoint of the shared edge, left cell untouched.
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let cells = vec![[0, 2, 3], [0, 1, 4], [1, 2, 4]];
        let m = Mesh::<f64>::from_cells(v, cells, |_| BoundaryTag::Dirichlet).unwrap();
        assert!(matches!(m.check_invariants(), Err(MeshError::Topology(_))));
    }

    #[test]
    fn degenerate_cell_rejected() {
        let r = Mesh::<f64>::from_cells(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![[0, 1, 2]],
            |_| BoundaryTag::Dirichlet,
        );
        assert!(matches!(r, Err(MeshError::Geometry(_))));
    }
}
