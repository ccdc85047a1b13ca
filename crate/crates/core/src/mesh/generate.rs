use super::{BoundaryTag, Mesh, MeshError};
use crate::scalar::{Point2, Scalar};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Length of the obstacle channel `(0, L) × (0, H)`.
pub const PIPE_LENGTH: f64 = 2.2;
/// Height of the obstacle channel.
pub const PIPE_HEIGHT: f64 = 0.41;

/// Maps a boundary facet midpoint to its tag.
#[derive(Clone)]
pub struct BoundaryRule(Arc<dyn Fn(Point2<f64>) -> BoundaryTag + Send + Sync>);

impl BoundaryRule {
    pub fn new(f: impl Fn(Point2<f64>) -> BoundaryTag + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn uniform(tag: BoundaryTag) -> Self {
        Self::new(move |_| tag)
    }

    #[inline]
    pub fn tag(&self, midpoint: Point2<f64>) -> BoundaryTag {
        (self.0)(midpoint)
    }
}

impl fmt::Debug for BoundaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryRule(..)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainKind {
    /// `[x0, x1] × [y0, y1]`.
    Rectangle([f64; 4]),
    /// `(-1,1)² \ (0,1)²`.
    LShape,
    /// `(-1,1)² \ (-0.2,1)×(-0.5,0.5)`.
    CShape,
    /// `(-1.5,1.5)×(0,1) ∪ (-0.5,0.5)×(-2,0)`.
    TShape,
    /// `{x > 0, y > 0, x + y < 1}`.
    UnitTriangle,
    /// Channel `(0, 2.2) × (0, 0.41)` minus a disc, approximated by a polygon.
    PipeWithHole { center: Point2<f64>, radius: f64 },
}

impl DomainKind {
    /// Re-entrant corners of the polygonal domains.
    pub fn reentrant_corners(&self) -> Vec<Point2<f64>> {
        match self {
            DomainKind::LShape => vec![[0.0, 0.0]],
            DomainKind::CShape => vec![[-0.2, -0.5], [-0.2, 0.5]],
            DomainKind::TShape => vec![[-0.5, 0.0], [0.5, 0.0]],
            _ => vec![],
        }
    }

    /// Default tagging: Dirichlet everywhere, except the obstacle channel
    /// (Dirichlet inlet and walls, Navier obstacle, do-nothing outlet).
    pub fn default_rule(&self) -> BoundaryRule {
        match *self {
            DomainKind::PipeWithHole { .. } => BoundaryRule::new(|m| {
                let tol = 1e-9;
                if (m[0] - PIPE_LENGTH).abs() < tol {
                    BoundaryTag::DoNothing
                } else if m[0].abs() < tol || m[1].abs() < tol || (m[1] - PIPE_HEIGHT).abs() < tol {
                    BoundaryTag::Dirichlet
                } else {
                    BoundaryTag::Navier
                }
            }),
            _ => BoundaryRule::uniform(BoundaryTag::Dirichlet),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub boundary_rule: BoundaryRule,
}

impl DomainSpec {
    /// Domain with its default tagging rule.
    pub fn new(kind: DomainKind) -> Self {
        let boundary_rule = kind.default_rule();
        Self { kind, boundary_rule }
    }

    pub fn with_rule(kind: DomainKind, boundary_rule: BoundaryRule) -> Self {
        Self { kind, boundary_rule }
    }
}

/// Structured mesh of `nx × ny` rectangles, each split along its
/// lower-left to upper-right diagonal.
pub fn make_rect_mesh<T: Scalar>(
    nx: usize,
    ny: usize,
    bounds: [f64; 4],
    rule: &BoundaryRule,
) -> Result<Mesh<T>, MeshError> {
    let [x0, x1, y0, y1] = bounds;
    if nx == 0 || ny == 0 {
        return Err(MeshError::Geometry("cell counts must be at least 1".into()));
    }
    if !(x1 > x0 && y1 > y0) || !bounds.iter().all(|b| b.is_finite()) {
        return Err(MeshError::Geometry(format!("degenerate bounds {bounds:?}")));
    }
    let (v, c) = grid(nx, ny, [x0, y0], [(x1 - x0) / nx as f64, (y1 - y0) / ny as f64], Diagonal::Right, |_| true);
    Mesh::from_cells(to_scalar(v), c, |m| rule.tag(m))
}

/// Conforming triangulation of a named domain with cell legs of at most `h_target`.
pub fn make_named_domain<T: Scalar>(spec: &DomainSpec, h_target: f64) -> Result<Mesh<T>, MeshError> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(MeshError::Geometry(format!("invalid target size {h_target}")));
    }
    let rule = |m: Point2<f64>| spec.boundary_rule.tag(m);
    match spec.kind {
        DomainKind::Rectangle(b) => {
            let nx = ((b[1] - b[0]) / h_target).ceil().max(1.0) as usize;
            let ny = ((b[3] - b[2]) / h_target).ceil().max(1.0) as usize;
            make_rect_mesh(nx, ny, b, &spec.boundary_rule)
        }
        DomainKind::LShape => {
            let n = cells_per(1.0, h_target);
            let s = 1.0 / n as f64;
            let (v, c) = grid(2 * n, 2 * n, [-1.0, -1.0], [s, s], Diagonal::Right, |p| !(p[0] > 0.0 && p[1] > 0.0));
            let (v, c) = compact(v, c);
            Mesh::from_cells(to_scalar(v), c, rule)
        }
        DomainKind::CShape => {
            let n = cells_per(0.1, h_target);
            let s = 0.1 / n as f64;
            let m = 20 * n;
            let (v, c) = grid(m, m, [-1.0, -1.0], [s, s], Diagonal::Right, |p| {
                !(p[0] > -0.2 && p[1] > -0.5 && p[1] < 0.5)
            });
            let (v, c) = compact(v, c);
            Mesh::from_cells(to_scalar(v), c, rule)
        }
        DomainKind::TShape => {
            let n = cells_per(0.5, h_target);
            let s = 0.5 / n as f64;
            let (v, c) = grid(6 * n, 6 * n, [-1.5, -2.0], [s, s], Diagonal::Right, |p| {
                (p[1] > 0.0 && p[1] < 1.0) || (p[1] < 0.0 && p[0].abs() < 0.5)
            });
            let (v, c) = compact(v, c);
            Mesh::from_cells(to_scalar(v), c, rule)
        }
        DomainKind::UnitTriangle => {
            let n = cells_per(1.0, h_target);
            let s = 1.0 / n as f64;
            let (v, c) = grid(n, n, [0.0, 0.0], [s, s], Diagonal::Left, |p| p[0] + p[1] < 1.0);
            let (v, c) = compact(v, c);
            Mesh::from_cells(to_scalar(v), c, rule)
        }
        DomainKind::PipeWithHole { center, radius } => {
            let (v, c) = pipe_with_hole(center, radius, h_target)?;
            Mesh::from_cells(to_scalar(v), c, rule)
        }
    }
}

fn cells_per(length: f64, h: f64) -> usize {
    // Small slack so that e.g. h = 0.1 on a unit feature yields 10, not 11, cells.
    ((length / h) - 1e-9).ceil().max(1.0) as usize
}

#[derive(Clone, Copy)]
enum Diagonal {
    /// Lower-left to upper-right.
    Right,
    /// Lower-right to upper-left.
    Left,
}

/// Structured grid; cells are kept when `keep(centroid)` holds.
fn grid(
    nx: usize,
    ny: usize,
    origin: Point2<f64>,
    step: Point2<f64>,
    diagonal: Diagonal,
    keep: impl Fn(Point2<f64>) -> bool,
) -> (Vec<Point2<f64>>, Vec<[usize; 3]>) {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([origin[0] + i as f64 * step[0], origin[1] + j as f64 * step[1]]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v0, v1, v2, v3) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let tris = match diagonal {
                Diagonal::Right => [[v0, v1, v3], [v0, v3, v2]],
                Diagonal::Left => [[v0, v1, v2], [v1, v3, v2]],
            };
            for t in tris {
                let c = [
                    (vertices[t[0]][0] + vertices[t[1]][0] + vertices[t[2]][0]) / 3.0,
                    (vertices[t[0]][1] + vertices[t[1]][1] + vertices[t[2]][1]) / 3.0,
                ];
                if keep(c) {
                    cells.push(t);
                }
            }
        }
    }
    (vertices, cells)
}

/// Drops unreferenced vertices, preserving the order of the rest.
fn compact(vertices: Vec<Point2<f64>>, cells: Vec<[usize; 3]>) -> (Vec<Point2<f64>>, Vec<[usize; 3]>) {
    let mut map = vec![usize::MAX; vertices.len()];
    for c in &cells {
        for &v in c {
            map[v] = 0;
        }
    }
    let mut out = Vec::new();
    for (v, p) in vertices.into_iter().enumerate() {
        if map[v] == 0 {
            map[v] = out.len();
            out.push(p);
        }
    }
    let cells = cells.into_iter().map(|c| c.map(|v| map[v])).collect();
    (out, cells)
}

fn to_scalar<T: Scalar>(v: Vec<Point2<f64>>) -> Vec<Point2<T>> {
    v.into_iter().map(|p| [T::lit(p[0]), T::lit(p[1])]).collect()
}

/// Merges coincident vertices produced by independently meshed blocks.
struct VertexPool {
    points: Vec<Point2<f64>>,
    index: HashMap<(i64, i64), usize>,
}

impl VertexPool {
    fn new() -> Self {
        Self { points: Vec::new(), index: HashMap::new() }
    }

    fn insert(&mut self, p: Point2<f64>) -> usize {
        let key = ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        *self.index.entry(key).or_insert_with(|| {
            self.points.push(p);
            self.points.len() - 1
        })
    }
}

/// O-grid around the obstacle inside the square block `[0, H]²`, followed by
/// a structured block filling the rest of the channel.
fn pipe_with_hole(
    center: Point2<f64>,
    radius: f64,
    h: f64,
) -> Result<(Vec<Point2<f64>>, Vec<[usize; 3]>), MeshError> {
    let side = PIPE_HEIGHT;
    let clearance = [center[0], side - center[0], center[1], side - center[1]]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        - radius;
    if !(radius > 0.0) || clearance <= 0.0 {
        return Err(MeshError::Geometry(format!(
            "obstacle of radius {radius} at {center:?} does not fit in the inlet block"
        )));
    }
    if h >= radius {
        return Err(MeshError::Geometry(format!(
            "target size {h} too coarse to resolve an obstacle of radius {radius}"
        )));
    }
    // Points per block side, refined until every obstacle segment is at most h.
    let mut n = (side / h).ceil() as usize;
    let (square, circle) = loop {
        let square = square_boundary(side, n);
        let circle: Vec<Point2<f64>> = square
            .iter()
            .map(|p| {
                let d = [p[0] - center[0], p[1] - center[1]];
                let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                [center[0] + radius * d[0] / r, center[1] + radius * d[1] / r]
            })
            .collect();
        let longest = (0..circle.len())
            .map(|i| {
                let (a, b) = (circle[i], circle[(i + 1) % circle.len()]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        if longest <= h {
            break (square, circle);
        }
        n += 1;
    };
    let max_width = square
        .iter()
        .zip(&circle)
        .map(|(s, c)| ((s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let layers = (max_width / h).ceil().max(2.0) as usize;

    let mut pool = VertexPool::new();
    let m = square.len();
    let mut ring = vec![vec![0usize; layers + 1]; m];
    for j in 0..m {
        for (l, slot) in ring[j].iter_mut().enumerate() {
            let t = l as f64 / layers as f64;
            let p = [
                circle[j][0] + t * (square[j][0] - circle[j][0]),
                circle[j][1] + t * (square[j][1] - circle[j][1]),
            ];
            *slot = pool.insert(p);
        }
    }
    let mut cells = Vec::new();
    for j in 0..m {
        let jn = (j + 1) % m;
        for l in 0..layers {
            let (a, b, c, d) = (ring[j][l], ring[jn][l], ring[jn][l + 1], ring[j][l + 1]);
            // Alternate the diagonal so the ring has no preferred direction.
            if (j + l) % 2 == 0 {
                cells.push([a, c, b]);
                cells.push([a, d, c]);
            } else {
                cells.push([a, d, b]);
                cells.push([b, d, c]);
            }
        }
    }
    // Downstream block [H, L] × [0, H] matching the n segments of the block side.
    let step = side / n as f64;
    let nx = ((PIPE_LENGTH - side) / step).round().max(1.0) as usize;
    let dx = (PIPE_LENGTH - side) / nx as f64;
    let (bv, bc) = grid(nx, n, [side, 0.0], [dx, step], Diagonal::Right, |_| true);
    let map: Vec<usize> = bv.iter().map(|&p| pool.insert(p)).collect();
    cells.extend(bc.into_iter().map(|c| c.map(|v| map[v])));
    Ok((pool.points, cells))
}

/// `4n` points on the boundary of `[0, s]²`, counter-clockwise from the origin.
fn square_boundary(s: f64, n: usize) -> Vec<Point2<f64>> {
    let mut pts = Vec::with_capacity(4 * n);
    let t = |i: usize| s * i as f64 / n as f64;
    for i in 0..n {
        pts.push([t(i), 0.0]);
    }
    for i in 0..n {
        pts.push([s, t(i)]);
    }
    for i in 0..n {
        pts.push([s - t(i), s]);
    }
    for i in 0..n {
        pts.push([0.0, s - t(i)]);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn euler(m: &Mesh<f64>) -> i64 {
        m.n_vertices() as i64 - m.n_facets() as i64 + m.n_cells() as i64
    }

    #[test]
    fn minimal_square() {
        let m: Mesh<f64> = make_rect_mesh(1, 1, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Dirichlet)).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices(), m.n_facets(), m.n_boundary_facets()), (2, 4, 5, 4));
    }

    #[test]
    fn two_by_one() {
        let m: Mesh<f64> = make_rect_mesh(2, 1, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Dirichlet)).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices(), m.n_interior_facets()), (4, 6, 3));
    }

    #[test]
    fn four_by_four_mesh_size() {
        let m: Mesh<f64> = make_rect_mesh(4, 4, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Dirichlet)).unwrap();
        assert!((m.h_max() - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((m.h_max() - 0.3536).abs() < 5e-5);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let r = make_rect_mesh::<f64>(2, 2, [1.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Dirichlet));
        assert!(matches!(r, Err(MeshError::Geometry(_))));
        let r = make_rect_mesh::<f64>(0, 2, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Dirichlet));
        assert!(r.is_err());
    }

    #[test]
    fn l_shape_contains_reentrant_corner() {
        let m: Mesh<f64> = make_named_domain(&DomainSpec::new(DomainKind::LShape), 1.0).unwrap();
        assert!(m.vertices().iter().any(|p| p[0] == 0.0 && p[1] == 0.0));
        assert_eq!(m.n_cells(), 6);
        assert_eq!(euler(&m), 1);
    }

    #[test]
    fn coarsest_triangle() {
        let m: Mesh<f64> = make_named_domain(&DomainSpec::new(DomainKind::UnitTriangle), 1.0).unwrap();
        assert_eq!(m.n_cells(), 1);
        let mut pts = m.vertices().to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn named_domains_are_valid() {
        for (kind, area, holes) in [
            (DomainKind::LShape, 3.0, 0),
            (DomainKind::CShape, 4.0 - 1.2, 0),
            (DomainKind::TShape, 5.0, 0),
            (DomainKind::UnitTriangle, 0.5, 0),
            (DomainKind::Rectangle([0.0, 2.0, 0.0, 1.0]), 2.0, 0),
        ] {
            let m: Mesh<f64> = make_named_domain(&DomainSpec::new(kind), 0.1).unwrap();
            m.check_invariants().unwrap();
            let a: f64 = (0..m.n_cells()).map(|k| m.cell_area(k)).sum();
            assert!((a - area).abs() < 1e-10, "{kind:?}: area {a}");
            assert_eq!(euler(&m), 1 - holes);
        }
    }

    #[test]
    fn pipe_obstacle_polygon_on_circle() {
        let c = [0.2, 0.2];
        let spec = DomainSpec::new(DomainKind::PipeWithHole { center: c, radius: 0.1 });
        let m: Mesh<f64> = make_named_domain(&spec, 0.05).unwrap();
        m.check_invariants().unwrap();
        assert_eq!(euler(&m), 0);
        let navier = m.facets_with_tag(BoundaryTag::Navier);
        assert!(!navier.is_empty());
        for f in navier {
            assert!(m.facet_length(f) <= 0.05 + 1e-12);
            for v in m.facets()[f].vertices {
                let p = m.vertices()[v];
                let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
                assert!((r - 0.1).abs() < 1e-12);
            }
        }
        assert!(!m.facets_with_tag(BoundaryTag::DoNothing).is_empty());
        let area: f64 = (0..m.n_cells()).map(|k| m.cell_area(k)).sum();
        assert!(area < PIPE_LENGTH * PIPE_HEIGHT && area > PIPE_LENGTH * PIPE_HEIGHT - PI * 0.01);
        assert!(m.max_shape_ratio() < 10.0, "shape ratio {}", m.max_shape_ratio());
    }

    #[test]
    fn pipe_too_coarse() {
        let spec = DomainSpec::new(DomainKind::PipeWithHole { center: [0.2, 0.2], radius: 0.1 });
        assert!(matches!(make_named_domain::<f64>(&spec, 0.5), Err(MeshError::Geometry(_))));
        let off = DomainSpec::new(DomainKind::PipeWithHole { center: [0.05, 0.2], radius: 0.1 });
        assert!(matches!(make_named_domain::<f64>(&off, 0.05), Err(MeshError::Geometry(_))));
    }

    #[test]
    fn single_precision_mesh() {
        let m: Mesh<f32> = make_rect_mesh(3, 2, [0.0, 1.0, 0.0, 1.0], &BoundaryRule::uniform(BoundaryTag::Navier)).unwrap();
        m.check_invariants().unwrap();
        assert_eq!(m.n_cells(), 12);
    }
}
