use super::basis::{edge_node_range, lagrange_nodes, n_local, tabulate_basis, BasisTable};
use super::quadrature::{quad_rule, QuadDomain, QuadratureRule};
use super::FeError;
use crate::mesh::{local_edge_vertices, BoundaryTag, Mesh};
use crate::scalar::Point2;
use std::sync::Arc;

/// Scalar continuous Lagrange space of a fixed degree.
///
/// Global numbering: vertex dofs first (dof `v` sits at vertex `v`), then
/// `degree - 1` dofs per facet ordered from its lower to its higher vertex,
/// then interior dofs cell by cell.
#[derive(Clone, Debug)]
pub struct Space {
    degree: usize,
    n_loc: usize,
    n_dofs: usize,
    cell_dofs: Vec<usize>,
    dof_points: Vec<Point2<f64>>,
}

impl Space {
    pub fn new(mesh: &Mesh<f64>, degree: usize) -> Result<Self, FeError> {
        let ref_nodes = lagrange_nodes::<f64>(degree)?;
        let n_loc = n_local(degree);
        let nv = mesh.n_vertices();
        let nf = mesh.n_facets();
        let per_edge = degree - 1;
        let n_int = n_loc - 3 - 3 * per_edge;
        let edge_base = nv;
        let int_base = nv + nf * per_edge;
        let n_dofs = int_base + mesh.n_cells() * n_int;

        let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * n_loc);
        for (k, c) in mesh.cells().iter().enumerate() {
            cell_dofs.extend_from_slice(c);
            for e in 0..3 {
                let f = mesh.cell_facets()[k][e];
                let [a, b] = local_edge_vertices(e);
                let forward = c[a] < c[b];
                for j in 0..per_edge {
                    let g = if forward { j } else { per_edge - 1 - j };
                    cell_dofs.push(edge_base + f * per_edge + g);
                }
            }
            for j in 0..n_int {
                cell_dofs.push(int_base + k * n_int + j);
            }
        }

        let mut dof_points = vec![[0.0; 2]; n_dofs];
        dof_points[..nv].copy_from_slice(mesh.vertices());
        for (f, facet) in mesh.facets().iter().enumerate() {
            let [a, b] = facet.vertices.map(|v| mesh.vertices()[v]);
            for j in 0..per_edge {
                let t = (j + 1) as f64 / degree as f64;
                dof_points[edge_base + f * per_edge + j] = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            }
        }
        if n_int > 0 {
            let int_nodes = &ref_nodes[3 + 3 * per_edge..];
            for k in 0..mesh.n_cells() {
                let map = AffineMap::new(mesh.cell_points(k));
                for (j, &xi) in int_nodes.iter().enumerate() {
                    dof_points[int_base + k * n_int + j] = map.apply(xi);
                }
            }
        }
        Ok(Space { degree, n_loc, n_dofs, cell_dofs, dof_points })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    #[inline]
    pub fn n_local(&self) -> usize {
        self.n_loc
    }

    #[inline]
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.n_loc..(cell + 1) * self.n_loc]
    }

    #[inline]
    pub fn dof_points(&self) -> &[Point2<f64>] {
        &self.dof_points
    }

    /// Global dofs of the closure of a facet (endpoints and edge nodes).
    pub fn facet_dofs(&self, mesh: &Mesh<f64>, facet: usize) -> Vec<usize> {
        let (cell, e) = mesh.facets()[facet].minus;
        let e = e as usize;
        let dofs = self.cell_dofs(cell);
        let [a, b] = local_edge_vertices(e);
        let mut out = vec![dofs[a], dofs[b]];
        out.extend(edge_node_range(self.degree, e).map(|i| dofs[i]));
        out
    }
}

/// Nodal interpolation into `space`.
pub fn interpolate(space: &Space, f: impl Fn(Point2<f64>) -> f64) -> Vec<f64> {
    space.dof_points.iter().map(|&x| f(x)).collect()
}

/// Affine map `x = origin + J ξ` from the reference triangle onto a cell.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: Point2<f64>,
    /// `jac[r][c] = ∂x_r / ∂ξ_c`.
    pub jac: [[f64; 2]; 2],
    /// Inverse of `jac`.
    pub inv: [[f64; 2]; 2],
    /// `det J`, twice the cell area.
    pub det: f64,
}

impl AffineMap {
    pub fn new(p: [Point2<f64>; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        AffineMap { origin: p[0], jac, inv, det }
    }

    #[inline]
    pub fn apply(&self, xi: Point2<f64>) -> Point2<f64> {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    /// Physical gradient `J⁻ᵀ ∇_ξ`.
    #[inline]
    pub fn grad(&self, g: Point2<f64>) -> Point2<f64> {
        [self.inv[0][0] * g[0] + self.inv[1][0] * g[1], self.inv[0][1] * g[0] + self.inv[1][1] * g[1]]
    }

    /// Physical second derivatives `J⁻ᵀ H_ξ J⁻¹`.
    #[inline]
    pub fn hessian(&self, h: [f64; 3]) -> [f64; 3] {
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        let entry = |a: usize, c: usize| -> f64 {
            let mut s = 0.0;
            for b in 0..2 {
                for d in 0..2 {
                    s += self.inv[b][a] * hm[b][d] * self.inv[d][c];
                }
            }
            s
        };
        [entry(0, 0), entry(0, 1), entry(1, 1)]
    }
}

/// Basis functions of one cell at one set of points, mapped to physical
/// coordinates. Entry `(q, i)` lives at `q * n + i`.
#[derive(Clone, Debug, Default)]
pub struct CellBasis {
    pub n: usize,
    pub values: Vec<f64>,
    pub grads: Vec<Point2<f64>>,
    pub hessians: Vec<[f64; 3]>,
}

impl CellBasis {
    pub fn fill(&mut self, table: &BasisTable<f64>, map: &AffineMap) {
        self.n = table.n_basis;
        self.values.clear();
        self.values.extend_from_slice(&table.values);
        self.grads.clear();
        self.grads.extend(table.grads.iter().map(|&g| map.grad(g)));
        self.hessians.clear();
        if table.degree > 1 {
            self.hessians.extend(table.hessians.iter().map(|&h| map.hessian(h)));
        } else {
            self.hessians.resize(table.hessians.len(), [0.0; 3]);
        }
    }

    pub fn mapped(table: &BasisTable<f64>, map: &AffineMap) -> Self {
        let mut b = CellBasis::default();
        b.fill(table, map);
        b
    }

    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n + i]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> Point2<f64> {
        self.grads[q * self.n + i]
    }

    #[inline]
    pub fn laplacian(&self, q: usize, i: usize) -> f64 {
        let h = self.hessians[q * self.n + i];
        h[0] + h[2]
    }
}

/// Quadrature rules and basis tables on the reference cell and on each local
/// edge (in both orientations) for one polynomial degree.
#[derive(Clone, Debug)]
pub struct RefTables {
    pub cell_rule: QuadratureRule<f64>,
    pub edge_rule: QuadratureRule<f64>,
    pub cell: BasisTable<f64>,
    /// `edge[e][r]`: local edge `e` traversed forwards (`r = 0`, from vertex
    /// `(e+1)%3`) or backwards (`r = 1`) as the edge parameter increases.
    pub edge: [[BasisTable<f64>; 2]; 3],
}

impl RefTables {
    pub fn new(degree: usize, quad_degree: usize) -> Result<Self, FeError> {
        let cell_rule = quad_rule(QuadDomain::Triangle, quad_degree)?;
        let edge_rule = quad_rule(QuadDomain::Edge, quad_degree)?;
        let cell = tabulate_basis(degree, &cell_rule.points)?;
        let tab = |e: usize, r: usize| tabulate_basis(degree, &edge_ref_points(&edge_rule, e, r == 1));
        let edge = [[tab(0, 0)?, tab(0, 1)?], [tab(1, 0)?, tab(1, 1)?], [tab(2, 0)?, tab(2, 1)?]];
        Ok(RefTables { cell_rule, edge_rule, cell, edge })
    }
}

/// Reference coordinates of the edge rule's points on local edge `e`.
pub fn edge_ref_points(rule: &QuadratureRule<f64>, e: usize, reversed: bool) -> Vec<Point2<f64>> {
    const REF: [Point2<f64>; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let [a, b] = local_edge_vertices(e);
    rule.points
        .iter()
        .map(|p| {
            let s = if reversed { 1.0 - p[0] } else { p[0] };
            [REF[a][0] + s * (REF[b][0] - REF[a][0]), REF[a][1] + s * (REF[b][1] - REF[a][1])]
        })
        .collect()
}

/// Whether local edge `e` of `cell` runs against the facet parameter, which
/// increases from the facet's lower to its higher vertex.
#[inline]
pub fn edge_reversed(mesh: &Mesh<f64>, cell: usize, e: usize) -> bool {
    let c = mesh.cells()[cell];
    let [a, b] = local_edge_vertices(e);
    c[a] > c[b]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureGauge {
    /// Pressure constrained to zero mean.
    MeanZero,
    /// Pressure determined by the boundary conditions (for example an outflow).
    None,
}

/// Velocity, pressure and potential spaces `P_{k+1}² × P_k × P_{k+1}` with
/// their Dirichlet dofs.
///
/// The global unknown vector is `[u_1, u_2, p, ψ]`, each block in its
/// space's numbering.
#[derive(Clone, Debug)]
pub struct SpaceTriple {
    mesh: Arc<Mesh<f64>>,
    k: usize,
    velocity: Space,
    pressure: Space,
    potential: Space,
    velocity_dirichlet: Vec<bool>,
    potential_dirichlet: Vec<bool>,
    gauge: PressureGauge,
}

impl SpaceTriple {
    pub fn new(mesh: Arc<Mesh<f64>>, k: usize, gauge: PressureGauge) -> Result<Self, FeError> {
        if k == 0 || k > 2 {
            return Err(FeError::Unsupported(format!("pressure degree k = {k} (supported: 1, 2)")));
        }
        let velocity = Space::new(&mesh, k + 1)?;
        let pressure = Space::new(&mesh, k)?;
        let potential = velocity.clone();
        let mut velocity_dirichlet = vec![false; velocity.n_dofs()];
        let mut potential_dirichlet = vec![false; potential.n_dofs()];
        for f in 0..mesh.n_facets() {
            let Some(tag) = mesh.boundary_tag(f) else { continue };
            for d in potential.facet_dofs(&mesh, f) {
                potential_dirichlet[d] = true;
                if tag == BoundaryTag::Dirichlet {
                    velocity_dirichlet[d] = true;
                }
            }
        }
        Ok(SpaceTriple { mesh, k, velocity, pressure, potential, velocity_dirichlet, potential_dirichlet, gauge })
    }

    #[inline]
    pub fn mesh(&self) -> &Arc<Mesh<f64>> {
        &self.mesh
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn velocity(&self) -> &Space {
        &self.velocity
    }

    #[inline]
    pub fn pressure(&self) -> &Space {
        &self.pressure
    }

    #[inline]
    pub fn potential(&self) -> &Space {
        &self.potential
    }

    #[inline]
    pub fn gauge(&self) -> PressureGauge {
        self.gauge
    }

    /// Dirichlet flags per scalar velocity dof (shared by both components).
    #[inline]
    pub fn velocity_dirichlet(&self) -> &[bool] {
        &self.velocity_dirichlet
    }

    #[inline]
    pub fn potential_dirichlet(&self) -> &[bool] {
        &self.potential_dirichlet
    }

    /// Number of scalar velocity dofs (one component).
    #[inline]
    pub fn n_u(&self) -> usize {
        self.velocity.n_dofs()
    }

    #[inline]
    pub fn n_p(&self) -> usize {
        self.pressure.n_dofs()
    }

    #[inline]
    pub fn n_psi(&self) -> usize {
        self.potential.n_dofs()
    }

    /// Global index of velocity component `c` at scalar dof `i`.
    #[inline]
    pub fn u_index(&self, c: usize, i: usize) -> usize {
        c * self.n_u() + i
    }

    #[inline]
    pub fn p_offset(&self) -> usize {
        2 * self.n_u()
    }

    #[inline]
    pub fn psi_offset(&self) -> usize {
        2 * self.n_u() + self.n_p()
    }

    /// Total number of unknowns `2 n_u + n_p + n_ψ`.
    #[inline]
    pub fn n_total(&self) -> usize {
        self.psi_offset() + self.n_psi()
    }

    /// Dirichlet flag of every global unknown.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut m = Vec::with_capacity(self.n_total());
        m.extend_from_slice(&self.velocity_dirichlet);
        m.extend_from_slice(&self.velocity_dirichlet);
        m.resize(m.len() + self.n_p(), false);
        m.extend_from_slice(&self.potential_dirichlet);
        m
    }

    /// Location of every global unknown, in the global ordering.
    pub fn global_points(&self) -> Vec<Point2<f64>> {
        let mut pts = Vec::with_capacity(self.n_total());
        pts.extend_from_slice(self.velocity.dof_points());
        pts.extend_from_slice(self.velocity.dof_points());
        pts.extend_from_slice(self.pressure.dof_points());
        pts.extend_from_slice(self.potential.dof_points());
        pts
    }

    /// Default quadrature degree for assembly, `2(k+1) + 2`.
    pub fn assembly_quad_degree(&self) -> usize {
        2 * (self.k + 1) + 2
    }
}

/// Discrete fields `(u_h, p_h, ψ_h)` over a [`SpaceTriple`].
#[derive(Clone, Debug)]
pub struct SystemState {
    pub space: Arc<SpaceTriple>,
    /// Component-major velocity coefficients `[u_1, u_2]`.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Discrete fields and derivatives at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct FieldPoint {
    pub u: [f64; 2],
    /// `grad_u[a][b] = ∂u_a/∂x_b`.
    pub grad_u: [[f64; 2]; 2],
    pub lap_u: [f64; 2],
    pub p: f64,
    pub grad_p: [f64; 2],
    pub psi: f64,
    pub grad_psi: [f64; 2],
    pub lap_psi: f64,
}

impl SystemState {
    pub fn zeros(space: Arc<SpaceTriple>) -> Self {
        let (nu, np, npsi) = (space.n_u(), space.n_p(), space.n_psi());
        SystemState { space, u: vec![0.0; 2 * nu], p: vec![0.0; np], psi: vec![0.0; npsi] }
    }

    pub fn from_vector(space: Arc<SpaceTriple>, x: &[f64]) -> Result<Self, FeError> {
        if x.len() < space.n_total() {
            return Err(FeError::Usage(format!("vector of length {} for {} unknowns", x.len(), space.n_total())));
        }
        let (po, so, n) = (space.p_offset(), space.psi_offset(), space.n_total());
        Ok(SystemState { u: x[..po].to_vec(), p: x[po..so].to_vec(), psi: x[so..n].to_vec(), space })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.space.n_total());
        v.extend_from_slice(&self.u);
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.psi);
        v
    }

    /// Nodal interpolant of the given fields.
    pub fn interpolate(
        space: Arc<SpaceTriple>,
        u: impl Fn(Point2<f64>) -> [f64; 2],
        p: impl Fn(Point2<f64>) -> f64,
        psi: impl Fn(Point2<f64>) -> f64,
    ) -> Self {
        let mut uv = Vec::with_capacity(2 * space.n_u());
        let vals: Vec<[f64; 2]> = space.velocity().dof_points().iter().map(|&x| u(x)).collect();
        uv.extend(vals.iter().map(|v| v[0]));
        uv.extend(vals.iter().map(|v| v[1]));
        let pv = interpolate(space.pressure(), p);
        let sv = interpolate(space.potential(), psi);
        SystemState { space, u: uv, p: pv, psi: sv }
    }

    /// Evaluates the fields at point `q` of the mapped tables of one cell.
    ///
    /// `vel` must be tabulated for the velocity/potential degree and `pre`
    /// for the pressure degree, at the same points.
    pub fn eval_at(&self, cell: usize, vel: &CellBasis, pre: &CellBasis, q: usize) -> FieldPoint {
        let sp = &self.space;
        let vd = sp.velocity().cell_dofs(cell);
        let pd = sp.pressure().cell_dofs(cell);
        let nu = sp.n_u();
        let mut r = FieldPoint::default();
        for (i, &d) in vd.iter().enumerate() {
            let (phi, g, lap) = (vel.value(q, i), vel.grad(q, i), vel.laplacian(q, i));
            for c in 0..2 {
                let coef = self.u[c * nu + d];
                r.u[c] += coef * phi;
                r.grad_u[c][0] += coef * g[0];
                r.grad_u[c][1] += coef * g[1];
                r.lap_u[c] += coef * lap;
            }
            let s = self.psi[d];
            r.psi += s * phi;
            r.grad_psi[0] += s * g[0];
            r.grad_psi[1] += s * g[1];
            r.lap_psi += s * lap;
        }
        for (i, &d) in pd.iter().enumerate() {
            let (phi, g) = (pre.value(q, i), pre.grad(q, i));
            r.p += self.p[d] * phi;
            r.grad_p[0] += self.p[d] * g[0];
            r.grad_p[1] += self.p[d] * g[1];
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_named_domain, make_rect_mesh, refine_bisect, BoundaryRule, DomainKind, DomainSpec};
    use std::collections::{BTreeSet, HashMap};

    fn square(n: usize) -> Mesh<f64> {
        let rule = BoundaryRule::new(|m| {
            if (m[0] - 1.0).abs() < 1e-12 || (m[1] - 1.0).abs() < 1e-12 {
                BoundaryTag::Navier
            } else {
                BoundaryTag::Dirichlet
            }
        });
        make_rect_mesh(n, n, [0.0, 1.0, 0.0, 1.0], &rule).unwrap()
    }

    #[test]
    fn dof_counts() {
        let m = square(4);
        for (p, n) in [(1, 25), (2, 81), (3, 169)] {
            assert_eq!(Space::new(&m, p).unwrap().n_dofs(), n);
        }
    }

    /// Every local node maps to the coordinates of its global dof, so shared
    /// dofs agree between neighbouring cells.
    #[test]
    fn local_nodes_match_global_dof_points() {
        let m = make_named_domain(&DomainSpec::new(DomainKind::LShape), 0.5).unwrap();
        let m = refine_bisect(&m, &BTreeSet::from([0, 3])).unwrap();
        for p in 1..=3 {
            let s = Space::new(&m, p).unwrap();
            let nodes = lagrange_nodes::<f64>(p).unwrap();
            let mut seen: HashMap<usize, usize> = HashMap::new();
            for k in 0..m.n_cells() {
                let map = AffineMap::new(m.cell_points(k));
                for (i, &d) in s.cell_dofs(k).iter().enumerate() {
                    let x = map.apply(nodes[i]);
                    let y = s.dof_points()[d];
                    assert!((x[0] - y[0]).abs() < 1e-13 && (x[1] - y[1]).abs() < 1e-13, "p={p} cell {k} node {i}");
                    *seen.entry(d).or_default() += 1;
                }
            }
            assert_eq!(seen.len(), s.n_dofs());
        }
    }

    #[test]
    fn dirichlet_flags() {
        let mesh = Arc::new(square(2));
        let s = SpaceTriple::new(mesh.clone(), 1, PressureGauge::MeanZero).unwrap();
        for (d, x) in s.velocity().dof_points().iter().enumerate() {
            let on_dirichlet = x[0].abs() < 1e-12 || x[1].abs() < 1e-12;
            assert_eq!(s.velocity_dirichlet()[d], on_dirichlet, "dof at {x:?}");
            let on_boundary = on_dirichlet || (x[0] - 1.0).abs() < 1e-12 || (x[1] - 1.0).abs() < 1e-12;
            assert_eq!(s.potential_dirichlet()[d], on_boundary);
        }
        assert_eq!(s.n_total(), 2 * 25 + 9 + 25);
        assert_eq!(s.dirichlet_mask().iter().filter(|&&b| b).count(), 2 * 9 + 16);
        assert!(SpaceTriple::new(mesh, 0, PressureGauge::None).is_err());
    }

    #[test]
    fn affine_map_derivatives() {
        let map = AffineMap::new([[0.2, 0.1], [1.0, 0.3], [0.4, 0.9]]);
        // f(x) = x_0² + 3 x_0 x_1 pulled back; compare gradient and Hessian.
        let xi = [0.3, 0.2];
        let x = map.apply(xi);
        let j = map.jac;
        let gx = [2.0 * x[0] + 3.0 * x[1], 3.0 * x[0]];
        let g_ref = [gx[0] * j[0][0] + gx[1] * j[1][0], gx[0] * j[0][1] + gx[1] * j[1][1]];
        let g = map.grad(g_ref);
        assert!((g[0] - gx[0]).abs() < 1e-13 && (g[1] - gx[1]).abs() < 1e-13);
        let hx = [[2.0, 3.0], [3.0, 0.0]];
        let mut h_ref = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        h_ref[a][b] += j[c][a] * hx[c][d] * j[d][b];
                    }
                }
            }
        }
        let h = map.hessian([h_ref[0][0], h_ref[0][1], h_ref[1][1]]);
        assert!((h[0] - 2.0).abs() < 1e-12 && (h[1] - 3.0).abs() < 1e-12 && h[2].abs() < 1e-12);
    }

    #[test]
    fn edge_tables_agree_from_both_sides() {
        let m = square(3);
        let t = RefTables::new(2, 6).unwrap();
        let s = Space::new(&m, 2).unwrap();
        let f = |x: Point2<f64>| x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1];
        let coef = interpolate(&s, f);
        for facet in m.facets() {
            let Some((kp, ep)) = facet.plus else { continue };
            let (km, em) = facet.minus;
            let eval = |k: usize, e: u8| -> Vec<f64> {
                let e = e as usize;
                let tab = &t.edge[e][edge_reversed(&m, k, e) as usize];
                (0..tab.n_points)
                    .map(|q| s.cell_dofs(k).iter().enumerate().map(|(i, &d)| coef[d] * tab.value(q, i)).sum())
                    .collect()
            };
            let (a, b) = (eval(km, em), eval(kp, ep));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn interpolation_of_constant_and_state_round_trip() {
        let mesh = Arc::new(square(2));
        let s = Arc::new(SpaceTriple::new(mesh, 1, PressureGauge::MeanZero).unwrap());
        let st = SystemState::interpolate(s.clone(), |_| [3.0, -1.0], |_| 2.5, |_| 7.0);
        assert!(st.u[..s.n_u()].iter().all(|&v| v == 3.0));
        assert!(st.u[s.n_u()..].iter().all(|&v| v == -1.0));
        assert!(st.p.iter().all(|&v| v == 2.5) && st.psi.iter().all(|&v| v == 7.0));
        let back = SystemState::from_vector(s.clone(), &st.to_vector()).unwrap();
        assert_eq!(back.to_vector(), st.to_vector());
        assert!(SystemState::from_vector(s, &[0.0; 3]).is_err());
    }
}
