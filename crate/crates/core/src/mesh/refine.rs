use super::{edge_key, local_edge_vertices, Mesh, MeshError};
use crate::scalar::{self, Scalar};
use std::collections::{BTreeSet, HashMap, HashSet};

/// Red refinement: every cell is split into four congruent children through
/// its edge midpoints. Existing vertices keep their indices.
pub fn refine_uniform<T: Scalar>(mesh: &Mesh<T>) -> Mesh<T> {
    let tags = mesh.tag_map();
    let n_facets = mesh.n_facets();
    let facets: Vec<[usize; 2]> = mesh.facets().iter().map(|f| f.vertices).collect();
    let cell_facets = mesh.cell_facets().to_vec();
    let generation = mesh.generation();
    let parts = mesh.clone().into_parts();
    let mut vertices = parts.vertices;
    let n0 = vertices.len();
    for f in &facets {
        vertices.push(scalar::midpoint(vertices[f[0]], vertices[f[1]]));
    }
    let mut new_tags = HashMap::with_capacity(tags.len() * 2);
    for (f, &[a, b]) in facets.iter().enumerate() {
        if let Some(&t) = tags.get(&[a, b]) {
            let m = n0 + f;
            new_tags.insert(edge_key(a, m), t);
            new_tags.insert(edge_key(m, b), t);
        }
    }
    let mut cells = Vec::with_capacity(parts.cells.len() * 4);
    for (k, c) in parts.cells.iter().enumerate() {
        // Midpoint of the edge opposite local vertex i.
        let m = |i: usize| n0 + cell_facets[k][i];
        let (a, b, cc) = (c[0], c[1], c[2]);
        cells.push([a, m(2), m(1)]);
        cells.push([m(2), b, m(0)]);
        cells.push([m(1), m(0), cc]);
        cells.push([m(0), m(1), m(2)]);
    }
    debug_assert_eq!(vertices.len(), n0 + n_facets);
    Mesh::from_tagged_cells(vertices, cells, &new_tags, None, generation + 1)
        .expect("red refinement of a valid mesh is valid")
}

/// Newest-vertex bisection of the `marked` cells followed by conforming
/// closure. Existing vertices keep their indices; new vertices are appended.
pub fn refine_bisect<T: Scalar>(mesh: &Mesh<T>, marked: &BTreeSet<usize>) -> Result<Mesh<T>, MeshError> {
    if let Some(&k) = marked.iter().find(|&&k| k >= mesh.n_cells()) {
        return Err(MeshError::Topology(format!("marked cell {k} does not exist")));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let tags = mesh.tag_map();
    let generation = mesh.generation();
    let parts = mesh.clone().into_parts();
    let mut vertices = parts.vertices;

    // Cells stored as (a, b, c) with refinement edge (a, b) and newest vertex c.
    let rotate = |c: [usize; 3], e: u8| {
        let [i, j] = local_edge_vertices(e as usize);
        [c[i], c[j], c[e as usize]]
    };
    let tri: Vec<[usize; 3]> = parts
        .cells
        .iter()
        .zip(&parts.refinement_edge)
        .map(|(&c, &e)| rotate(c, e))
        .collect();

    let mut edges: HashSet<[usize; 2]> = marked.iter().map(|&k| edge_key(tri[k][0], tri[k][1])).collect();
    // Closure: a cell with any marked edge must have its refinement edge marked.
    loop {
        let mut added = false;
        for t in &tri {
            let re = edge_key(t[0], t[1]);
            if edges.contains(&re) {
                continue;
            }
            if edges.contains(&edge_key(t[1], t[2])) || edges.contains(&edge_key(t[2], t[0])) {
                edges.insert(re);
                added = true;
            }
        }
        if !added {
            break;
        }
    }

    let mut midpoints: HashMap<[usize; 2], usize> = HashMap::new();
    // Sort so new vertex numbering does not depend on hash iteration order.
    let mut sorted: Vec<[usize; 2]> = edges.iter().copied().collect();
    sorted.sort_unstable();
    for e in sorted {
        midpoints.insert(e, vertices.len());
        vertices.push(scalar::midpoint(vertices[e[0]], vertices[e[1]]));
    }

    let mut new_tags = tags;
    for (e, &m) in &midpoints {
        if let Some(t) = new_tags.remove(e) {
            new_tags.insert(edge_key(e[0], m), t);
            new_tags.insert(edge_key(m, e[1]), t);
        }
    }

    let mut cells = Vec::with_capacity(tri.len() + 2 * midpoints.len());
    let mut stack = Vec::new();
    for t in tri {
        stack.push(t);
        while let Some([a, b, c]) = stack.pop() {
            match midpoints.get(&edge_key(a, b)) {
                Some(&m) => {
                    // Children (c, a, m) and (b, c, m); m becomes the newest vertex.
                    stack.push([b, c, m]);
                    stack.push([c, a, m]);
                }
                None => cells.push([a, b, c]),
            }
        }
    }
    // Cells are stored with their refinement edge opposite local vertex 2.
    let refinement = vec![2u8; cells.len()];
    let out = Mesh::from_tagged_cells(vertices, cells, &new_tags, Some(refinement), generation + 1)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_named_domain, make_rect_mesh, BoundaryRule, BoundaryTag, DomainKind, DomainSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

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

    fn point_in_triangle(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
        let eps = -1e-12;
        scalar::orient2d(t[0], t[1], p) >= eps
            && scalar::orient2d(t[1], t[2], p) >= eps
            && scalar::orient2d(t[2], t[0], p) >= eps
    }

    #[test]
    fn uniform_refinement_of_two_cells() {
        let m = refine_uniform(&square(1));
        assert_eq!((m.n_cells(), m.n_vertices()), (8, 9));
        m.check_invariants().unwrap();
    }

    #[test]
    fn uniform_refinement_halves_h() {
        let m0 = square(4);
        let m1 = refine_uniform(&m0);
        assert!((m1.h_max() - 0.1767766952966369).abs() < 1e-15);
        let mut m = m1;
        for _ in 0..4 {
            m = refine_uniform(&m);
            m.check_invariants().unwrap();
        }
        assert!((m.h_max() - m0.h_max() / 32.0).abs() < 1e-15);
        assert_eq!(m.generation(), 5);
    }

    #[test]
    fn tags_are_inherited() {
        let m = refine_uniform(&square(2));
        for f in 0..m.n_facets() {
            if let Some(t) = m.boundary_tag(f) {
                let mid = m.facet_midpoint(f);
                let on_navier = (mid[0] - 1.0).abs() < 1e-12 || (mid[1] - 1.0).abs() < 1e-12;
                assert_eq!(t == BoundaryTag::Navier, on_navier);
            }
        }
        assert_eq!(m.tag_map().len(), m.n_boundary_facets());
    }

    #[test]
    fn empty_mark_is_identity() {
        let m = square(2);
        let r = refine_bisect(&m, &BTreeSet::new()).unwrap();
        assert_eq!(r.cells(), m.cells());
        assert_eq!(r.vertices(), m.vertices());
    }

    #[test]
    fn marking_one_cell_of_two() {
        let m = square(1);
        let r = refine_bisect(&m, &BTreeSet::from([0])).unwrap();
        assert!(r.n_cells() >= 3);
        r.check_invariants().unwrap();
        // The shared diagonal is the refinement edge of both cells.
        assert_eq!(r.n_cells(), 4);
    }

    #[test]
    fn invalid_mark_rejected() {
        assert!(refine_bisect(&square(1), &BTreeSet::from([7])).is_err());
    }

    #[test]
    fn bisection_keeps_right_triangles_shape() {
        let mut m = square(2);
        let r0 = m.max_shape_ratio();
        for i in 0..12 {
            let marked: BTreeSet<usize> = (0..m.n_cells()).filter(|&k| m.cell_centroid(k)[0] < 0.3 / (i + 1) as f64).collect();
            let marked = if marked.is_empty() { BTreeSet::from([0]) } else { marked };
            m = refine_bisect(&m, &marked).unwrap();
            m.check_invariants().unwrap();
        }
        assert!((m.max_shape_ratio() - r0).abs() < 1e-9);
    }

    fn random_rounds(mut m: Mesh<f64>, seed: u64, rounds: usize) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let limit = m.max_shape_ratio().max(10.0);
        for _ in 0..rounds {
            let marked: BTreeSet<usize> = (0..m.n_cells()).filter(|_| rng.gen_bool(0.08)).collect();
            let parent = m.clone();
            m = refine_bisect(&m, &marked).unwrap();
            m.check_invariants().unwrap();
            assert!(m.max_shape_ratio() <= limit + 1e-9);
            assert!(m.n_vertices() >= parent.n_vertices());
            assert_eq!(&m.vertices()[..parent.n_vertices()], parent.vertices());
            // Nestedness: the centroid of every child lies in some parent cell,
            // and the total area is preserved.
            let a0: f64 = (0..parent.n_cells()).map(|k| parent.cell_area(k)).sum();
            let a1: f64 = (0..m.n_cells()).map(|k| m.cell_area(k)).sum();
            assert!((a0 - a1).abs() < 1e-12 * a0.max(1.0));
            for k in (0..m.n_cells()).step_by(7) {
                let c = m.cell_centroid(k);
                let pts = m.cell_points(k);
                let parent_cell = (0..parent.n_cells()).find(|&p| point_in_triangle(c, parent.cell_points(p))).unwrap();
                let t = parent.cell_points(parent_cell);
                assert!(pts.iter().all(|&p| point_in_triangle(p, t)));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn random_bisection_rounds_preserve_invariants(seed in any::<u64>()) {
            random_rounds(square(2), seed, 14);
        }
    }

    #[test]
    fn hundred_random_rounds_on_l_shape() {
        let m: Mesh<f64> = make_named_domain(&DomainSpec::new(DomainKind::LShape), 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut m = m;
        let limit = m.max_shape_ratio().max(10.0);
        for round in 0..100 {
            // Keep the mesh small: mark a few cells near a moving point.
            let target = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..0.0)];
            let marked: BTreeSet<usize> = (0..m.n_cells())
                .filter(|&k| {
                    let c = m.cell_centroid(k);
                    (c[0] - target[0]).hypot(c[1] - target[1]) < 0.1
                })
                .take(3)
                .collect();
            m = refine_bisect(&m, &marked).unwrap();
            if round % 10 == 0 || round == 99 {
                m.check_invariants().unwrap();
            }
            assert!(m.max_shape_ratio() <= limit + 1e-9);
        }
        let euler = m.n_vertices() as i64 - m.n_facets() as i64 + m.n_cells() as i64;
        assert_eq!(euler, 1);
    }
}
