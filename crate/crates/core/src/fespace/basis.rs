use super::FeError;
use crate::scalar::{Point2, Scalar};

/// Number of basis functions of the degree-`p` Lagrange element.
pub const fn n_local(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Symmetric 2×2 second derivative stored as `[xx, xy, yy]`.
pub type Hess<T> = [T; 3];

/// Values, gradients and second derivatives of every basis function at a set
/// of reference points. Entry `(q, i)` lives at `q * n_basis + i`.
#[derive(Clone, Debug)]
pub struct BasisTable<T> {
    pub degree: usize,
    pub n_basis: usize,
    pub n_points: usize,
    pub values: Vec<T>,
    pub grads: Vec<Point2<T>>,
    pub hessians: Vec<Hess<T>>,
}

impl<T: Scalar> BasisTable<T> {
    #[inline]
    pub fn value(&self, q: usize, i: usize) -> T {
        self.values[q * self.n_basis + i]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> Point2<T> {
        self.grads[q * self.n_basis + i]
    }

    #[inline]
    pub fn hessian(&self, q: usize, i: usize) -> Hess<T> {
        self.hessians[q * self.n_basis + i]
    }
}

/// Barycentric multi-index of each local node, in local numbering: vertices,
/// then the nodes of local edge `i` (opposite vertex `i`, running from vertex
/// `(i+1)%3` to `(i+2)%3`), then interior nodes.
fn node_indices(p: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(n_local(p));
    for v in 0..3 {
        let mut a = [0; 3];
        a[v] = p;
        out.push(a);
    }
    for e in 0..3 {
        let (from, to) = ((e + 1) % 3, (e + 2) % 3);
        for j in 1..p {
            let mut a = [0; 3];
            a[from] = p - j;
            a[to] = j;
            out.push(a);
        }
    }
    for a0 in 1..p {
        for a1 in 1..p - a0 {
            let a2 = p - a0 - a1;
            if a2 >= 1 {
                out.push([a0, a1, a2]);
            }
        }
    }
    out
}

/// Reference coordinates of the local nodes of the degree-`p` element.
pub fn lagrange_nodes<T: Scalar>(p: usize) -> Result<Vec<Point2<T>>, FeError> {
    check_degree(p)?;
    let pf = T::from_usize(p);
    Ok(node_indices(p)
        .into_iter()
        .map(|a| [T::from_usize(a[1]) / pf, T::from_usize(a[2]) / pf])
        .collect())
}

fn check_degree(p: usize) -> Result<(), FeError> {
    if (1..=3).contains(&p) {
        Ok(())
    } else {
        Err(FeError::Unsupported(format!("Lagrange degree {p}")))
    }
}

/// Barycentric coordinates and their (constant) reference gradients.
fn barycentric<T: Scalar>(x: Point2<T>) -> ([T; 3], [Point2<T>; 3]) {
    let one = T::one();
    let zero = T::zero();
    ([one - x[0] - x[1], x[0], x[1]], [[-one, -one], [one, zero], [zero, one]])
}

/// Tabulates the degree-`p` Lagrange basis at `points` (reference coordinates).
///
/// Each basis function is written as a product of affine factors
/// `(p λ_j - m) / (α_j - m)`, so values, gradients and second derivatives
/// follow from the product rule.
pub fn tabulate_basis<T: Scalar>(p: usize, points: &[Point2<T>]) -> Result<BasisTable<T>, FeError> {
    check_degree(p)?;
    let nodes = node_indices(p);
    let nb = nodes.len();
    let pf = T::from_usize(p);
    let mut table = BasisTable {
        degree: p,
        n_basis: nb,
        n_points: points.len(),
        values: Vec::with_capacity(nb * points.len()),
        grads: Vec::with_capacity(nb * points.len()),
        hessians: Vec::with_capacity(nb * points.len()),
    };
    let mut factors: Vec<(T, Point2<T>)> = Vec::with_capacity(p);
    for &x in points {
        let (lam, dlam) = barycentric(x);
        for alpha in &nodes {
            factors.clear();
            for j in 0..3 {
                for m in 0..alpha[j] {
                    let denom = T::from_usize(alpha[j] - m);
                    let val = (pf * lam[j] - T::from_usize(m)) / denom;
                    let g = [pf * dlam[j][0] / denom, pf * dlam[j][1] / denom];
                    factors.push((val, g));
                }
            }
            let (v, g, h) = product_derivatives(&factors);
            table.values.push(v);
            table.grads.push(g);
            table.hessians.push(h);
        }
    }
    Ok(table)
}

fn product_derivatives<T: Scalar>(f: &[(T, Point2<T>)]) -> (T, Point2<T>, Hess<T>) {
    let n = f.len();
    let prod_except = |skip: &[usize]| -> T {
        (0..n).filter(|k| !skip.contains(k)).map(|k| f[k].0).fold(T::one(), |a, b| a * b)
    };
    let value = prod_except(&[]);
    let mut grad = [T::zero(); 2];
    let mut hess = [T::zero(); 3];
    for i in 0..n {
        let r = prod_except(&[i]);
        grad[0] += f[i].1[0] * r;
        grad[1] += f[i].1[1] * r;
        for j in 0..n {
            if j == i {
                continue;
            }
            let r = prod_except(&[i, j]);
            let (gi, gj) = (f[i].1, f[j].1);
            hess[0] += gi[0] * gj[0] * r;
            hess[1] += gi[0] * gj[1] * r;
            hess[2] += gi[1] * gj[1] * r;
        }
    }
    (value, grad, hess)
}

/// Local indices of the nodes interior to local edge `e`, ordered from vertex
/// `(e+1)%3` towards vertex `(e+2)%3`.
pub(crate) fn edge_node_range(p: usize, e: usize) -> std::ops::Range<usize> {
    let start = 3 + e * (p - 1);
    start..start + (p - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                [a, b]
            })
            .collect()
    }

    #[test]
    fn node_counts() {
        for p in 1..=3 {
            assert_eq!(lagrange_nodes::<f64>(p).unwrap().len(), n_local(p));
        }
        assert!(lagrange_nodes::<f64>(4).is_err());
        assert!(tabulate_basis::<f64>(0, &[[0.0, 0.0]]).is_err());
    }

    #[test]
    fn p1_at_vertices_is_identity() {
        let nodes = lagrange_nodes::<f64>(1).unwrap();
        let t = tabulate_basis(1, &nodes).unwrap();
        for q in 0..3 {
            for i in 0..3 {
                assert_eq!(t.value(q, i), if q == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn kronecker_property() {
        for p in 1..=3 {
            let nodes = lagrange_nodes::<f64>(p).unwrap();
            let t = tabulate_basis(p, &nodes).unwrap();
            for q in 0..nodes.len() {
                for i in 0..nodes.len() {
                    let expect = if q == i { 1.0 } else { 0.0 };
                    assert!((t.value(q, i) - expect).abs() < 1e-13, "p={p} q={q} i={i}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_at_random_points() {
        let pts = random_points(50, 3);
        for p in 1..=3 {
            let t = tabulate_basis(p, &pts).unwrap();
            for q in 0..pts.len() {
                let s: f64 = (0..t.n_basis).map(|i| t.value(q, i)).sum();
                let g = (0..t.n_basis).fold([0.0; 2], |a, i| [a[0] + t.grad(q, i)[0], a[1] + t.grad(q, i)[1]]);
                let h = (0..t.n_basis).fold([0.0; 3], |a, i| {
                    let h = t.hessian(q, i);
                    [a[0] + h[0], a[1] + h[1], a[2] + h[2]]
                });
                assert!((s - 1.0).abs() < 1e-13);
                assert!(g.iter().chain(&h).all(|v| v.abs() < 1e-11));
            }
        }
    }

    #[test]
    fn p1_second_derivatives_vanish() {
        let t = tabulate_basis(1, &random_points(10, 1)).unwrap();
        assert!(t.hessians.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn p2_second_derivatives_constant() {
        let t = tabulate_basis(2, &random_points(2, 9)).unwrap();
        for i in 0..t.n_basis {
            let (a, b) = (t.hessian(0, i), t.hessian(1, i));
            assert!((0..3).all(|c| (a[c] - b[c]).abs() < 1e-12));
        }
    }

    /// Derivatives checked against central differences of the values.
    #[test]
    fn derivatives_match_finite_differences() {
        let pts = random_points(20, 5);
        let h = 1e-5;
        for p in 1..=3 {
            for &x in &pts {
                let shifted: Vec<[f64; 2]> =
                    vec![[x[0] + h, x[1]], [x[0] - h, x[1]], [x[0], x[1] + h], [x[0], x[1] - h], x];
                let t = tabulate_basis(p, &shifted).unwrap();
                for i in 0..t.n_basis {
                    let gx = (t.value(0, i) - t.value(1, i)) / (2.0 * h);
                    let gy = (t.value(2, i) - t.value(3, i)) / (2.0 * h);
                    let g = t.grad(4, i);
                    assert!((gx - g[0]).abs() < 1e-8 && (gy - g[1]).abs() < 1e-8);
                    let hxx = (t.grad(0, i)[0] - t.grad(1, i)[0]) / (2.0 * h);
                    let hxy = (t.grad(2, i)[0] - t.grad(3, i)[0]) / (2.0 * h);
                    let hyy = (t.grad(2, i)[1] - t.grad(3, i)[1]) / (2.0 * h);
                    let hs = t.hessian(4, i);
                    assert!((hxx - hs[0]).abs() < 1e-7 && (hxy - hs[1]).abs() < 1e-7 && (hyy - hs[2]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn edge_nodes_run_along_local_edge() {
        let nodes = lagrange_nodes::<f64>(3).unwrap();
        for e in 0..3 {
            let (a, b) = (nodes[(e + 1) % 3], nodes[(e + 2) % 3]);
            for (j, n) in edge_node_range(3, e).enumerate() {
                let t = (j + 1) as f64 / 3.0;
                let expect = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                assert!((nodes[n][0] - expect[0]).abs() < 1e-15 && (nodes[n][1] - expect[1]).abs() < 1e-15);
            }
        }
        assert!((nodes[9][0] - 1.0 / 3.0).abs() < 1e-15);
    }
}
