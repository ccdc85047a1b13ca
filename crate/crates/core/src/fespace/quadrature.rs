use super::FeError;
use crate::scalar::{Point2, Scalar};

/// Highest polynomial degree a rule can be requested for.
pub const MAX_QUAD_DEGREE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadDomain {
    /// Reference triangle with vertices (0,0), (1,0), (0,1); area ½.
    Triangle,
    /// Reference interval [0, 1]; points are stored as `(t, 0)`.
    Edge,
}

/// Quadrature rule on a reference domain with positive weights.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub domain: QuadDomain,
    pub degree: usize,
    pub points: Vec<Point2<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Rule exact for polynomials of total degree `degree` on `domain`.
///
/// Triangle rules of degree ≤ 1 use the centroid; higher degrees use a
/// collapsed tensor product of Gauss–Legendre rules.
pub fn quad_rule<T: Scalar>(domain: QuadDomain, degree: usize) -> Result<QuadratureRule<T>, FeError> {
    if degree > MAX_QUAD_DEGREE {
        return Err(FeError::Unsupported(format!(
            "quadrature of degree {degree} (maximum {MAX_QUAD_DEGREE})"
        )));
    }
    let (points, weights) = match domain {
        QuadDomain::Edge => {
            let (x, w) = gauss_legendre((degree + 2) / 2);
            (x.iter().map(|&t| [T::lit(t), T::zero()]).collect(), w.iter().map(|&w| T::lit(w)).collect())
        }
        QuadDomain::Triangle if degree <= 1 => (vec![[T::lit(1.0 / 3.0); 2]], vec![T::lit(0.5)]),
        QuadDomain::Triangle => {
            // (u, v) ∈ [0,1]² ↦ (ξ, η) = (u, v(1-u)), Jacobian (1-u).
            let (xu, wu) = gauss_legendre((degree + 3) / 2);
            let (xv, wv) = gauss_legendre((degree + 2) / 2);
            let mut points = Vec::with_capacity(xu.len() * xv.len());
            let mut weights = Vec::with_capacity(xu.len() * xv.len());
            for (&u, &a) in xu.iter().zip(&wu) {
                for (&v, &b) in xv.iter().zip(&wv) {
                    points.push([T::lit(u), T::lit(v * (1.0 - u))]);
                    weights.push(T::lit(a * b * (1.0 - u)));
                }
            }
            (points, weights)
        }
    };
    Ok(QuadratureRule { domain, degree, points, weights })
}

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Initial guess from the asymptotic Chebyshev-like formula, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Legendre polynomial P_n and its derivative at z.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// ∫ ξ^a η^b over the reference triangle = a! b! / (a + b + 2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    fn integrate<T: Scalar>(r: &QuadratureRule<T>, f: impl Fn(T, T) -> T) -> T {
        r.points.iter().zip(&r.weights).map(|(p, &w)| w * f(p[0], p[1])).sum()
    }

    #[test]
    fn centroid_rule() {
        let r = quad_rule::<f64>(QuadDomain::Triangle, 1).unwrap();
        assert_eq!(r.points, vec![[1.0 / 3.0, 1.0 / 3.0]]);
        assert_eq!(r.weights, vec![0.5]);
    }

    #[test]
    fn x2y2_on_triangle() {
        let r = quad_rule::<f64>(QuadDomain::Triangle, 4).unwrap();
        let v = integrate(&r, |x, y| x * x * y * y);
        assert!((v - 1.0 / 180.0).abs() < 1e-14);
    }

    #[test]
    fn t5_on_edge() {
        let r = quad_rule::<f64>(QuadDomain::Edge, 5).unwrap();
        let v = integrate(&r, |t, _| t.powi(5));
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn all_monomials_up_to_degree() {
        for d in 0..=MAX_QUAD_DEGREE {
            let r = quad_rule::<f64>(QuadDomain::Triangle, d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let v = integrate(&r, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = monomial_integral(a, b);
                    assert!((v - exact).abs() <= 1e-13 * exact, "deg {d}: x^{a} y^{b}");
                }
            }
            let e = quad_rule::<f64>(QuadDomain::Edge, d).unwrap();
            for a in 0..=d as i32 {
                let v = integrate(&e, |t, _| t.powi(a));
                assert!((v - 1.0 / (a + 1) as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn too_high_degree_rejected() {
        assert!(matches!(quad_rule::<f64>(QuadDomain::Triangle, 11), Err(FeError::Unsupported(_))));
    }

    #[test]
    fn single_precision_rule() {
        let r = quad_rule::<f32>(QuadDomain::Triangle, 4).unwrap();
        let v = integrate(&r, |x, y| x * x * y * y);
        assert!((v - 1.0 / 180.0).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn random_polynomials_integrated_exactly(
            d in 0usize..=MAX_QUAD_DEGREE,
            coeffs in proptest::collection::vec(-1.0f64..1.0, 66),
        ) {
            let r = quad_rule::<f64>(QuadDomain::Triangle, d).unwrap();
            let mut terms = Vec::new();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    terms.push((a, b));
                }
            }
            let poly = |x: f64, y: f64| -> f64 {
                terms.iter().zip(&coeffs).map(|(&(a, b), c)| c * x.powi(a as i32) * y.powi(b as i32)).sum()
            };
            let exact: f64 = terms.iter().zip(&coeffs).map(|(&(a, b), c)| c * monomial_integral(a, b)).sum();
            let scale: f64 = terms.iter().zip(&coeffs).map(|(&(a, b), c)| c.abs() * monomial_integral(a, b)).sum();
            let v = integrate(&r, poly);
            prop_assert!((v - exact).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
