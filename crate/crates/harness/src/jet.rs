//! Bivariate Taylor jets truncated at total degree 3: enough to take the
//! Laplacian of a velocity given as the curl of a stream function.

use std::ops::{Add, Mul, Neg, Sub};

const N: usize = 10;
/// Exponents `(i, j)` of `x^i y^j` for each coefficient slot.
const EXP: [(usize, usize); N] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

fn slot(i: usize, j: usize) -> Option<usize> {
    EXP.iter().position(|&e| e == (i, j))
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

/// Taylor coefficients of a function around a point, in the local
/// coordinates `(x - x0, y - y0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; N],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c }
    }

    /// The coordinate function `x` around `x0`.
    pub fn x(x0: f64) -> Self {
        let mut j = Jet::constant(x0);
        j.c[1] = 1.0;
        j
    }

    /// The coordinate function `y` around `y0`.
    pub fn y(y0: f64) -> Self {
        let mut j = Jet::constant(y0);
        j.c[2] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `∂ˣⁱ ∂ʸʲ` at the expansion point, for `i + j ≤ 3`.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        let s = slot(i, j).expect("derivative order at most 3");
        self.c[s] * factorial(i) * factorial(j)
    }

    pub fn grad(&self) -> [f64; 2] {
        [self.d(1, 0), self.d(0, 1)]
    }

    pub fn laplacian(&self) -> f64 {
        self.d(2, 0) + self.d(0, 2)
    }

    /// `f(self)` given `f` and its first three derivatives at `self.value()`.
    fn compose(self, f: [f64; 4]) -> Jet {
        let mut delta = self;
        delta.c[0] = 0.0;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let mut out = Jet::constant(f[0]);
        for k in 1..N {
            out.c[k] = f[1] * delta.c[k] + f[2] / 2.0 * d2.c[k] + f[3] / 6.0 * d3.c[k];
        }
        out
    }

    pub fn exp(self) -> Jet {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn sinh(self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([s, c, s, c])
    }

    pub fn powi(self, n: u32) -> Jet {
        (0..n).fold(Jet::constant(1.0), |acc, _| acc * self)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.c.iter_mut().for_each(|a| *a = -*a);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; N];
        for (a, &(ia, ja)) in EXP.iter().enumerate() {
            if self.c[a] == 0.0 {
                continue;
            }
            for (b, &(ib, jb)) in EXP.iter().enumerate() {
                if let Some(s) = slot(ia + ib, ja + jb) {
                    c[s] += self.c[a] * o.c[b];
                }
            }
        }
        Jet { c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, v: f64) -> Jet {
        self.c[0] -= v;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, v: f64) -> Jet {
        self.c.iter_mut().for_each(|a| *a *= v);
        self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, j: Jet) -> Jet {
        j + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}
