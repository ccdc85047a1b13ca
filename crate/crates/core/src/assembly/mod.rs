//! Residual and Jacobian of the symmetric Nitsche discretization.
//!
//! Test functions are ordered as the unknowns: velocity components, pressure,
//! potential. Dirichlet unknowns are eliminated strongly; their residual
//! entries are `value - data`.

mod assemble;
mod forms;
mod sparse;

pub use assemble::{
    assemble_jacobian, assemble_nitsche_rhs, assemble_residual, dirichlet_data, Assembler, Couplings, DirichletData,
};
pub use forms::{eval_form, FormId};
pub use sparse::{BlockSystem, CsrMatrix, FieldBlock};

pub use crate::fespace::SystemState;

use crate::fespace::FeError;
use crate::scalar::{Point2, Scalar};
use std::fmt;
use std::sync::Arc;

/// Largest `|k1 s|` accepted by the charge law before `sinh` overflows.
pub const CHARGE_ARGUMENT_LIMIT: f64 = 700.0;

#[derive(Debug, thiserror::Error)]
pub enum AssemblyError {
    #[error("charge law evaluated at ψ = {value:e}: |k1 ψ| exceeds {CHARGE_ARGUMENT_LIMIT}")]
    ChargeOverflow { value: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Fe(#[from] FeError),
}

/// `K(s) = k0 sinh(k1 s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeLaw<T = f64> {
    pub k0: T,
    pub k1: T,
}

impl<T: Scalar> ChargeLaw<T> {
    pub fn new(k0: T, k1: T) -> Self {
        ChargeLaw { k0, k1 }
    }

    fn check(&self, s: T) -> Result<T, AssemblyError> {
        let arg = self.k1 * s;
        if arg.abs() > T::lit(CHARGE_ARGUMENT_LIMIT) || !arg.is_finite() {
            return Err(AssemblyError::ChargeOverflow { value: s.as_f64() });
        }
        Ok(arg)
    }

    pub fn eval(&self, s: T) -> Result<T, AssemblyError> {
        Ok(self.k0 * self.check(s)?.sinh())
    }

    pub fn deriv(&self, s: T) -> Result<T, AssemblyError> {
        Ok(self.k0 * self.k1 * self.check(s)?.cosh())
    }
}

pub type VectorField = Arc<dyn Fn(Point2<f64>) -> [f64; 2] + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Point2<f64>) -> f64 + Send + Sync>;
/// Boundary datum evaluated at a point with the facet's outward unit normal.
pub type BoundaryField = Arc<dyn Fn(Point2<f64>, Point2<f64>) -> f64 + Send + Sync>;

/// Physical coefficients.
#[derive(Clone)]
pub struct PhysParams {
    pub mu: f64,
    pub eps: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k0: f64,
    pub k1: f64,
    pub efield: VectorField,
}

impl fmt::Debug for PhysParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhysParams")
            .field("mu", &self.mu)
            .field("eps", &self.eps)
            .field("beta", &self.beta)
            .field("gamma", &self.gamma)
            .field("k0", &self.k0)
            .field("k1", &self.k1)
            .finish_non_exhaustive()
    }
}

impl PhysParams {
    /// Parameters with a constant field `E`.
    pub fn new(mu: f64, eps: f64, beta: f64, gamma: f64, k0: f64, k1: f64, e: [f64; 2]) -> Self {
        PhysParams { mu, eps, beta, gamma, k0, k1, efield: Arc::new(move |_| e) }
    }

    pub fn charge(&self) -> ChargeLaw<f64> {
        ChargeLaw::new(self.k0, self.k1)
    }

    /// Rejects non-positive coefficients. Returns a warning when `gamma` is
    /// below `gamma_floor`, where coercivity of the Nitsche form is not assured.
    pub fn validate(&self, gamma_floor: f64) -> Result<Option<String>, AssemblyError> {
        for (name, v) in [
            ("mu", self.mu),
            ("eps", self.eps),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("k0", self.k0),
            ("k1", self.k1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AssemblyError::Parameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok((self.gamma < gamma_floor)
            .then(|| format!("gamma = {} is below the coercivity floor {gamma_floor}", self.gamma)))
    }
}

/// Right-hand sides and boundary data.
#[derive(Clone)]
pub struct LoadData {
    pub f: VectorField,
    pub g: ScalarField,
    /// Prescribed `u·n` on Navier facets.
    pub g_n: BoundaryField,
    /// Prescribed tangential traction `μ τ·(∇u n) + β u·τ` on Navier facets.
    pub g_tau: BoundaryField,
    pub u_d: VectorField,
    pub psi_d: ScalarField,
}

impl fmt::Debug for LoadData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LoadData { .. }")
    }
}

impl LoadData {
    /// All data identically zero.
    pub fn zero() -> Self {
        LoadData {
            f: Arc::new(|_| [0.0; 2]),
            g: Arc::new(|_| 0.0),
            g_n: Arc::new(|_, _| 0.0),
            g_tau: Arc::new(|_, _| 0.0),
            u_d: Arc::new(|_| [0.0; 2]),
            psi_d: Arc::new(|_| 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn charge_at_zero() {
        let k = ChargeLaw::new(2.0, 3.0);
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
        assert_eq!(k.deriv(0.0).unwrap(), 6.0);
    }

    #[test]
    fn charge_at_one() {
        let k = ChargeLaw::<f64>::new(1.0, 1.0);
        assert!((k.eval(1.0).unwrap() - 1.1752011936438014).abs() < 1e-15);
        assert!((k.deriv(1.0).unwrap() - 1.5430806348152437).abs() < 1e-15);
    }

    #[test]
    fn charge_is_odd_and_monotone() {
        let k = ChargeLaw::new(1.5, 0.7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let s: f64 = rng.gen_range(-50.0..50.0);
            assert_eq!(k.eval(-s).unwrap(), -k.eval(s).unwrap());
            assert!(k.deriv(s).unwrap() >= 1.5 * 0.7);
            assert!(k.eval(s + 0.1).unwrap() > k.eval(s).unwrap());
        }
    }

    #[test]
    fn charge_overflow_names_value() {
        let k = ChargeLaw::new(1.0, 10.0);
        let err = k.eval(71.0).unwrap_err();
        assert!(matches!(err, AssemblyError::ChargeOverflow { value } if value == 71.0));
        assert!(err.to_string().contains("7.1e1"));
        assert!(k.deriv(-80.0).is_err());
        assert!(k.eval(f64::NAN).is_err());
        assert!(k.eval(69.9).is_ok());
    }

    #[test]
    fn single_precision_charge() {
        let k = ChargeLaw::<f32>::new(1.0, 1.0);
        assert!((k.eval(1.0).unwrap() - 1.1752012).abs() < 1e-6);
    }

    #[test]
    fn parameter_validation() {
        let p = PhysParams::new(1.0, 1.0, 1.0, 10.0, 1.0, 1.0, [1.0, -1.0]);
        assert!(p.validate(5.0).unwrap().is_none());
        assert!(p.validate(20.0).unwrap().is_some());
        let bad = PhysParams { mu: 0.0, ..p };
        assert!(matches!(bad.validate(1.0), Err(AssemblyError::Parameter(_))));
    }
}
