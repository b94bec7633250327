use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{check_point, Capabilities, Precision, RegularityConstants, Target};
use crate::dynamics::{GaussianFlow, PhasePoint};
use crate::error::{Error, Result};

/// `U(q) = ½(q−μ)ᵀA(q−μ)` with `A` symmetric positive definite.
///
/// The Hessian is constant, so the infinity-norm Lipschitz constant is zero
/// and the Hamiltonian flow is available in closed form.
#[derive(Clone, Debug)]
pub struct GaussianTarget {
    precision: Precision,
    mean: DVector<f64>,
    flow: OnceLock<GaussianFlow>,
}

impl GaussianTarget {
    pub fn new(precision: Precision) -> Result<Self> {
        let dim = precision.dim();
        Self::with_mean(precision, DVector::zeros(dim))
    }

    pub fn with_mean(precision: Precision, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != precision.dim() {
            return Err(Error::invalid("mean and precision dimensions differ"));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mean has non-finite components"));
        }
        Ok(Self {
            precision,
            mean,
            flow: OnceLock::new(),
        })
    }

    /// Standard normal target, `A = I_d`.
    pub fn standard(dim: usize) -> Self {
        Self::new(Precision::identity(dim)).expect("identity precision is valid")
    }

    pub fn precision(&self) -> &Precision {
        &self.precision
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Covariance `A⁻¹`.
    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.precision {
            Precision::Diagonal(d) => DMatrix::from_diagonal(&d.map(|v| 1.0 / v)),
            Precision::Dense(m) => m
                .clone()
                .try_inverse()
                .expect("SPD precision is invertible"),
        }
    }

    fn flow(&self) -> Result<&GaussianFlow> {
        if let Some(flow) = self.flow.get() {
            return Ok(flow);
        }
        let flow = GaussianFlow::new(&self.precision, self.mean.clone())?;
        Ok(self.flow.get_or_init(|| flow))
    }
}

impl Target for GaussianTarget {
    fn dim(&self) -> usize {
        self.precision.dim()
    }

    fn potential(&self, q: &DVector<f64>) -> Result<f64> {
        check_point(self.dim(), q)?;
        Ok(0.5 * self.precision.quad_form(&(q - &self.mean)))
    }

    fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_point(self.dim(), q)?;
        Ok(self.precision.apply(&(q - &self.mean)))
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_dense_hessian: true,
            has_exact_flow: true,
        }
    }

    fn hessian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_point(self.dim(), q)?;
        Ok(self.precision.to_dense())
    }

    fn hessian_difference_apply(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_point(self.dim(), x)?;
        check_point(self.dim(), y)?;
        check_point(self.dim(), v)?;
        Ok(DVector::zeros(self.dim()))
    }

    fn exact_flow(&self, start: &PhasePoint, t: f64) -> Result<PhasePoint> {
        self.flow()?.apply(start, t)
    }

    fn known_constants(&self) -> Option<RegularityConstants> {
        let (m, big_m) = self.precision.eigen_extremes();
        RegularityConstants::new(m, big_m, 0.0, None).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_examples() {
        let t = GaussianTarget::standard(3);
        assert_eq!(t.potential(&DVector::zeros(3)).unwrap(), 0.0);
        let t4 = GaussianTarget::new(Precision::scaled_identity(1, 4.0).unwrap()).unwrap();
        assert_eq!(t4.potential(&DVector::from_element(1, 1.0)).unwrap(), 2.0);
    }

    #[test]
    fn gradient_of_standard_is_identity() {
        let t = GaussianTarget::standard(4);
        let v = DVector::from_row_slice(&[1.0, -2.0, 0.5, 3.0]);
        assert_eq!(t.gradient(&v).unwrap(), v);
    }

    #[test]
    fn hessian_is_constant() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let t = GaussianTarget::new(Precision::dense(a.clone()).unwrap()).unwrap();
        assert_eq!(t.hessian(&DVector::from_row_slice(&[3.0, -1.0])).unwrap(), a);
    }

    #[test]
    fn rejects_bad_points() {
        let t = GaussianTarget::standard(2);
        assert!(t.potential(&DVector::from_row_slice(&[f64::NAN, 0.0])).is_err());
        assert!(t.gradient(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn shifted_mean() {
        let mu = DVector::from_row_slice(&[1.0, -1.0]);
        let t = GaussianTarget::with_mean(Precision::identity(2), mu.clone()).unwrap();
        assert_eq!(t.potential(&mu).unwrap(), 0.0);
        assert_eq!(t.gradient(&mu).unwrap(), DVector::zeros(2));
    }
}
