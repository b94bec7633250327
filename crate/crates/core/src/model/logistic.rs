use nalgebra::{DMatrix, DVector};

use super::{check_point, Capabilities, Dataset, Precision, Target};
use crate::error::{Error, Result};

/// Logistic function `F(s) = 1 / (1 + e^{−s})`, evaluated without overflow.
pub fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log F(s)`, stable for large `|s|`.
pub fn log_logistic(s: f64) -> f64 {
    if s >= 0.0 {
        -(-s).exp().ln_1p()
    } else {
        s - s.exp().ln_1p()
    }
}

/// `F′(s) = F(s)(1 − F(s))`.
pub fn logistic_derivative(s: f64) -> f64 {
    logistic(s) * logistic(-s)
}

/// Bayesian logistic ridge regression posterior.
///
/// ```text
/// U(θ) = ½θᵀΣ⁻¹θ − Σᵢ [ Yᵢ log F(θᵀXᵢ) + (1 − Yᵢ) log F(−θᵀXᵢ) ]
/// ∇U(θ) = Σ⁻¹θ + Σᵢ (F(θᵀXᵢ) − Yᵢ) Xᵢ
/// H_θ  = Σ⁻¹ + Σᵢ F′(θᵀXᵢ) XᵢXᵢᵀ
/// ```
#[derive(Clone, Debug)]
pub struct LogisticTarget {
    x: DMatrix<f64>,
    y: DVector<f64>,
    prior_precision: Precision,
}

impl LogisticTarget {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, prior_precision: Precision) -> Result<Self> {
        let (r, d) = x.shape();
        if r == 0 || d == 0 {
            return Err(Error::invalid("logistic target needs r >= 1 data rows and d >= 1"));
        }
        if y.len() != r {
            return Err(Error::invalid(format!(
                "expected {r} labels, got {}",
                y.len()
            )));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("data matrix has non-finite entries"));
        }
        if prior_precision.dim() != d {
            return Err(Error::invalid("prior precision dimension mismatch"));
        }
        Ok(Self {
            x,
            y,
            prior_precision,
        })
    }

    /// Logistic target with prior `N(0, scale·I)`.
    pub fn from_dataset(data: &Dataset, prior_scale: f64) -> Result<Self> {
        if !(prior_scale > 0.0 && prior_scale.is_finite()) {
            return Err(Error::invalid("prior scale must be positive"));
        }
        let prior = Precision::scaled_identity(data.dim(), 1.0 / prior_scale)?;
        Self::new(data.x.clone(), data.y.clone(), prior)
    }

    /// Data matrix, one datum per row.
    pub fn data(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn prior_precision(&self) -> &Precision {
        &self.prior_precision
    }

    pub fn num_data(&self) -> usize {
        self.x.nrows()
    }
}

impl Target for LogisticTarget {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn potential(&self, q: &DVector<f64>) -> Result<f64> {
        check_point(self.dim(), q)?;
        let s = &self.x * q;
        let nll: f64 = s
            .iter()
            .zip(self.y.iter())
            .map(|(&s, &y)| -(y * log_logistic(s) + (1.0 - y) * log_logistic(-s)))
            .sum();
        Ok(0.5 * self.prior_precision.quad_form(q) + nll)
    }

    fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_point(self.dim(), q)?;
        let mut w = &self.x * q;
        w.iter_mut()
            .zip(self.y.iter())
            .for_each(|(s, &y)| *s = logistic(*s) - y);
        Ok(self.prior_precision.apply(q) + self.x.tr_mul(&w))
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_dense_hessian: true,
            has_exact_flow: false,
        }
    }

    fn hessian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_point(self.dim(), q)?;
        let weights = (&self.x * q).map(logistic_derivative);
        let mut weighted = self.x.clone();
        for (mut row, w) in weighted.row_iter_mut().zip(weights.iter()) {
            row *= *w;
        }
        Ok(self.prior_precision.to_dense() + self.x.tr_mul(&weighted))
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
        let sx = &self.x * x;
        let sy = &self.x * y;
        let mut z = &self.x * v;
        for k in 0..z.len() {
            z[k] *= logistic_derivative(sy[k]) - logistic_derivative(sx[k]);
        }
        Ok(self.x.tr_mul(&z))
    }

    fn as_logistic(&self) -> Option<&LogisticTarget> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: &[f64], y: f64) -> LogisticTarget {
        let d = x.len();
        LogisticTarget::new(
            DMatrix::from_row_slice(1, d, x),
            DVector::from_element(1, y),
            Precision::identity(d),
        )
        .unwrap()
    }

    #[test]
    fn stable_log_logistic() {
        assert!((log_logistic(0.0) + 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_logistic(800.0), 0.0);
        assert!((log_logistic(-800.0) + 800.0).abs() < 1e-12);
        assert!(log_logistic(-800.0).is_finite());
        for s in [-30.0f64, -2.0, 0.5, 7.0] {
            let naive = (1.0 / (1.0 + (-s).exp())).ln();
            assert!((log_logistic(s) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_at_origin_is_r_log_two() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.3, -0.4, -2.0, 5.0]);
        let y = DVector::from_row_slice(&[1.0, 0.0, 1.0]);
        let t = LogisticTarget::new(x, y, Precision::identity(2)).unwrap();
        let u = t.potential(&DVector::zeros(2)).unwrap();
        assert!((u - 3.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gradient_at_origin() {
        let t = single(&[1.0, 0.0], 1.0);
        let g = t.gradient(&DVector::zeros(2)).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15 && g[1] == 0.0);
    }

    #[test]
    fn hessian_single_datum() {
        let t = single(&[1.0], 1.0);
        let h = t.hessian(&DVector::zeros(1)).unwrap();
        assert!((h[(0, 0)] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        let t = single(&[1.0], 0.0);
        let q = DVector::from_element(1, 1000.0);
        assert!(t.potential(&q).unwrap().is_finite());
        assert!(t.gradient(&q).unwrap()[0].is_finite());
    }

    #[test]
    fn validates_labels() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let bad = LogisticTarget::new(x.clone(), DVector::from_element(1, 0.5), Precision::identity(1));
        assert!(bad.is_err());
        let wrong_prior = LogisticTarget::new(x, DVector::from_element(1, 1.0), Precision::identity(2));
        assert!(wrong_prior.is_err());
    }
}
