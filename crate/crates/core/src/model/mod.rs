//! Target distributions `π ∝ exp(−U)`.
//!
//! A [`Target`] exposes the potential `U`, its gradient and optionally a dense
//! Hessian or the closed-form Hamiltonian flow. Two concrete targets are
//! provided: [`GaussianTarget`] (quadratic potential, exact flow available)
//! and [`LogisticTarget`] (Bayesian logistic ridge regression).
//!
//! Targets are immutable after construction and `Send + Sync`; gradient
//! evaluation counts are tracked by the samplers, not by the target.

mod data;
mod gaussian;
mod logistic;
mod optimize;
mod precision;

pub use data::{gen_synthetic, read_dataset_csv, write_dataset_csv, Dataset};
pub use gaussian::GaussianTarget;
pub use logistic::{log_logistic, logistic, logistic_derivative, LogisticTarget};
pub use optimize::{cold_start, cold_start_with, ColdStartOptions};
pub use precision::Precision;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::PhasePoint;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub has_dense_hessian: bool,
    pub has_exact_flow: bool,
}

/// Regularity constants of a strongly log-concave target.
///
/// `m` and `M` bound the Hessian spectrum, `l_inf` is the infinity-norm
/// Lipschitz constant of the Hessian with respect to the target's bad
/// directions, and `b` is the offset of the Gaussian tail bound (absent when
/// it is not available in closed form).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "L_inf")]
    pub l_inf: f64,
    pub b: Option<f64>,
    pub kappa: f64,
}

impl RegularityConstants {
    pub fn new(m: f64, big_m: f64, l_inf: f64, b: Option<f64>) -> Result<Self> {
        if !(m > 0.0 && m <= big_m && big_m.is_finite()) {
            return Err(Error::invalid(format!(
                "regularity constants need 0 < m <= M (got m={m}, M={big_m})"
            )));
        }
        if !(l_inf >= 0.0) || b.is_some_and(|b| !(b >= 0.0)) {
            return Err(Error::invalid("L_inf and b must be non-negative"));
        }
        Ok(Self {
            m,
            big_m,
            l_inf,
            b,
            kappa: big_m / m,
        })
    }
}

pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    fn potential(&self, q: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>>;

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    fn hessian(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Err(Error::Unsupported("dense Hessian"))
    }

    /// `(H_y − H_x) v`. The default goes through two dense Hessians.
    fn hessian_difference_apply(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok((self.hessian(y)? - self.hessian(x)?) * v)
    }

    /// Closed-form Hamiltonian flow for time `t`.
    fn exact_flow(&self, _start: &PhasePoint, _t: f64) -> Result<PhasePoint> {
        Err(Error::Unsupported("exact Hamiltonian flow"))
    }

    fn known_constants(&self) -> Option<RegularityConstants> {
        None
    }

    fn as_logistic(&self) -> Option<&LogisticTarget> {
        None
    }
}

/// Dimension and finiteness check shared by all targets.
pub(crate) fn check_point(dim: usize, q: &DVector<f64>) -> Result<()> {
    if q.len() != dim {
        return Err(Error::invalid(format!(
            "expected a point of dimension {dim}, got {}",
            q.len()
        )));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("point has non-finite components"));
    }
    Ok(())
}
