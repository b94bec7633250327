use nalgebra::DVector;

use super::Target;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct ColdStartOptions {
    /// Stop when `‖∇U(q)‖₂ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// First trial step of every backtracking search; `1/M` when the target
    /// knows its gradient-Lipschitz constant, otherwise 1.
    pub initial_step: Option<f64>,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for ColdStartOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            initial_step: None,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

/// Minimizer `x⋆ = argmin U` by gradient descent with Armijo backtracking,
/// started from the origin.
pub fn cold_start<T: Target + ?Sized>(target: &T, tol: f64) -> Result<DVector<f64>> {
    cold_start_with(
        target,
        ColdStartOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn cold_start_with<T: Target + ?Sized>(
    target: &T,
    opts: ColdStartOptions,
) -> Result<DVector<f64>> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("cold start tolerance must be positive"));
    }
    let step0 = opts
        .initial_step
        .or_else(|| target.known_constants().map(|c| 1.0 / c.big_m))
        .unwrap_or(1.0);

    let mut q = DVector::zeros(target.dim());
    let mut u = target.potential(&q)?;
    let mut g = target.gradient(&q)?;
    for iteration in 0..opts.max_iter {
        let gnorm2 = g.norm_squared();
        if gnorm2.sqrt() <= opts.tol {
            return Ok(q);
        }
        let mut step = step0;
        loop {
            let trial = &q - &g * step;
            let u_trial = target.potential(&trial)?;
            let required = opts.sufficient_decrease * step * gnorm2;
            if required > 1e-14 * u.abs().max(1.0) {
                if u_trial <= u - required {
                    q = trial;
                    u = u_trial;
                    g = target.gradient(&q)?;
                    break;
                }
            } else {
                // The Armijo decrease is below the rounding level of U; fall
                // back to requiring a smaller gradient norm.
                let g_trial = target.gradient(&trial)?;
                if g_trial.norm_squared() < gnorm2 {
                    q = trial;
                    u = u_trial;
                    g = g_trial;
                    break;
                }
            }
            step *= opts.shrink;
            if step < 1e-300 {
                // Line search exhausted: U cannot be decreased in f64.
                return Err(Error::Convergence {
                    iterations: iteration,
                    grad_norm: gnorm2.sqrt(),
                    last_iterate: q.as_slice().to_vec(),
                });
            }
        }
    }
    let grad_norm = g.norm();
    if grad_norm <= opts.tol {
        return Ok(q);
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        grad_norm,
        last_iterate: q.as_slice().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_synthetic, GaussianTarget, LogisticTarget, Precision};

    #[test]
    fn standard_gaussian_minimum_is_origin() {
        let q = cold_start(&GaussianTarget::standard(4), 1e-10).unwrap();
        assert!(q.norm() <= 1e-10);
    }

    #[test]
    fn shifted_quadratic() {
        let a = DVector::from_row_slice(&[1.5, -2.0, 0.25]);
        let t = GaussianTarget::with_mean(Precision::identity(3), a.clone()).unwrap();
        let q = cold_start(&t, 1e-10).unwrap();
        assert!((q - a).norm() <= 1e-10);
    }

    #[test]
    fn logistic_minimizer_has_small_gradient() {
        let data = gen_synthetic(6, 15, 2).unwrap();
        let t = LogisticTarget::from_dataset(&data, 1.0).unwrap();
        let q = cold_start(&t, 1e-9).unwrap();
        assert!(t.gradient(&q).unwrap().norm() <= 1e-9);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let t = GaussianTarget::with_mean(
            Precision::diagonal(DVector::from_row_slice(&[1.0, 1e-4])).unwrap(),
            DVector::from_row_slice(&[1.0, 1.0]),
        )
        .unwrap();
        let err = cold_start_with(
            &t,
            ColdStartOptions {
                tol: 1e-12,
                max_iter: 5,
                ..Default::default()
            },
        )
        .unwrap_err();
        match err {
            Error::Convergence {
                iterations,
                last_iterate,
                ..
            } => {
                assert_eq!(iterations, 5);
                assert_eq!(last_iterate.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
