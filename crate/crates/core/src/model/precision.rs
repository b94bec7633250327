use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A symmetric positive-definite matrix, stored densely or as a diagonal.
///
/// Used both as the precision of a Gaussian target and as the prior
/// precision of the logistic target. Diagonal storage skips the O(d²)
/// matrix-vector products and the eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub enum Precision {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Precision {
    pub fn identity(dim: usize) -> Self {
        Precision::Diagonal(DVector::from_element(dim, 1.0))
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        Self::diagonal(DVector::from_element(dim, scale))
    }

    pub fn diagonal(diag: DVector<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("precision must have dimension >= 1"));
        }
        if diag.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::invalid(
                "diagonal precision entries must be finite and positive",
            ));
        }
        Ok(Precision::Diagonal(diag))
    }

    /// Validates symmetry (1e-12 relative to the largest entry) and strict
    /// positivity of the spectrum.
    pub fn dense(mat: DMatrix<f64>) -> Result<Self> {
        let d = mat.nrows();
        if d == 0 || mat.ncols() != d {
            return Err(Error::invalid("precision must be a non-empty square matrix"));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("precision has non-finite entries"));
        }
        let scale = mat.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in (i + 1)..d {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid("precision matrix is not symmetric"));
                }
            }
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        let lambda_min = sym.clone().symmetric_eigenvalues().min();
        if !(lambda_min > 0.0) {
            return Err(Error::invalid(format!(
                "precision matrix is not positive definite (smallest eigenvalue {lambda_min:e})"
            )));
        }
        Ok(Precision::Dense(sym))
    }

    pub fn dim(&self) -> usize {
        match self {
            Precision::Diagonal(d) => d.len(),
            Precision::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, q: &DVector<f64>) -> DVector<f64> {
        match self {
            Precision::Diagonal(d) => d.component_mul(q),
            Precision::Dense(m) => m * q,
        }
    }

    pub fn quad_form(&self, q: &DVector<f64>) -> f64 {
        match self {
            Precision::Diagonal(d) => d.iter().zip(q.iter()).map(|(a, x)| a * x * x).sum(),
            Precision::Dense(m) => q.dot(&(m * q)),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Precision::Diagonal(d) => DMatrix::from_diagonal(d),
            Precision::Dense(m) => m.clone(),
        }
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_extremes(&self) -> (f64, f64) {
        match self {
            Precision::Diagonal(d) => (d.min(), d.max()),
            Precision::Dense(m) => {
                let ev = m.clone().symmetric_eigenvalues();
                (ev.min(), ev.max())
            }
        }
    }

    /// Eigenvectors (columns) and eigenvalues. `None` eigenvectors means the
    /// identity basis.
    pub fn eigen(&self) -> (Option<DMatrix<f64>>, DVector<f64>) {
        match self {
            Precision::Diagonal(d) => (None, d.clone()),
            Precision::Dense(m) => {
                let SymmetricEigen {
                    eigenvectors,
                    eigenvalues,
                } = m.clone().symmetric_eigen();
                (Some(eigenvectors), eigenvalues)
            }
        }
    }

    /// Returns `Some(c)` when the matrix equals `c·I` up to `rel_tol`.
    pub fn scalar_multiple_of_identity(&self, rel_tol: f64) -> Option<f64> {
        let dense = self.to_dense();
        let d = dense.nrows();
        let c = dense.diagonal().mean();
        let tol = rel_tol * c.abs().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..d {
                let expected = if i == j { c } else { 0.0 };
                if (dense[(i, j)] - expected).abs() > tol {
                    return None;
                }
            }
        }
        Some(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_spd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Precision::dense(m).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.0, 2.0]);
        assert!(Precision::dense(asym).is_err());
        assert!(Precision::diagonal(DVector::from_vec(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn diagonal_and_dense_agree() {
        let diag = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let a = Precision::diagonal(diag.clone()).unwrap();
        let b = Precision::dense(DMatrix::from_diagonal(&diag)).unwrap();
        let q = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        assert_eq!(a.apply(&q), b.apply(&q));
        assert!((a.quad_form(&q) - b.quad_form(&q)).abs() < 1e-14);
        let (lo, hi) = b.eigen_extremes();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn detects_scaled_identity() {
        assert_eq!(
            Precision::scaled_identity(3, 0.5)
                .unwrap()
                .scalar_multiple_of_identity(1e-12),
            Some(0.5)
        );
        let d = Precision::diagonal(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(d.scalar_multiple_of_identity(1e-12), None);
    }
}
