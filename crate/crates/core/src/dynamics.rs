//! Hamiltonian dynamics with unit mass: `H(q, p) = U(q) + ½‖p‖²`.
//!
//! The leapfrog integrator here is written in the position-first form
//!
//! ```text
//! q' = q + η p − ½η² ∇U(q)
//! p' = p − ½η ∇U(q) − ½η ∇U(q')
//! ```
//!
//! which is algebraically identical to the kick-drift-kick scheme. The
//! gradient at `q'` is handed back so the next step can reuse it; a
//! trajectory of `L = ⌊T/η⌋` steps then costs `L + 1` gradient evaluations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Precision, Target};

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::invalid("position and momentum dimensions differ"));
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("phase point has non-finite components"));
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn with_negated_momentum(&self) -> Self {
        Self {
            q: self.q.clone(),
            p: -&self.p,
        }
    }

    fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// `H(q, p) = U(q) + ½‖p‖²`.
pub fn hamiltonian<T: Target + ?Sized>(target: &T, phase: &PhasePoint) -> Result<f64> {
    Ok(target.potential(&phase.q)? + 0.5 * phase.p.norm_squared())
}

/// Number of leapfrog steps `⌊T/η⌋`, tolerant to representation error in
/// the quotient (e.g. `0.3 / 0.1`).
pub fn leapfrog_steps(eta: f64, t: f64) -> usize {
    (t / eta + 1e-9).floor() as usize
}

/// A set of unit "bad" directions `u_1..u_r`, stored as the rows of an
/// `r × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    rows: DMatrix<f64>,
}

impl DirectionSet {
    pub fn from_rows(rows: DMatrix<f64>) -> Result<Self> {
        for (i, row) in rows.row_iter().enumerate() {
            let n = row.norm();
            if !((n - 1.0).abs() <= 1e-10) {
                return Err(Error::invalid(format!(
                    "direction {i} has norm {n}, expected 1"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn from_vectors(dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("direction dimension mismatch"));
        }
        let rows = DMatrix::from_fn(vectors.len(), dim, |i, j| vectors[i][j]);
        Self::from_rows(rows)
    }

    /// Directions `X_i / ‖X_i‖₂` from the rows of a data matrix.
    pub fn normalized_rows(x: &DMatrix<f64>) -> Result<Self> {
        let mut rows = x.clone();
        for (i, mut row) in rows.row_iter_mut().enumerate() {
            let n = row.norm();
            if !(n > 0.0) {
                return Err(Error::invalid(format!("data row {i} is zero")));
            }
            row /= n;
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// The vector of projections `u_iᵀx`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rows * x
    }
}

/// `‖x‖_{∞,u} = max_i |u_iᵀx|`; zero for an empty direction set.
pub fn inf_seminorm(dirs: &DirectionSet, x: &DVector<f64>) -> f64 {
    if dirs.is_empty() {
        return 0.0;
    }
    dirs.project(x).amax()
}

#[derive(Clone, Debug)]
pub struct LeapfrogStep {
    pub phase: PhasePoint,
    /// `∇U` at the new position, for reuse by the next step.
    pub grad: DVector<f64>,
    pub grad_evals: usize,
}

/// One leapfrog step. `cached_grad`, when given, must equal `∇U(phase.q)`.
pub fn leapfrog_step<T: Target + ?Sized>(
    target: &T,
    phase: &PhasePoint,
    eta: f64,
    cached_grad: Option<&DVector<f64>>,
) -> Result<LeapfrogStep> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("step size must be positive, got {eta}")));
    }
    let mut grad_evals = 0;
    let fresh;
    let grad = match cached_grad {
        Some(g) => g,
        None => {
            grad_evals += 1;
            fresh = target.gradient(&phase.q)?;
            &fresh
        }
    };
    let q_new = &phase.q + &phase.p * eta - grad * (0.5 * eta * eta);
    if q_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { outer: None, inner: 0 });
    }
    let grad_new = target.gradient(&q_new)?;
    grad_evals += 1;
    let p_new = &phase.p - (grad + &grad_new) * (0.5 * eta);
    let next = PhasePoint { q: q_new, p: p_new };
    if !next.is_finite() || grad_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { outer: None, inner: 0 });
    }
    Ok(LeapfrogStep {
        phase: next,
        grad: grad_new,
        grad_evals,
    })
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub end: PhasePoint,
    pub end_grad: DVector<f64>,
    pub steps: usize,
    pub grad_evals: usize,
    pub start_energy: f64,
    pub end_energy: f64,
    /// `|H_end − H_start|`.
    pub energy_drift: f64,
    /// Intermediate phase points (including start and end) when requested.
    pub path: Option<Vec<PhasePoint>>,
}

#[derive(Clone, Debug, Default)]
pub struct TrajectoryOptions<'a> {
    pub initial_grad: Option<&'a DVector<f64>>,
    pub record_path: bool,
}

/// Exactly `⌊T/η⌋` leapfrog steps with gradient caching.
pub fn leapfrog_trajectory<T: Target + ?Sized>(
    target: &T,
    start: &PhasePoint,
    eta: f64,
    t: f64,
) -> Result<TrajectoryResult> {
    leapfrog_trajectory_with(target, start, eta, t, TrajectoryOptions::default())
}

pub fn leapfrog_trajectory_with<T: Target + ?Sized>(
    target: &T,
    start: &PhasePoint,
    eta: f64,
    t: f64,
    options: TrajectoryOptions<'_>,
) -> Result<TrajectoryResult> {
    if !(eta > 0.0 && eta <= t && t.is_finite()) {
        return Err(Error::invalid(format!(
            "trajectory needs 0 < eta <= T (eta={eta}, T={t})"
        )));
    }
    let steps = leapfrog_steps(eta, t);
    let start_energy = hamiltonian(target, start)?;

    let mut grad_evals = 0;
    let mut grad = match options.initial_grad {
        Some(g) => g.clone(),
        None => {
            grad_evals += 1;
            target.gradient(&start.q)?
        }
    };
    let mut path = options.record_path.then(|| vec![start.clone()]);
    let mut phase = start.clone();
    for j in 0..steps {
        let step = leapfrog_step(target, &phase, eta, Some(&grad))
            .map_err(|e| match e {
                Error::Divergence { outer, .. } => Error::Divergence { outer, inner: j },
                other => other,
            })?;
        grad_evals += step.grad_evals;
        phase = step.phase;
        grad = step.grad;
        if let Some(path) = path.as_mut() {
            path.push(phase.clone());
        }
    }
    let end_energy = hamiltonian(target, &phase)?;
    Ok(TrajectoryResult {
        end: phase,
        end_grad: grad,
        steps,
        grad_evals,
        start_energy,
        end_energy,
        energy_drift: (end_energy - start_energy).abs(),
        path,
    })
}

/// Closed-form flow of `H = ½(q−μ)ᵀA(q−μ) + ½‖p‖²`.
///
/// Each eigen-coordinate of `A` is a harmonic oscillator with frequency
/// `√λ`. The eigendecomposition is computed once at construction.
#[derive(Clone, Debug)]
pub struct GaussianFlow {
    basis: Option<DMatrix<f64>>,
    freqs: DVector<f64>,
    mean: DVector<f64>,
}

impl GaussianFlow {
    pub fn new(precision: &Precision, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != precision.dim() {
            return Err(Error::invalid("mean and precision dimensions differ"));
        }
        let (basis, lambdas) = precision.eigen();
        if lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid("precision is not positive definite"));
        }
        Ok(Self {
            basis,
            freqs: lambdas.map(f64::sqrt),
            mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.freqs.len()
    }

    pub fn apply(&self, start: &PhasePoint, t: f64) -> Result<PhasePoint> {
        if start.dim() != self.dim() {
            return Err(Error::invalid("phase point dimension mismatch"));
        }
        let centered = &start.q - &self.mean;
        let (mut q, mut p) = match &self.basis {
            Some(b) => (b.tr_mul(&centered), b.tr_mul(&start.p)),
            None => (centered, start.p.clone()),
        };
        for i in 0..q.len() {
            let w = self.freqs[i];
            let (s, c) = (w * t).sin_cos();
            let (q0, p0) = (q[i], p[i]);
            q[i] = q0 * c + p0 / w * s;
            p[i] = p0 * c - w * q0 * s;
        }
        let (q, p) = match &self.basis {
            Some(b) => (b * q, b * p),
            None => (q, p),
        };
        Ok(PhasePoint {
            q: q + &self.mean,
            p,
        })
    }
}

/// Exact flow for `U(q) = ½qᵀAq` with `A` symmetric positive definite.
pub fn exact_gaussian_flow(
    precision: &DMatrix<f64>,
    start: &PhasePoint,
    t: f64,
) -> Result<PhasePoint> {
    let precision = Precision::dense(precision.clone())?;
    let dim = precision.dim();
    GaussianFlow::new(&precision, DVector::zeros(dim))?.apply(start, t)
}
