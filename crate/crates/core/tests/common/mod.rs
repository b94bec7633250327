#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use uhmc::model::{gen_synthetic, LogisticTarget, Precision, Target};
use uhmc::rng::{chain_rng, ChainRng};

pub fn rng(seed: u64) -> ChainRng {
    chain_rng(seed)
}

pub fn normal_vec(rng: &mut ChainRng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `Q diag(λ) Qᵀ` with `Q` orthogonal from the QR factor of a Gaussian matrix.
pub fn spd_with_spectrum(rng: &mut ChainRng, spectrum: &[f64]) -> DMatrix<f64> {
    let d = spectrum.len();
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let m = &q * DMatrix::from_diagonal(&DVector::from_column_slice(spectrum)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn random_logistic(d: usize, r: usize, seed: u64) -> LogisticTarget {
    let data = gen_synthetic(d, r, seed).unwrap();
    LogisticTarget::from_dataset(&data, 1.0).unwrap()
}

/// Logistic target with unnormalized Gaussian rows and random labels.
pub fn raw_logistic(rng: &mut ChainRng, d: usize, r: usize, prior: Precision) -> LogisticTarget {
    let x = DMatrix::from_fn(r, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(r, |_, _| if rng.random::<bool>() { 1.0 } else { 0.0 });
    LogisticTarget::new(x, y, prior).unwrap()
}

/// Central differences with step `1e-5·(1 + ‖q‖∞)`.
pub fn fd_gradient<T: Target + ?Sized>(target: &T, q: &DVector<f64>) -> DVector<f64> {
    let h = 1e-5 * (1.0 + q.amax());
    DVector::from_fn(q.len(), |i, _| {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[i] += h;
        qm[i] -= h;
        (target.potential(&qp).unwrap() - target.potential(&qm).unwrap()) / (2.0 * h)
    })
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Sample covariance of the rows of `m`.
pub fn covariance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mean = m.row_mean();
    let centered = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mean[j]);
    centered.transpose() * &centered / (n - 1.0)
}

pub fn frobenius_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
