//! Step-size scaling with dimension.
//!
//! For a standard Gaussian in dimension `d`, `η*(d)` is the first step size
//! at which the mean leapfrog endpoint error against the exact flow reaches
//! `ε`. The exponent of `η*(d)` is fitted by least squares on a log-log
//! scale. By default the trajectory closes with one shorter leapfrog step so
//! that it ends exactly at `T`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{leapfrog_step, leapfrog_steps, leapfrog_trajectory, PhasePoint};
use crate::error::{Error, Result};
use crate::model::{GaussianTarget, Target};
use crate::rng::{chain_rng, derive_seed, standard_normal_vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub d_list: Vec<usize>,
    #[serde(rename = "T")]
    pub t: f64,
    pub eps: f64,
    pub draws: usize,
    pub seed: u64,
    /// First step size of the upward scan; must have error below `eps`.
    pub eta_start: f64,
    /// Multiplier of the upward scan.
    pub growth: f64,
    /// Bisection stops when the bracket is relatively narrower than this.
    pub rel_tol: f64,
    pub endpoint: EndpointTime,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            d_list: vec![16, 64, 256, 1024],
            t: 1.0,
            eps: 0.1,
            draws: 20,
            seed: 0,
            eta_start: 1e-3,
            growth: 1.25,
            rel_tol: 1e-8,
            endpoint: EndpointTime::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub d: usize,
    pub eta_star: f64,
    pub error_at_eta_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
}

/// Which time the leapfrog endpoint is compared at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointTime {
    /// `⌊T/η⌋` steps of size `η`, then one closing step of size
    /// `T − η⌊T/η⌋`, compared with the exact flow at `T`.
    Exact,
    /// `⌊T/η⌋` steps of size `η`, compared with the exact flow at `η⌊T/η⌋`.
    Truncated,
}

/// Mean over `starts` of `‖q_leapfrog − q_exact‖₂`.
pub fn endpoint_error<T: Target + ?Sized>(
    target: &T,
    starts: &[PhasePoint],
    eta: f64,
    t: f64,
    mode: EndpointTime,
) -> Result<f64> {
    if starts.is_empty() {
        return Err(Error::invalid("endpoint error needs at least one start"));
    }
    let t_steps = eta * leapfrog_steps(eta, t) as f64;
    let remainder = t - t_steps;
    let mut total = 0.0;
    for start in starts {
        let lf = leapfrog_trajectory(target, start, eta, t)?;
        let (end, t_cmp) = match mode {
            EndpointTime::Exact if remainder > 1e-12 * t => {
                let last = leapfrog_step(target, &lf.end, remainder, Some(&lf.end_grad))?;
                (last.phase, t)
            }
            EndpointTime::Exact => (lf.end, t),
            EndpointTime::Truncated => (lf.end, t_steps),
        };
        let exact = target.exact_flow(start, t_cmp)?;
        total += (&end.q - &exact.q).norm();
    }
    Ok(total / starts.len() as f64)
}

/// First `η` with `error(η) = eps`: a geometric scan finds a bracket, then
/// bisection narrows it.
pub fn find_eta_star<F>(mut error: F, eps: f64, cfg: &ScalingConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut lo = cfg.eta_start;
    if error(lo)? >= eps {
        return Err(Error::invalid(format!(
            "error already reaches {eps} at the starting step size {lo}"
        )));
    }
    let mut hi = lo;
    loop {
        let next = hi * cfg.growth;
        if next > cfg.t {
            return Err(Error::invalid("no step size up to T reaches the target error"));
        }
        if error(next)? >= eps {
            hi = next;
            break;
        }
        lo = next;
        hi = next;
    }
    while (hi - lo) > cfg.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if error(mid)? >= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, error(hi)?))
}

/// Least-squares `(slope, intercept)` of `ln y` against `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("log-log fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("log-log fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

pub fn scaling_experiment(cfg: &ScalingConfig) -> Result<ScalingReport> {
    if cfg.d_list.len() < 2 || cfg.d_list.contains(&0) {
        return Err(Error::invalid("scaling needs at least two positive dimensions"));
    }
    if !(cfg.t > 0.0 && cfg.eps > 0.0 && cfg.draws > 0 && cfg.eta_start > 0.0 && cfg.growth > 1.0)
    {
        return Err(Error::invalid("scaling needs T, eps, eta_start > 0, draws >= 1, growth > 1"));
    }
    let mut points = Vec::with_capacity(cfg.d_list.len());
    for &d in &cfg.d_list {
        let target = GaussianTarget::standard(d);
        let mut rng = chain_rng(derive_seed(cfg.seed, &[d as u64]));
        let starts = (0..cfg.draws)
            .map(|_| {
                let q = standard_normal_vector(&mut rng, d);
                let p = standard_normal_vector(&mut rng, d);
                PhasePoint::new(q, p)
            })
            .collect::<Result<Vec<_>>>()?;
        let (eta_star, err) =
            find_eta_star(
            |eta| endpoint_error(&target, &starts, eta, cfg.t, cfg.endpoint),
            cfg.eps,
            cfg,
        )?;
        points.push(ScalingPoint {
            d,
            eta_star,
            error_at_eta_star: err,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.d as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.eta_star).collect();
    let (slope, intercept) = fit_loglog(&xs, &ys)?;
    Ok(ScalingReport {
        config: cfg.clone(),
        points,
        slope,
        intercept,
    })
}
