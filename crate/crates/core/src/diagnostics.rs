//! Sampling diagnostics: marginal accuracy against a reference sample,
//! integrated autocorrelation time, and the step-size benchmark sweep.
//!
//! Total variation convention: for each coordinate the two samples are
//! binned on a shared equal-width grid over their pooled range and
//! `TV = Σ_b |p̂_b − q̂_b|`, which lies in `[0, 2]`. With this convention
//! `MA = 1 − (1/2d) Σ_i TV_i` lies in `[0, 1]`, equal to 0 for samples with
//! disjoint supports and 1 for identical histograms.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Target;
use crate::rng::derive_seed;
use crate::samplers::{run_sampler, SamplerKind, SamplerSpec};

pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_BURN_IN: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalAccuracyReport {
    pub ma: f64,
    pub per_coordinate_tv: Vec<f64>,
    pub bins: usize,
}

/// Marginal accuracy of `sample` (n × d) against `reference` (m × d).
pub fn marginal_accuracy(
    sample: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    bins: usize,
) -> Result<MarginalAccuracyReport> {
    if bins == 0 {
        return Err(Error::invalid("bins must be at least 1"));
    }
    let d = sample.ncols();
    if reference.ncols() != d || d == 0 {
        return Err(Error::invalid("sample and reference must have the same dimension d >= 1"));
    }
    if sample.nrows() < 2 * bins || reference.nrows() < 2 * bins {
        return Err(Error::invalid(format!(
            "need at least {} rows in both samples for {bins} bins",
            2 * bins
        )));
    }
    if sample.iter().chain(reference.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples contain non-finite values"));
    }
    let per_coordinate_tv: Vec<f64> = (0..d)
        .map(|j| {
            let a = sample.column(j);
            let b = reference.column(j);
            let lo = a.min().min(b.min());
            let hi = a.max().max(b.max());
            if hi == lo {
                return 0.0;
            }
            let ha = histogram(a.iter().copied(), lo, hi, bins);
            let hb = histogram(b.iter().copied(), lo, hi, bins);
            ha.iter().zip(&hb).map(|(p, q)| (p - q).abs()).sum()
        })
        .collect();
    let ma = 1.0 - per_coordinate_tv.iter().sum::<f64>() / (2.0 * d as f64);
    Ok(MarginalAccuracyReport {
        ma,
        per_coordinate_tv,
        bins,
    })
}

fn histogram(values: impl ExactSizeIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let n = values.len() as f64;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts.into_iter().map(|c| c as f64 / n).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SmaxPolicy {
    Fixed(usize),
    /// Stop before the first lag `s` with `ρ_s + ρ_{s+1} ≤ 0`.
    InitialPositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationReport {
    /// `1 + 2 Σ_{s=1}^{s_max} ρ_s`.
    pub act: f64,
    /// `ρ_0 = 1, ρ_1, …, ρ_{s_max}`.
    pub rho: Vec<f64>,
    pub s_max: usize,
    pub test_function: String,
}

pub const MIN_SERIES_LEN: usize = 100;

/// Integrated autocorrelation time of a scalar series.
pub fn autocorrelation_time(series: &[f64], policy: SmaxPolicy) -> Result<AutocorrelationReport> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::invalid(format!(
            "autocorrelation time needs at least {MIN_SERIES_LEN} points, got {n}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |s: usize| -> f64 {
        centered[..n - s]
            .iter()
            .zip(&centered[s..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let gamma0 = autocov(0);
    if !(gamma0 > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let rho_at = |s: usize| autocov(s) / gamma0;

    let mut rho = vec![1.0];
    let s_max = match policy {
        SmaxPolicy::Fixed(s) => {
            if s >= n {
                return Err(Error::invalid(format!("lag {s} exceeds series length {n}")));
            }
            rho.extend((1..=s).map(rho_at));
            s
        }
        SmaxPolicy::InitialPositive => {
            let cap = n / 2;
            let mut next = rho_at(1);
            let mut s = 1;
            loop {
                if s >= cap {
                    break s - 1;
                }
                let current = next;
                next = rho_at(s + 1);
                if current + next <= 0.0 {
                    break s - 1;
                }
                rho.push(current);
                s += 1;
            }
        }
    };
    let act = 1.0 + 2.0 * rho[1..].iter().sum::<f64>();
    Ok(AutocorrelationReport {
        act,
        rho,
        s_max,
        test_function: "series".into(),
    })
}

/// `f(x) = ‖x‖₁` applied to every row.
pub fn test_function_l1(positions: &DMatrix<f64>) -> Vec<f64> {
    positions
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum())
        .collect()
}

/// Configuration of the accuracy/autocorrelation sweep over step sizes.
#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    /// One template per sampler; `eta`, `i_max` and `seed` are overwritten
    /// per cell, `kind`, `trajectory_time` and `start` are kept.
    pub samplers: Vec<SamplerSpec>,
    pub eta_grid: Vec<f64>,
    /// Numerical (integrator) steps per cell.
    pub budget: usize,
    /// Long-run chain standing in for the target.
    pub reference: SamplerSpec,
    pub bins: usize,
    /// Fraction of every chain discarded before computing diagnostics.
    pub burn_in: f64,
    pub master_seed: u64,
    pub smax_policy: SmaxPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub kind: SamplerKind,
    pub eta: f64,
    pub seed: u64,
    pub outer_steps: usize,
    pub numerical_steps_per_iteration: usize,
    pub ma: Option<f64>,
    /// Autocorrelation time of `‖x‖₁` in chain steps.
    pub act: Option<f64>,
    /// `act` times the numerical steps per chain step.
    pub act_numerical: Option<f64>,
    pub accept_rate: Option<f64>,
    pub grad_evals: Option<u64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub kind: SamplerKind,
    pub eta: f64,
    pub steps: usize,
    pub grad_evals: u64,
    pub accept_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub target: String,
    pub budget: usize,
    pub bins: usize,
    pub burn_in: f64,
    pub reference: ReferenceSummary,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkReport {
    pub fn cells_for(&self, kind: SamplerKind) -> impl Iterator<Item = &BenchmarkCell> {
        self.cells.iter().filter(move |c| c.kind == kind)
    }

    /// Cell with the highest marginal accuracy for `kind`.
    pub fn best_ma(&self, kind: SamplerKind) -> Option<&BenchmarkCell> {
        self.cells_for(kind)
            .filter(|c| c.ma.is_some())
            .max_by(|a, b| a.ma.partial_cmp(&b.ma).expect("finite"))
    }

    /// Cell with the lowest autocorrelation time per numerical step.
    pub fn best_act(&self, kind: SamplerKind) -> Option<&BenchmarkCell> {
        self.cells_for(kind)
            .filter(|c| c.act_numerical.is_some())
            .min_by(|a, b| a.act_numerical.partial_cmp(&b.act_numerical).expect("finite"))
    }
}

/// Seed of a benchmark cell; independent of the order cells are run in.
pub fn cell_seed(master: u64, kind: SamplerKind, eta: f64) -> u64 {
    derive_seed(master, &[kind as u64, eta.to_bits()])
}

fn post_burn_in(rows: usize, burn_in: f64) -> usize {
    ((rows as f64) * burn_in).floor() as usize
}

pub fn benchmark<T: Target + ?Sized>(
    target: &T,
    target_name: &str,
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    if config.budget == 0 || config.eta_grid.is_empty() || config.samplers.is_empty() {
        return Err(Error::invalid("benchmark needs a budget, an eta grid and samplers"));
    }
    if !(0.0..1.0).contains(&config.burn_in) {
        return Err(Error::invalid("burn-in fraction must lie in [0, 1)"));
    }
    let reference = run_sampler(target, &config.reference)?;
    let ref_skip = post_burn_in(reference.positions.len(), config.burn_in);
    let ref_positions = reference.positions_matrix(ref_skip);

    let jobs: Vec<(SamplerSpec, f64)> = config
        .samplers
        .iter()
        .flat_map(|s| config.eta_grid.iter().map(move |&eta| (s.clone(), eta)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|(template, eta)| run_cell(target, template, *eta, config, &ref_positions))
        .collect();

    Ok(BenchmarkReport {
        target: target_name.to_string(),
        budget: config.budget,
        bins: config.bins,
        burn_in: config.burn_in,
        reference: ReferenceSummary {
            kind: config.reference.kind,
            eta: config.reference.eta,
            steps: config.reference.i_max,
            grad_evals: reference.grad_evals,
            accept_rate: reference.acceptance_rate(),
        },
        cells,
    })
}

fn run_cell<T: Target + ?Sized>(
    target: &T,
    template: &SamplerSpec,
    eta: f64,
    config: &BenchmarkConfig,
    reference: &DMatrix<f64>,
) -> BenchmarkCell {
    let kind = template.kind;
    let per_iter = kind.numerical_steps_per_iteration(eta, template.trajectory_time);
    let outer_steps = config.budget.checked_div(per_iter).unwrap_or(0);
    let seed = cell_seed(config.master_seed, kind, eta);
    let mut cell = BenchmarkCell {
        kind,
        eta,
        seed,
        outer_steps,
        numerical_steps_per_iteration: per_iter,
        ma: None,
        act: None,
        act_numerical: None,
        accept_rate: None,
        grad_evals: None,
        error: None,
    };
    let spec = SamplerSpec {
        eta,
        i_max: outer_steps,
        seed,
        thin: 1,
        record_leapfrog: false,
        ..template.clone()
    };
    let trace = match run_sampler(target, &spec) {
        Ok(t) => t,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    cell.accept_rate = trace.acceptance_rate();
    cell.grad_evals = Some(trace.grad_evals);
    let positions = trace.positions_matrix(post_burn_in(trace.positions.len(), config.burn_in));
    let mut errors = Vec::new();
    match marginal_accuracy(&positions, reference, config.bins) {
        Ok(r) => cell.ma = Some(r.ma),
        Err(e) => errors.push(format!("marginal accuracy: {e}")),
    }
    match autocorrelation_time(&test_function_l1(&positions), config.smax_policy) {
        Ok(r) => {
            cell.act = Some(r.act);
            cell.act_numerical = Some(r.act * per_iter as f64);
        }
        Err(e) => errors.push(format!("autocorrelation time: {e}")),
    }
    if !errors.is_empty() {
        cell.error = Some(errors.join("; "));
    }
    cell
}

/// Companion CSV of a benchmark report, one row per cell.
pub fn write_benchmark_csv<W: Write>(report: &BenchmarkReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "kind",
        "eta",
        "ma",
        "act",
        "act_numerical",
        "accept_rate",
        "grad_evals",
        "seed",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    for c in &report.cells {
        w.write_record([
            c.kind.name().to_string(),
            format!("{:?}", c.eta),
            opt(c.ma),
            opt(c.act),
            opt(c.act_numerical),
            opt(c.accept_rate),
            c.grad_evals.map(|g| g.to_string()).unwrap_or_default(),
            c.seed.to_string(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
