use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use uhmc::model::{read_dataset_csv, GaussianTarget, LogisticTarget, Precision, Target};
use uhmc::rng::{chain_rng, derive_seed, standard_normal_vector};
use uhmc::samplers::{SamplerKind, Start};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Run one chain and export its trace.
    Sample,
    /// Sweep step sizes and compare samplers against a long reference chain.
    Benchmark,
    /// Run two chains with shared momenta and record their distance.
    Couple,
    /// Regularity constants of a logistic dataset, or the d-sweep of
    /// momentum scales when --d-list is given.
    Regularity,
    /// Theory-driven step size, trajectory time and gradient budget.
    Plan,
    /// Write a synthetic logistic-regression dataset.
    GenData,
    /// Fit the exponent of the largest admissible step size against d.
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Benchmark => "benchmark",
            Command::Couple => "couple",
            Command::Regularity => "regularity",
            Command::Plan => "plan",
            Command::GenData => "gen-data",
            Command::Scaling => "scaling",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetName {
    Gaussian,
    Logistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartName {
    Cold,
    Warm,
}

/// Every option of every subcommand. Options a subcommand does not use are
/// ignored. A JSON file given with --config supplies values for options not
/// set on the command line.
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// Target distribution.
    #[arg(long, value_enum)]
    pub target: Option<TargetName>,
    /// Dataset CSV for the logistic target.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Prior variance of the logistic target.
    #[arg(long)]
    pub prior_scale: Option<f64>,
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of data rows.
    #[arg(long)]
    pub r: Option<usize>,
    /// Gaussian precision eigenvalues run linearly from LO to HI.
    #[arg(long, value_delimiter = ',', value_name = "LO,HI")]
    pub spectrum: Option<Vec<f64>>,
    /// Sampler kind; benchmark accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Trajectory time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Outer chain steps.
    #[arg(long)]
    pub imax: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Numerical steps per benchmark cell.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub eta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub d_list: Option<Vec<usize>>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// cold: minimizer of U; warm: X0 ~ N(0, I).
    #[arg(long, value_enum)]
    pub start: Option<StartName>,
    /// Wasserstein radius of a warm start.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Multiplier standing in for unspecified constants in the planner.
    #[arg(long)]
    pub c_plan: Option<f64>,
    /// Restarts of the Lipschitz search.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iterations per restart of the Lipschitz search.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Keep every n-th position.
    #[arg(long)]
    pub thin: Option<usize>,
    /// Strong convexity constant.
    #[arg(long)]
    pub m: Option<f64>,
    /// Gradient Lipschitz constant.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    /// Hessian Lipschitz constant in the infinity seminorm.
    #[arg(long = "L-inf")]
    #[serde(rename = "L-inf")]
    pub l_inf: Option<f64>,
    /// Gradient bound along bad directions (cold start).
    #[arg(long)]
    pub b: Option<f64>,
    /// Momentum draws (regularity d-sweep) or start points (scaling).
    #[arg(long)]
    pub draws: Option<usize>,
    /// Fraction of each chain discarded before diagnostics.
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub reference_steps: Option<usize>,
    #[arg(long)]
    pub reference_eta: Option<f64>,
    /// Also export intermediate leapfrog states.
    #[arg(long)]
    pub verbose: bool,
    /// JSON file with option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! fill_from {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl RunArgs {
    /// Fills options unset on the command line from the --config file.
    pub fn merge_config_file(mut self, command: Command) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let file = parse_config_json(&text, command)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?;
        fill_from!(self, file;
            target, dataset, prior_scale, d, r, spectrum, kind, eta, t, imax, seed, out, bins,
            budget, eta_grid, d_list, eps, delta, start, omega, c_plan, restarts, iterations,
            thin, m, big_m, l_inf, b, draws, burn_in, reference_steps, reference_eta);
        self.verbose |= file.verbose;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn kinds(&self, default: &[SamplerKind]) -> Result<Vec<SamplerKind>, CliError> {
        match &self.kind {
            None => Ok(default.to_vec()),
            Some(names) => names
                .iter()
                .map(|n| n.parse().map_err(|e: uhmc::Error| CliError::Config(e.to_string())))
                .collect(),
        }
    }

    pub fn single_kind(&self, default: SamplerKind) -> Result<SamplerKind, CliError> {
        let kinds = self.kinds(&[default])?;
        match kinds.as_slice() {
            [k] => Ok(*k),
            _ => Err(CliError::Config("exactly one --kind expected".into())),
        }
    }

    /// Start point; warm starts draw `X0 ~ N(0, I)` from the master seed.
    pub fn start_point(&self, dim: usize, default: StartName) -> Start {
        match self.start.unwrap_or(default) {
            StartName::Cold => Start::Cold,
            StartName::Warm => Start::Warm(warm_point(self.seed(), dim)),
        }
    }

    pub fn build_target(&self) -> Result<BuiltTarget, CliError> {
        let name = self.target.unwrap_or(if self.dataset.is_some() {
            TargetName::Logistic
        } else {
            TargetName::Gaussian
        });
        match name {
            TargetName::Gaussian => {
                let d = positive(self.d.unwrap_or(2), "--d")?;
                let (lo, hi) = match self.spectrum.as_deref() {
                    None => (1.0, 1.0),
                    Some([lo, hi]) => (*lo, *hi),
                    Some(_) => return Err(CliError::Config("--spectrum takes LO,HI".into())),
                };
                let diag = DVector::from_fn(d, |i, _| {
                    if d == 1 {
                        lo
                    } else {
                        lo + (hi - lo) * i as f64 / (d - 1) as f64
                    }
                });
                let target = GaussianTarget::new(Precision::diagonal(diag)?)?;
                Ok(BuiltTarget { label: format!("gaussian(d={d})"), target: Box::new(target), logistic: None })
            }
            TargetName::Logistic => {
                let path = self
                    .dataset
                    .as_ref()
                    .ok_or_else(|| CliError::Config("the logistic target needs --dataset".into()))?;
                let target = load_logistic(path, self.prior_scale.unwrap_or(1.0))?;
                Ok(BuiltTarget {
                    label: format!("logistic({})", path.display()),
                    target: Box::new(target.clone()),
                    logistic: Some(target),
                })
            }
        }
    }
}

pub struct BuiltTarget {
    pub label: String,
    pub target: Box<dyn Target>,
    pub logistic: Option<LogisticTarget>,
}

pub fn warm_point(seed: u64, dim: usize) -> DVector<f64> {
    standard_normal_vector(&mut chain_rng(derive_seed(seed, &[99])), dim)
}

pub fn load_logistic(path: &Path, prior_scale: f64) -> Result<LogisticTarget, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("dataset {} does not exist", path.display())));
    }
    let file = std::fs::File::open(path)?;
    let data = read_dataset_csv(std::io::BufReader::new(file))?;
    Ok(LogisticTarget::from_dataset(&data, prior_scale)?)
}

/// Parses a config file. An optional `command` key, as written in the
/// `config.json` echo, must name the command being run.
pub fn parse_config_json(text: &str, command: Command) -> Result<RunArgs, String> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let map = value.as_object_mut().ok_or("expected a JSON object")?;
    if let Some(named) = map.remove("command") {
        let named: Command = serde_json::from_value(named).map_err(|e| e.to_string())?;
        if named != command {
            return Err(format!("written for `{}`, not `{}`", named.name(), command.name()));
        }
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

pub fn positive(v: usize, flag: &str) -> Result<usize, CliError> {
    if v == 0 {
        Err(CliError::Config(format!("{flag} must be positive")))
    } else {
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_keys_match_flag_names() {
        let args = parse_config_json(r#"{"T": 2.0, "M": 3.0, "eta-grid": [0.1, 0.2], "command": "plan"}"#, Command::Plan)
            .unwrap();
        assert_eq!(args.t, Some(2.0));
        assert_eq!(args.big_m, Some(3.0));
        assert_eq!(args.eta_grid, Some(vec![0.1, 0.2]));
    }

    #[test]
    fn config_file_for_another_command_is_rejected() {
        assert!(parse_config_json(r#"{"command": "sample"}"#, Command::Plan).is_err());
        assert!(parse_config_json(r#"{"etaa": 1}"#, Command::Plan).is_err());
        assert!(parse_config_json("[]", Command::Plan).is_err());
    }

    #[test]
    fn gaussian_spectrum_runs_from_lo_to_hi() {
        let args = RunArgs { d: Some(3), spectrum: Some(vec![1.0, 4.0]), ..Default::default() };
        let built = args.build_target().unwrap();
        let h = built.target.hessian(&DVector::zeros(3)).unwrap();
        assert_eq!(h.diagonal().as_slice(), &[1.0, 2.5, 4.0]);
        let bad = RunArgs { spectrum: Some(vec![1.0]), ..Default::default() };
        assert!(bad.build_target().is_err());
    }
}
