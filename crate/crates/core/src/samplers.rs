//! The benchmarked Markov chains and the synchronous-coupling runner.
//!
//! Gradient evaluations per run, asserted by the tests:
//!
//! | kind          | gradient evaluations      |
//! |---------------|---------------------------|
//! | UHMC, MHMC    | `i_max · (⌊T/η⌋ + 1)`     |
//! | MALA          | `i_max + 1`               |
//! | ULA           | `i_max`                   |
//! | idealized HMC | `0`                       |
//!
//! HMC kinds do not carry gradients across outer steps; each trajectory
//! starts with a fresh evaluation at `X_i`. MALA caches the gradient of the
//! current state, so each step costs one evaluation at the proposal.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, leapfrog_trajectory_with, PhasePoint, TrajectoryOptions};
use crate::error::{Error, Result};
use crate::model::{cold_start, Target};
use crate::rng::{chain_rng, derive_seed, standard_normal_vector};

/// Gradient-norm tolerance used when a spec asks for a cold start.
pub const COLD_START_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uhmc,
    Mhmc,
    Mala,
    Ula,
    IdealizedHmc,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [
        SamplerKind::Uhmc,
        SamplerKind::Mhmc,
        SamplerKind::Mala,
        SamplerKind::Ula,
        SamplerKind::IdealizedHmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uhmc => "uhmc",
            SamplerKind::Mhmc => "mhmc",
            SamplerKind::Mala => "mala",
            SamplerKind::Ula => "ula",
            SamplerKind::IdealizedHmc => "idealized_hmc",
        }
    }

    /// Kinds whose proposals go through a Metropolis–Hastings correction.
    pub fn is_adjusted(self) -> bool {
        matches!(self, SamplerKind::Mhmc | SamplerKind::Mala)
    }

    /// Kinds driven by leapfrog trajectories of length `T`.
    pub fn is_leapfrog_hmc(self) -> bool {
        matches!(self, SamplerKind::Uhmc | SamplerKind::Mhmc)
    }

    /// Numerical (integrator) steps per outer Markov-chain step.
    pub fn numerical_steps_per_iteration(self, eta: f64, trajectory_time: f64) -> usize {
        if self.is_leapfrog_hmc() {
            crate::dynamics::leapfrog_steps(eta, trajectory_time)
        } else {
            1
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uhmc" => Ok(SamplerKind::Uhmc),
            "mhmc" => Ok(SamplerKind::Mhmc),
            "mala" => Ok(SamplerKind::Mala),
            "ula" => Ok(SamplerKind::Ula),
            "idealized_hmc" | "idealized" | "ihmc" => Ok(SamplerKind::IdealizedHmc),
            other => Err(Error::invalid(format!("unknown sampler kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    /// The minimizer of `U`.
    Cold,
    /// A point believed to be close to a stationary draw.
    Warm(DVector<f64>),
    Explicit(DVector<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    /// Step size; ignored by idealized HMC.
    pub eta: f64,
    /// Trajectory time `T`; used by the HMC kinds only. Leapfrog kinds
    /// integrate for `η⌊T/η⌋`.
    pub trajectory_time: f64,
    pub i_max: usize,
    pub seed: u64,
    pub start: Start,
    /// Keep every `thin`-th position (step 0 always kept).
    pub thin: usize,
    /// Record every intermediate leapfrog phase point (leapfrog kinds only).
    pub record_leapfrog: bool,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, eta: f64, trajectory_time: f64, i_max: usize, seed: u64) -> Self {
        Self {
            kind,
            eta,
            trajectory_time,
            i_max,
            seed,
            start: Start::Cold,
            thin: 1,
            record_leapfrog: false,
        }
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_max == 0 {
            return Err(Error::invalid("i_max must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thinning factor must be at least 1"));
        }
        let t = self.trajectory_time;
        match self.kind {
            SamplerKind::IdealizedHmc => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::invalid("trajectory time must be positive"));
                }
            }
            SamplerKind::Uhmc | SamplerKind::Mhmc => {
                if !(self.eta > 0.0 && self.eta <= t && t.is_finite()) {
                    return Err(Error::invalid(format!(
                        "HMC needs 0 < eta <= T (eta={}, T={t})",
                        self.eta
                    )));
                }
            }
            SamplerKind::Mala | SamplerKind::Ula => {
                if !(self.eta > 0.0 && self.eta.is_finite()) {
                    return Err(Error::invalid("step size must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Recorded output of one chain.
#[derive(Clone, Debug)]
pub struct Trace {
    pub kind: SamplerKind,
    /// Chain step index of every stored position.
    pub recorded_steps: Vec<usize>,
    pub positions: Vec<DVector<f64>>,
    /// Length `i_max + 1`. Entry 0 is `U(X_0)`. For HMC kinds entry `i + 1`
    /// is the Hamiltonian at the end of trajectory `i` (the proposal for
    /// MHMC); for Langevin kinds it is `U(X_{i+1})`.
    pub energies: Vec<f64>,
    /// Per-step accept decisions, present for MHMC and MALA only.
    pub accepts: Option<Vec<bool>>,
    pub accept_probs: Option<Vec<f64>>,
    pub grad_evals: u64,
    pub wall_time: f64,
    /// Leapfrog phase points of every trajectory when requested.
    pub leapfrog_paths: Option<Vec<Vec<PhasePoint>>>,
}

impl Trace {
    fn new(kind: SamplerKind, spec: &SamplerSpec) -> Self {
        Self {
            kind,
            recorded_steps: Vec::with_capacity(spec.i_max / spec.thin + 1),
            positions: Vec::with_capacity(spec.i_max / spec.thin + 1),
            energies: Vec::with_capacity(spec.i_max + 1),
            accepts: kind.is_adjusted().then(|| Vec::with_capacity(spec.i_max)),
            accept_probs: kind.is_adjusted().then(|| Vec::with_capacity(spec.i_max)),
            grad_evals: 0,
            wall_time: 0.0,
            leapfrog_paths: (spec.record_leapfrog && kind.is_leapfrog_hmc()).then(Vec::new),
        }
    }

    fn record(&mut self, step: usize, thin: usize, x: &DVector<f64>) {
        if step.is_multiple_of(thin) {
            self.recorded_steps.push(step);
            self.positions.push(x.clone());
        }
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, |p| p.len())
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        self.accepts.as_ref().map(|a| {
            if a.is_empty() {
                0.0
            } else {
                a.iter().filter(|&&b| b).count() as f64 / a.len() as f64
            }
        })
    }

    /// Stored positions from index `skip` on, one per row.
    pub fn positions_matrix(&self, skip: usize) -> DMatrix<f64> {
        let rows = &self.positions[skip.min(self.positions.len())..];
        DMatrix::from_fn(rows.len(), self.dim(), |i, j| rows[i][j])
    }

    /// Equality of everything except wall time.
    pub fn same_output(&self, other: &Trace) -> bool {
        self.kind == other.kind
            && self.recorded_steps == other.recorded_steps
            && self.positions == other.positions
            && self.energies.iter().map(|e| e.to_bits()).eq(other.energies.iter().map(|e| e.to_bits()))
            && self.accepts == other.accepts
            && self.grad_evals == other.grad_evals
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            kind: self.kind,
            i_max: self.energies.len().saturating_sub(1),
            recorded: self.positions.len(),
            grad_evals: self.grad_evals,
            acceptance_rate: self.acceptance_rate(),
        }
    }
}

/// Deterministic summary of a trace (wall time is reported separately).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub kind: SamplerKind,
    pub i_max: usize,
    pub recorded: usize,
    pub grad_evals: u64,
    pub acceptance_rate: Option<f64>,
}

fn resolve_start<T: Target + ?Sized>(target: &T, start: &Start) -> Result<DVector<f64>> {
    let x = match start {
        Start::Cold => cold_start(target, COLD_START_TOL)?,
        Start::Warm(x) | Start::Explicit(x) => x.clone(),
    };
    crate::model::check_point(target.dim(), &x)?;
    Ok(x)
}

fn expect_kind(spec: &SamplerSpec, allowed: &[SamplerKind]) -> Result<()> {
    if !allowed.contains(&spec.kind) {
        return Err(Error::invalid(format!(
            "sampler kind {} not accepted here (expected one of {allowed:?})",
            spec.kind
        )));
    }
    spec.validate()
}

/// Runs the chain named by `spec.kind`.
pub fn run_sampler<T: Target + ?Sized>(target: &T, spec: &SamplerSpec) -> Result<Trace> {
    match spec.kind {
        SamplerKind::Uhmc => run_uhmc(target, spec),
        SamplerKind::Mhmc => run_mhmc(target, spec),
        SamplerKind::Mala | SamplerKind::Ula => run_langevin(target, spec),
        SamplerKind::IdealizedHmc => run_idealized_hmc(target, spec),
    }
}

/// Independent chains with seeds derived from `(master_seed, chain_index)`.
pub fn run_chains<T: Target + ?Sized>(
    target: &T,
    spec: &SamplerSpec,
    chains: usize,
    master_seed: u64,
) -> Vec<Result<Trace>> {
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut s = spec.clone();
            s.seed = derive_seed(master_seed, &[c as u64]);
            run_sampler(target, &s)
        })
        .collect()
}

/// Unadjusted HMC: fresh momentum, `⌊T/η⌋` leapfrog steps, keep the endpoint.
pub fn run_uhmc<T: Target + ?Sized>(target: &T, spec: &SamplerSpec) -> Result<Trace> {
    expect_kind(spec, &[SamplerKind::Uhmc])?;
    run_leapfrog_chain(target, spec, false)
}

/// Metropolis-adjusted HMC with acceptance `min(1, exp(H(X_i, p_i) − H(q*, p*)))`.
pub fn run_mhmc<T: Target + ?Sized>(target: &T, spec: &SamplerSpec) -> Result<Trace> {
    expect_kind(spec, &[SamplerKind::Mhmc])?;
    run_leapfrog_chain(target, spec, true)
}

fn run_leapfrog_chain<T: Target + ?Sized>(
    target: &T,
    spec: &SamplerSpec,
    adjusted: bool,
) -> Result<Trace> {
    let clock = Instant::now();
    let d = target.dim();
    let mut x = resolve_start(target, &spec.start)?;
    let mut rng = chain_rng(spec.seed);
    let mut trace = Trace::new(spec.kind, spec);
    trace.energies.push(target.potential(&x)?);
    trace.record(0, spec.thin, &x);

    for i in 0..spec.i_max {
        let p = standard_normal_vector(&mut rng, d);
        let start = PhasePoint { q: x, p };
        let traj = leapfrog_trajectory_with(
            target,
            &start,
            spec.eta,
            spec.trajectory_time,
            TrajectoryOptions {
                initial_grad: None,
                record_path: spec.record_leapfrog,
            },
        )
        .map_err(|e| e.at_outer_step(i))?;
        trace.grad_evals += traj.grad_evals as u64;
        trace.energies.push(traj.end_energy);
        if let (Some(paths), Some(path)) = (trace.leapfrog_paths.as_mut(), traj.path) {
            paths.push(path);
        }

        x = if adjusted {
            // Momentum negation makes the proposal an involution; irrelevant
            // under full refresh.
            let proposal = traj.end.with_negated_momentum();
            let log_ratio = traj.start_energy - traj.end_energy;
            let prob = log_ratio.min(0.0).exp();
            let u: f64 = rng.random();
            let accept = u < prob;
            trace.accepts.as_mut().expect("adjusted").push(accept);
            trace.accept_probs.as_mut().expect("adjusted").push(prob);
            if accept {
                proposal.q
            } else {
                start.q
            }
        } else {
            traj.end.q
        };
        trace.record(i + 1, spec.thin, &x);
    }
    trace.wall_time = clock.elapsed().as_secs_f64();
    Ok(trace)
}

/// MALA and ULA with proposal `x' = x − ½η²∇U(x) + η ξ`, `ξ ~ N(0, I)`.
pub fn run_langevin<T: Target + ?Sized>(target: &T, spec: &SamplerSpec) -> Result<Trace> {
    expect_kind(spec, &[SamplerKind::Mala, SamplerKind::Ula])?;
    let clock = Instant::now();
    let adjusted = spec.kind == SamplerKind::Mala;
    let d = target.dim();
    let eta = spec.eta;
    let half_eta2 = 0.5 * eta * eta;
    let mut x = resolve_start(target, &spec.start)?;
    let mut rng = chain_rng(spec.seed);
    let mut trace = Trace::new(spec.kind, spec);
    let mut u_x = target.potential(&x)?;
    trace.energies.push(u_x);
    trace.record(0, spec.thin, &x);

    let mut grad: Option<DVector<f64>> = None;
    for i in 0..spec.i_max {
        let g = match grad.take() {
            Some(g) => g,
            None => {
                trace.grad_evals += 1;
                target.gradient(&x)?
            }
        };
        let xi = standard_normal_vector(&mut rng, d);
        let proposal = &x - &g * half_eta2 + xi * eta;
        if proposal.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                outer: Some(i),
                inner: 0,
            });
        }
        if adjusted {
            let u_prop = target.potential(&proposal)?;
            let g_prop = target.gradient(&proposal)?;
            trace.grad_evals += 1;
            let fwd = (&proposal - &x + &g * half_eta2).norm_squared();
            let bwd = (&x - &proposal + &g_prop * half_eta2).norm_squared();
            let log_ratio = u_x - u_prop - (bwd - fwd) / (2.0 * eta * eta);
            let prob = log_ratio.min(0.0).exp();
            let u: f64 = rng.random();
            let accept = u < prob;
            trace.accepts.as_mut().expect("adjusted").push(accept);
            trace.accept_probs.as_mut().expect("adjusted").push(prob);
            if accept {
                x = proposal;
                u_x = u_prop;
                grad = Some(g_prop);
            } else {
                grad = Some(g);
            }
        } else {
            x = proposal;
            u_x = target.potential(&x)?;
        }
        trace.energies.push(u_x);
        trace.record(i + 1, spec.thin, &x);
    }
    trace.wall_time = clock.elapsed().as_secs_f64();
    Ok(trace)
}

/// HMC driven by the exact Hamiltonian flow for time `T`; requires a target
/// with closed-form dynamics.
pub fn run_idealized_hmc<T: Target + ?Sized>(target: &T, spec: &SamplerSpec) -> Result<Trace> {
    expect_kind(spec, &[SamplerKind::IdealizedHmc])?;
    if !target.capabilities().has_exact_flow {
        return Err(Error::Unsupported("idealized HMC needs an exact Hamiltonian flow"));
    }
    let clock = Instant::now();
    let d = target.dim();
    let mut x = resolve_start(target, &spec.start)?;
    let mut rng = chain_rng(spec.seed);
    let mut trace = Trace::new(spec.kind, spec);
    trace.energies.push(target.potential(&x)?);
    trace.record(0, spec.thin, &x);
    for i in 0..spec.i_max {
        let p = standard_normal_vector(&mut rng, d);
        let end = target.exact_flow(&PhasePoint { q: x, p }, spec.trajectory_time)?;
        trace.energies.push(hamiltonian(target, &end)?);
        x = end.q;
        trace.record(i + 1, spec.thin, &x);
    }
    trace.wall_time = clock.elapsed().as_secs_f64();
    Ok(trace)
}

/// Distances between two synchronously coupled chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    /// `‖X_i − Y_i‖₂` for `i = 0..=i_max`.
    pub distances: Vec<f64>,
    /// `distances[i+1] / distances[i]`, absent when `distances[i] < 1e-14`.
    pub ratios: Vec<Option<f64>>,
}

/// Advances two chains with the same momentum draw at every step.
/// Restricted to unadjusted and idealized kinds, which need no shared
/// accept/reject uniforms.
pub fn run_coupled<T: Target + ?Sized>(
    target: &T,
    spec: &SamplerSpec,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
) -> Result<CouplingRecord> {
    expect_kind(spec, &[SamplerKind::Uhmc, SamplerKind::IdealizedHmc])?;
    let d = target.dim();
    crate::model::check_point(d, x0)?;
    crate::model::check_point(d, y0)?;
    if spec.kind == SamplerKind::IdealizedHmc && !target.capabilities().has_exact_flow {
        return Err(Error::Unsupported("idealized HMC needs an exact Hamiltonian flow"));
    }
    let advance = |q: DVector<f64>, p: DVector<f64>, i: usize| -> Result<DVector<f64>> {
        let start = PhasePoint { q, p };
        match spec.kind {
            SamplerKind::IdealizedHmc => Ok(target.exact_flow(&start, spec.trajectory_time)?.q),
            _ => Ok(leapfrog_trajectory_with(
                target,
                &start,
                spec.eta,
                spec.trajectory_time,
                TrajectoryOptions::default(),
            )
            .map_err(|e| e.at_outer_step(i))?
            .end
            .q),
        }
    };

    let mut rng = chain_rng(spec.seed);
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut distances = Vec::with_capacity(spec.i_max + 1);
    let mut ratios = Vec::with_capacity(spec.i_max);
    distances.push((&x - &y).norm());
    for i in 0..spec.i_max {
        let p = standard_normal_vector(&mut rng, d);
        x = advance(x, p.clone(), i)?;
        y = advance(y, p, i)?;
        let prev = *distances.last().expect("non-empty");
        let dist = (&x - &y).norm();
        ratios.push((prev >= 1e-14).then(|| dist / prev));
        distances.push(dist);
    }
    Ok(CouplingRecord { distances, ratios })
}

/// CSV with one row per recorded step: `step,q1..qd,energy,accept`.
/// `accept` is 1/0 for adjusted kinds and empty otherwise (and at step 0).
pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend((1..=trace.dim()).map(|j| format!("q{j}")));
    header.push("energy".into());
    header.push("accept".into());
    w.write_record(&header)?;
    for (step, pos) in trace.recorded_steps.iter().zip(&trace.positions) {
        let mut rec = vec![step.to_string()];
        rec.extend(pos.iter().map(|v| format!("{v:?}")));
        rec.push(format!("{:?}", trace.energies[*step]));
        let accept = match (&trace.accepts, step) {
            (Some(a), s) if *s > 0 => (if a[s - 1] { "1" } else { "0" }).to_string(),
            _ => String::new(),
        };
        rec.push(accept);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Intermediate leapfrog states: `outer,inner,q1..qd,p1..pd`.
pub fn write_leapfrog_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let paths = trace
        .leapfrog_paths
        .as_ref()
        .ok_or(Error::Unsupported("trace has no recorded leapfrog states"))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let d = trace.dim();
    let mut header = vec!["outer".to_string(), "inner".to_string()];
    header.extend((1..=d).map(|j| format!("q{j}")));
    header.extend((1..=d).map(|j| format!("p{j}")));
    w.write_record(&header)?;
    for (i, path) in paths.iter().enumerate() {
        for (j, phase) in path.iter().enumerate() {
            let mut rec = vec![i.to_string(), j.to_string()];
            rec.extend(phase.q.iter().chain(phase.p.iter()).map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Coupling record as CSV: `step,distance,ratio`.
pub fn write_coupling_csv<W: Write>(record: &CouplingRecord, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["step", "distance", "ratio"])?;
    for (i, dist) in record.distances.iter().enumerate() {
        let ratio = match i.checked_sub(1).and_then(|k| record.ratios[k]) {
            Some(r) => format!("{r:?}"),
            None => String::new(),
        };
        w.write_record([i.to_string(), format!("{dist:?}"), ratio])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianTarget;

    struct FreeParticle(usize);

    impl Target for FreeParticle {
        fn dim(&self) -> usize {
            self.0
        }
        fn potential(&self, _q: &DVector<f64>) -> Result<f64> {
            Ok(0.0)
        }
        fn gradient(&self, _q: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::zeros(self.0))
        }
    }

    fn origin(d: usize) -> Start {
        Start::Explicit(DVector::zeros(d))
    }

    #[test]
    fn gradient_counts_per_kind() {
        let g = GaussianTarget::standard(3);
        let cases = [
            (SamplerKind::Uhmc, 7 * 11),
            (SamplerKind::Mhmc, 7 * 11),
            (SamplerKind::Mala, 8),
            (SamplerKind::Ula, 7),
            (SamplerKind::IdealizedHmc, 0),
        ];
        for (kind, expected) in cases {
            let spec = SamplerSpec::new(kind, 0.1, 1.0, 7, 3).with_start(origin(3));
            assert_eq!(run_sampler(&g, &spec).unwrap().grad_evals, expected, "{kind}");
        }
    }

    #[test]
    fn zero_force_chain_moves_by_momentum() {
        let target = FreeParticle(2);
        let x0 = DVector::from_vec(vec![1.0, -1.0]);
        let spec = SamplerSpec::new(SamplerKind::Uhmc, 0.3, 1.0, 1, 11).with_start(Start::Explicit(x0.clone()));
        let trace = run_uhmc(&target, &spec).unwrap();
        let p0 = standard_normal_vector(&mut chain_rng(11), 2);
        let expected = x0 + p0 * (0.3 * 3.0);
        assert!((&trace.positions[1] - expected).norm() < 1e-12);
    }

    #[test]
    fn zero_force_langevin_is_a_random_walk() {
        let target = FreeParticle(1);
        let spec = SamplerSpec::new(SamplerKind::Ula, 0.2, 1.0, 20_000, 5).with_start(origin(1));
        let trace = run_langevin(&target, &spec).unwrap();
        let incs: Vec<f64> = trace.positions.windows(2).map(|w| w[1][0] - w[0][0]).collect();
        let var = incs.iter().map(|v| v * v).sum::<f64>() / incs.len() as f64;
        assert!((var.sqrt() - 0.2).abs() < 0.01);
    }

    #[test]
    fn quarter_period_maps_momentum_to_position() {
        let g = GaussianTarget::standard(2);
        let spec = SamplerSpec::new(SamplerKind::IdealizedHmc, 0.1, std::f64::consts::FRAC_PI_2, 1, 4)
            .with_start(Start::Explicit(DVector::from_vec(vec![3.0, -2.0])));
        let trace = run_idealized_hmc(&g, &spec).unwrap();
        let p0 = standard_normal_vector(&mut chain_rng(4), 2);
        assert!((&trace.positions[1] - p0).norm() < 1e-12);
    }

    #[test]
    fn coupling_identities() {
        let g = GaussianTarget::standard(2);
        let x0 = DVector::from_vec(vec![1.0, 2.0]);
        let y0 = DVector::from_vec(vec![-1.0, 0.5]);
        let spec = SamplerSpec::new(SamplerKind::IdealizedHmc, 0.1, 0.7, 20, 8);
        let rec = run_coupled(&g, &spec, &x0, &y0).unwrap();
        for r in &rec.ratios {
            assert!((r.unwrap() - 0.7f64.cos().abs()).abs() < 1e-12);
        }
        let same = run_coupled(&g, &SamplerSpec { kind: SamplerKind::Uhmc, ..spec.clone() }, &x0, &x0).unwrap();
        assert!(same.distances.iter().all(|&d| d == 0.0));
        assert!(same.ratios.iter().all(Option::is_none));
        let mala = SamplerSpec { kind: SamplerKind::Mala, ..spec };
        assert!(run_coupled(&g, &mala, &x0, &y0).is_err());
    }

    #[test]
    fn identical_specs_give_identical_traces() {
        let g = GaussianTarget::standard(3);
        for kind in SamplerKind::ALL {
            let spec = SamplerSpec::new(kind, 0.25, 1.0, 50, 99).with_start(origin(3));
            let a = run_sampler(&g, &spec).unwrap();
            let b = run_sampler(&g, &spec).unwrap();
            assert!(a.same_output(&b), "{kind}");
        }
    }

    #[test]
    fn thinning_and_csv_shape() {
        let g = GaussianTarget::standard(2);
        let spec = SamplerSpec::new(SamplerKind::Mhmc, 0.5, 1.0, 10, 1).with_start(origin(2)).with_thin(3);
        let trace = run_mhmc(&g, &spec).unwrap();
        assert_eq!(trace.recorded_steps, vec![0, 3, 6, 9]);
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,q1,q2,energy,accept");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let g = GaussianTarget::standard(1);
        let bad = [
            SamplerSpec::new(SamplerKind::Uhmc, 2.0, 1.0, 5, 0),
            SamplerSpec::new(SamplerKind::Uhmc, 0.1, 1.0, 0, 0),
            SamplerSpec::new(SamplerKind::Mala, -0.1, 1.0, 5, 0),
            SamplerSpec::new(SamplerKind::Ula, 0.1, 1.0, 5, 0).with_thin(0),
        ];
        for spec in bad {
            assert!(matches!(run_sampler(&g, &spec), Err(Error::InvalidInput(_))));
        }
        let wrong_dim = SamplerSpec::new(SamplerKind::Ula, 0.1, 1.0, 5, 0).with_start(origin(3));
        assert!(run_sampler(&g, &wrong_dim).is_err());
        assert!(run_idealized_hmc(&FreeParticle(1), &SamplerSpec::new(SamplerKind::IdealizedHmc, 0.1, 1.0, 1, 0)).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in SamplerKind::ALL {
            assert_eq!(kind.name().parse::<SamplerKind>().unwrap(), kind);
        }
        assert!("nuts".parse::<SamplerKind>().is_err());
        assert_eq!(SamplerKind::Uhmc.numerical_steps_per_iteration(0.5, 1.0), 2);
        assert_eq!(SamplerKind::Mala.numerical_steps_per_iteration(0.5, 1.0), 1);
    }
}
