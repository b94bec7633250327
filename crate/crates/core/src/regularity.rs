//! Regularity constants, Lipschitz-constant search and parameter planning.
//!
//! For a logistic target with design rows `X_i` and Gaussian prior precision
//! `Σ⁻¹` the closed-form constants are
//!
//! * `m = λ_min(Σ⁻¹)`, `M = λ_max(Σ⁻¹ + Σ_i X_i X_iᵀ)`,
//! * `C = inc(X) = max_i Σ_j |X_iᵀX_j|` and `L∞ = √C` with bad directions
//!   `u_i = X_i / ‖X_i‖₂`,
//! * `b = 2Ĉ` with `Ĉ = max_i Σ_j |(X_i/‖X_i‖₂)ᵀX_j|`, available only when
//!   `Σ⁻¹` is a multiple of the identity.
//!
//! The Hessian Lipschitz constants
//!
//! ```text
//! L₂ = sup ‖(H_y − H_x)v‖₂ / (‖y−x‖₂ ‖v‖₂)
//! L∞ = sup ‖(H_y − H_x)v‖₂ / (√r ‖y−x‖_{∞,u} ‖v‖_{∞,u})
//! ```
//!
//! are estimated by derivative-free coordinate hill climbing over
//! `(x, h = y − x, v)`. The result is the best ratio found, a lower bound on
//! the supremum.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{inf_seminorm, DirectionSet};
use crate::error::{Error, Result};
use crate::model::{gen_synthetic, logistic_derivative, LogisticTarget, RegularityConstants, Target};
use crate::rng::{chain_rng, derive_seed, standard_normal_vector, ChainRng};

const SCALAR_PRIOR_TOL: f64 = 1e-12;
const MIN_DENOMINATOR: f64 = 1e-12;

/// `max_i Σ_j |a_iᵀX_j|` where `a_i = X_i`, or `X_i/‖X_i‖₂` when
/// `normalize_left` is set.
pub fn incoherence(x: &DMatrix<f64>, normalize_left: bool) -> Result<f64> {
    if x.nrows() == 0 {
        return Err(Error::invalid("incoherence needs at least one row"));
    }
    let gram = x * x.transpose();
    let mut best = 0.0f64;
    for i in 0..x.nrows() {
        let scale = if normalize_left {
            let n = gram[(i, i)].sqrt();
            if !(n > 0.0) {
                return Err(Error::invalid(format!("data row {i} is zero")));
            }
            1.0 / n
        } else {
            1.0
        };
        let s: f64 = gram.row(i).iter().map(|g| g.abs()).sum::<f64>() * scale;
        best = best.max(s);
    }
    Ok(best)
}

/// Closed-form `m`, `M`, `L∞ = √C` and (for scalar priors) `b = 2Ĉ`.
pub fn logistic_constants(target: &LogisticTarget) -> Result<RegularityConstants> {
    let x = target.data();
    let prior = target.prior_precision();
    let (m, _) = prior.eigen_extremes();
    let total = prior.to_dense() + x.transpose() * x;
    let big_m = total.symmetric_eigenvalues().max();
    let l_inf = incoherence(x, false)?.sqrt();
    let b = match prior.scalar_multiple_of_identity(SCALAR_PRIOR_TOL) {
        Some(_) => Some(2.0 * incoherence(x, true)?),
        None => None,
    };
    RegularityConstants::new(m, big_m, l_inf, b)
}

/// Bad directions `u_i = X_i/‖X_i‖₂` of a logistic target.
pub fn bad_directions(target: &LogisticTarget) -> Result<DirectionSet> {
    DirectionSet::normalized_rows(target.data())
}

/// Settings of the hill-climbing search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Sweeps per restart; sweep `k` uses step `initial_step · decay^k`.
    pub iterations: usize,
    pub initial_step: f64,
    pub decay: f64,
    /// Random subset of the search coordinates tried per sweep; all when
    /// `None`.
    pub coords_per_iteration: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            iterations: 200,
            initial_step: 1.0,
            decay: 0.9,
            coords_per_iteration: None,
        }
    }
}

impl SearchConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if !(self.initial_step > 0.0 && self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid("search needs initial_step > 0 and decay in (0, 1]"));
        }
        if self.coords_per_iteration == Some(0) {
            return Err(Error::invalid("coords_per_iteration must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Denominator<'a> {
    Euclidean,
    Seminorm(&'a DirectionSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    X,
    H,
    V,
}

/// Coordinate `c` of the `3n` search coordinates, `n` moves per block.
fn split_coord(c: usize, n: usize) -> (Block, usize) {
    match c / n {
        0 => (Block::X, c),
        1 => (Block::H, c - n),
        _ => (Block::V, c - 2 * n),
    }
}

/// Ratio evaluator with cheap single-coordinate trial moves. Under the
/// Euclidean denominator `x`, `h` and `v` move along the standard basis;
/// under the seminorm they move along the directions `u_k`, so that one move
/// mostly changes one projection.
trait Evaluator {
    fn dim(&self) -> usize;
    fn moves(&self) -> usize;
    fn reset(&mut self, x: DVector<f64>, h: DVector<f64>, v: DVector<f64>);
    fn ratio(&mut self) -> Result<Option<f64>>;
    fn trial(&mut self, block: Block, k: usize, delta: f64) -> Result<Option<f64>>;
    fn commit(&mut self, block: Block, k: usize, delta: f64);
}

fn ratio_from(numerator: f64, den: f64) -> Option<f64> {
    (den >= MIN_DENOMINATOR && numerator.is_finite()).then(|| numerator / den)
}

/// Works on any target with `hessian_difference_apply`.
struct GenericEvaluator<'a, T: Target + ?Sized> {
    target: &'a T,
    den: Denominator<'a>,
    sqrt_r: f64,
    x: DVector<f64>,
    h: DVector<f64>,
    v: DVector<f64>,
}

impl<T: Target + ?Sized> GenericEvaluator<'_, T> {
    fn eval(&self, x: &DVector<f64>, h: &DVector<f64>, v: &DVector<f64>) -> Result<Option<f64>> {
        let den = match self.den {
            Denominator::Euclidean => h.norm() * v.norm(),
            Denominator::Seminorm(dirs) => {
                let (sh, sv) = (inf_seminorm(dirs, h), inf_seminorm(dirs, v));
                if sh < MIN_DENOMINATOR || sv < MIN_DENOMINATOR {
                    return Ok(None);
                }
                self.sqrt_r * sh * sv
            }
        };
        if den < MIN_DENOMINATOR {
            return Ok(None);
        }
        let y = x + h;
        let n = self.target.hessian_difference_apply(x, &y, v)?.norm();
        Ok(ratio_from(n, den))
    }
}

impl<T: Target + ?Sized> GenericEvaluator<'_, T> {
    fn shift(&self, vec: &mut DVector<f64>, k: usize, delta: f64) {
        match self.den {
            Denominator::Euclidean => vec[k] += delta,
            Denominator::Seminorm(dirs) => vec.axpy(delta, &dirs.rows().row(k).transpose(), 1.0),
        }
    }
}

impl<T: Target + ?Sized> Evaluator for GenericEvaluator<'_, T> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn moves(&self) -> usize {
        match self.den {
            Denominator::Euclidean => self.x.len(),
            Denominator::Seminorm(dirs) => dirs.len(),
        }
    }

    fn reset(&mut self, x: DVector<f64>, h: DVector<f64>, v: DVector<f64>) {
        self.x = x;
        self.h = h;
        self.v = v;
    }

    fn ratio(&mut self) -> Result<Option<f64>> {
        self.eval(&self.x, &self.h, &self.v)
    }

    fn trial(&mut self, block: Block, k: usize, delta: f64) -> Result<Option<f64>> {
        let (mut x, mut h, mut v) = (self.x.clone(), self.h.clone(), self.v.clone());
        match block {
            Block::X => self.shift(&mut x, k, delta),
            Block::H => self.shift(&mut h, k, delta),
            Block::V => self.shift(&mut v, k, delta),
        }
        self.eval(&x, &h, &v)
    }

    fn commit(&mut self, block: Block, k: usize, delta: f64) {
        let mut vec = std::mem::replace(
            match block {
                Block::X => &mut self.x,
                Block::H => &mut self.h,
                Block::V => &mut self.v,
            },
            DVector::zeros(0),
        );
        self.shift(&mut vec, k, delta);
        match block {
            Block::X => self.x = vec,
            Block::H => self.h = vec,
            Block::V => self.v = vec,
        }
    }
}

/// Logistic targets: `(H_y − H_x)v = Xᵀ((F′(Xy) − F′(Xx)) ∘ Xv)`. The data
/// projections `a = Xx`, `e = Xh`, `b = Xv` and the direction projections
/// are updated in `O(r)` per coordinate move, so a trial costs one `Xᵀw`.
struct LogisticEvaluator<'a> {
    data: &'a DMatrix<f64>,
    den: Denominator<'a>,
    sqrt_r: f64,
    /// `X Uᵀ` and `U Uᵀ`: effect of a move along `u_k` on the data and
    /// direction projections.
    move_data: DMatrix<f64>,
    move_proj: DMatrix<f64>,
    h: DVector<f64>,
    v: DVector<f64>,
    a: DVector<f64>,
    e: DVector<f64>,
    b: DVector<f64>,
    uh: DVector<f64>,
    uv: DVector<f64>,
    scratch: DVector<f64>,
    w: DVector<f64>,
    out: DVector<f64>,
}

impl<'a> LogisticEvaluator<'a> {
    fn new(data: &'a DMatrix<f64>, den: Denominator<'a>, sqrt_r: f64) -> Self {
        let (r, d) = data.shape();
        let (move_data, move_proj) = match den {
            Denominator::Seminorm(dirs) => {
                let u = dirs.rows();
                (data * u.transpose(), u * u.transpose())
            }
            Denominator::Euclidean => (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)),
        };
        let k = move_proj.nrows();
        Self {
            data,
            den,
            sqrt_r,
            move_data,
            move_proj,
            h: DVector::zeros(d),
            v: DVector::zeros(d),
            a: DVector::zeros(r),
            e: DVector::zeros(r),
            b: DVector::zeros(r),
            uh: DVector::zeros(k),
            uv: DVector::zeros(k),
            scratch: DVector::zeros(r),
            w: DVector::zeros(r),
            out: DVector::zeros(d),
        }
    }

    fn data_column(&self, k: usize) -> nalgebra::DVectorView<'_, f64> {
        match self.den {
            Denominator::Euclidean => self.data.column(k),
            Denominator::Seminorm(_) => self.move_data.column(k),
        }
    }

    fn numerator(&mut self, moved: Option<(Block, &DVector<f64>)>) -> f64 {
        let (a, e, b) = match moved {
            Some((Block::X, m)) => (m, &self.e, &self.b),
            Some((Block::H, m)) => (&self.a, m, &self.b),
            Some((Block::V, m)) => (&self.a, &self.e, m),
            None => (&self.a, &self.e, &self.b),
        };
        for i in 0..a.len() {
            self.w[i] = (logistic_derivative(a[i] + e[i]) - logistic_derivative(a[i])) * b[i];
        }
        self.out.gemv_tr(1.0, self.data, &self.w, 0.0);
        self.out.norm()
    }

    fn norm_after(vec: &DVector<f64>, k: usize, delta: f64) -> f64 {
        let old = vec[k];
        let new = old + delta;
        (vec.norm_squared() - old * old + new * new).max(0.0).sqrt()
    }

    fn seminorm_after(proj: &DVector<f64>, shift: nalgebra::DVectorView<'_, f64>, delta: f64) -> f64 {
        proj.iter()
            .zip(shift.iter())
            .map(|(p, s)| (p + delta * s).abs())
            .fold(0.0, f64::max)
    }

    fn denominator(&self, block: Block, k: usize, delta: f64) -> f64 {
        let (delta_h, delta_v) = match block {
            Block::H => (delta, 0.0),
            Block::V => (0.0, delta),
            Block::X => (0.0, 0.0),
        };
        match self.den {
            Denominator::Euclidean => {
                Self::norm_after(&self.h, k, delta_h) * Self::norm_after(&self.v, k, delta_v)
            }
            Denominator::Seminorm(_) => {
                let col = self.move_proj.column(k);
                let sh = Self::seminorm_after(&self.uh, col, delta_h);
                let sv = Self::seminorm_after(&self.uv, col, delta_v);
                if sh < MIN_DENOMINATOR || sv < MIN_DENOMINATOR {
                    0.0
                } else {
                    self.sqrt_r * sh * sv
                }
            }
        }
    }
}

impl Evaluator for LogisticEvaluator<'_> {
    fn dim(&self) -> usize {
        self.data.ncols()
    }

    fn moves(&self) -> usize {
        match self.den {
            Denominator::Euclidean => self.data.ncols(),
            Denominator::Seminorm(dirs) => dirs.len(),
        }
    }

    fn reset(&mut self, x: DVector<f64>, h: DVector<f64>, v: DVector<f64>) {
        self.a = self.data * &x;
        self.e = self.data * &h;
        self.b = self.data * &v;
        if let Denominator::Seminorm(dirs) = self.den {
            self.uh = dirs.project(&h);
            self.uv = dirs.project(&v);
        }
        self.h = h;
        self.v = v;
    }

    fn ratio(&mut self) -> Result<Option<f64>> {
        let den = self.denominator(Block::X, 0, 0.0);
        if den < MIN_DENOMINATOR {
            return Ok(None);
        }
        Ok(ratio_from(self.numerator(None), den))
    }

    fn trial(&mut self, block: Block, k: usize, delta: f64) -> Result<Option<f64>> {
        let den = self.denominator(block, k, delta);
        if den < MIN_DENOMINATOR {
            return Ok(None);
        }
        let mut moved = std::mem::take(&mut self.scratch);
        moved.copy_from(match block {
            Block::X => &self.a,
            Block::H => &self.e,
            Block::V => &self.b,
        });
        moved.axpy(delta, &self.data_column(k), 1.0);
        let n = self.numerator(Some((block, &moved)));
        self.scratch = moved;
        Ok(ratio_from(n, den))
    }

    fn commit(&mut self, block: Block, k: usize, delta: f64) {
        let col = self.data_column(k).clone_owned();
        let seminorm = matches!(self.den, Denominator::Seminorm(_));
        match block {
            Block::X => self.a.axpy(delta, &col, 1.0),
            Block::H => {
                self.e.axpy(delta, &col, 1.0);
                if seminorm {
                    self.uh.axpy(delta, &self.move_proj.column(k), 1.0);
                } else {
                    self.h[k] += delta;
                }
            }
            Block::V => {
                self.b.axpy(delta, &col, 1.0);
                if seminorm {
                    self.uv.axpy(delta, &self.move_proj.column(k), 1.0);
                } else {
                    self.v[k] += delta;
                }
            }
        }
    }
}

fn climb<E: Evaluator>(eval: &mut E, cfg: &SearchConfig, rng: &mut ChainRng) -> Result<f64> {
    let d = eval.dim();
    let x = standard_normal_vector(rng, d);
    let y = standard_normal_vector(rng, d);
    let mut v = standard_normal_vector(rng, d);
    let vn = v.norm();
    if vn > 0.0 {
        v /= vn;
    }
    eval.reset(x.clone(), y - x, v);
    let mut best = eval.ratio()?;
    let n = eval.moves();
    let total = 3 * n;
    let mut step = cfg.initial_step;
    for _ in 0..cfg.iterations {
        let coords: Vec<usize> = match cfg.coords_per_iteration {
            Some(c) if c < total => index::sample(rng, total, c).into_vec(),
            _ => (0..total).collect(),
        };
        for c in coords {
            let (block, k) = split_coord(c, n);
            for delta in [step, -step] {
                if let Some(r) = eval.trial(block, k, delta)? {
                    if best.is_none_or(|b| r > b) {
                        eval.commit(block, k, delta);
                        best = Some(r);
                        break;
                    }
                }
            }
        }
        step *= cfg.decay;
    }
    Ok(best.unwrap_or(0.0))
}

fn search<T: Target + ?Sized>(
    target: &T,
    den: Denominator<'_>,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let sqrt_r = match den {
        Denominator::Seminorm(dirs) => {
            if dirs.is_empty() || dirs.dim() != target.dim() {
                return Err(Error::invalid("directions must be nonempty and match the target dimension"));
            }
            (dirs.len() as f64).sqrt()
        }
        Denominator::Euclidean => 1.0,
    };
    let logistic = target.as_logistic();
    if logistic.is_none() && !target.capabilities().has_dense_hessian {
        return Err(Error::Unsupported("Lipschitz search needs a dense Hessian"));
    }
    let results: Vec<Result<f64>> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = chain_rng(derive_seed(seed, &[i]));
            match logistic {
                Some(l) => {
                    let mut eval = LogisticEvaluator::new(l.data(), den, sqrt_r);
                    climb(&mut eval, cfg, &mut rng)
                }
                None => {
                    let d = target.dim();
                    let mut eval = GenericEvaluator {
                        target,
                        den,
                        sqrt_r,
                        x: DVector::zeros(d),
                        h: DVector::zeros(d),
                        v: DVector::zeros(d),
                    };
                    climb(&mut eval, cfg, &mut rng)
                }
            }
        })
        .collect();
    results
        .into_iter()
        .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
}

/// Lower-bound estimate of the Euclidean Hessian Lipschitz constant.
pub fn estimate_l2<T: Target + ?Sized>(target: &T, cfg: &SearchConfig, seed: u64) -> Result<f64> {
    search(target, Denominator::Euclidean, cfg, seed)
}

/// Lower-bound estimate of the infinity-norm Lipschitz constant with
/// respect to `dirs`.
pub fn estimate_linf<T: Target + ?Sized>(
    target: &T,
    dirs: &DirectionSet,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<f64> {
    search(target, Denominator::Seminorm(dirs), cfg, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub incoherence: f64,
    pub incoherence_normalized: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub b: Option<f64>,
    #[serde(rename = "L_inf_bound")]
    pub l_inf_bound: f64,
    #[serde(rename = "L2_estimate")]
    pub l2_estimate: f64,
    #[serde(rename = "L_inf_estimate")]
    pub l_inf_estimate: f64,
    /// Rows are the unit directions `u_i`.
    pub directions: Vec<Vec<f64>>,
}

pub fn regularity_report(
    target: &LogisticTarget,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<RegularityReport> {
    let constants = logistic_constants(target)?;
    let dirs = bad_directions(target)?;
    let l2_estimate = estimate_l2(target, cfg, derive_seed(seed, &[2]))?;
    let l_inf_estimate = estimate_linf(target, &dirs, cfg, derive_seed(seed, &[3]))?;
    Ok(RegularityReport {
        incoherence: incoherence(target.data(), false)?,
        incoherence_normalized: incoherence(target.data(), true)?,
        m: constants.m,
        big_m: constants.big_m,
        b: constants.b,
        l_inf_bound: constants.l_inf,
        l2_estimate,
        l_inf_estimate,
        directions: dirs.rows().row_iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub d: usize,
    pub r: usize,
    pub l2_estimate: Option<f64>,
    pub l_inf_estimate: Option<f64>,
    /// `median(√L₂ ‖p‖₂)`.
    pub median_l2: Option<f64>,
    /// `median(√L∞ r^{1/4} ‖p‖_{∞,u})`.
    pub median_linf: Option<f64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("not NaN"));
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// For each `d`: a synthetic logistic instance with `r = d` and a standard
/// normal prior, both Lipschitz estimates, and the medians of the two
/// momentum scales over `momenta_draws` draws `p ~ N(0, I_d)`.
pub fn figure3_experiment(
    d_list: &[usize],
    momenta_draws: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<Vec<Figure3Row>> {
    if d_list.iter().any(|&d| d < 2) {
        return Err(Error::invalid("every d must be at least 2"));
    }
    if momenta_draws == 0 {
        return Err(Error::invalid("momenta_draws must be positive"));
    }
    cfg.validate()?;
    Ok(d_list
        .par_iter()
        .map(|&d| {
            let row_seed = derive_seed(seed, &[d as u64]);
            let mut row = Figure3Row {
                d,
                r: d,
                l2_estimate: None,
                l_inf_estimate: None,
                median_l2: None,
                median_linf: None,
                ratio: None,
                error: None,
            };
            if let Err(e) = figure3_row(&mut row, momenta_draws, row_seed, cfg) {
                row.error = Some(e.to_string());
            }
            row
        })
        .collect())
}

fn figure3_row(row: &mut Figure3Row, draws: usize, seed: u64, cfg: &SearchConfig) -> Result<()> {
    let (d, r) = (row.d, row.r);
    let data = gen_synthetic(d, r, derive_seed(seed, &[0]))?;
    let target = LogisticTarget::from_dataset(&data, 1.0)?;
    let dirs = bad_directions(&target)?;
    let l2 = estimate_l2(&target, cfg, derive_seed(seed, &[1]))?;
    row.l2_estimate = Some(l2);
    let linf = estimate_linf(&target, &dirs, cfg, derive_seed(seed, &[2]))?;
    row.l_inf_estimate = Some(linf);

    let mut rng = chain_rng(derive_seed(seed, &[3]));
    let (mut euclid, mut semi) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    for _ in 0..draws {
        let p = standard_normal_vector(&mut rng, d);
        euclid.push(l2.sqrt() * p.norm());
        semi.push(linf.sqrt() * (r as f64).powf(0.25) * inf_seminorm(&dirs, &p));
    }
    row.median_l2 = median(&euclid);
    row.median_linf = median(&semi);
    if let (Some(a), Some(b)) = (row.median_l2, row.median_linf) {
        row.ratio = (b > 0.0).then(|| a / b);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartKind {
    /// Initial law within Wasserstein distance `omega` of the target.
    Warm { omega: f64 },
    /// Started at the minimizer of the potential.
    Cold,
}

/// Theory-driven UHMC parameters and the resulting gradient budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryPlan {
    #[serde(rename = "T")]
    pub t: f64,
    pub eta: f64,
    pub i_max: u64,
    #[serde(rename = "I_mix")]
    pub i_mix: u64,
    #[serde(rename = "Delta")]
    pub delta_contraction: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub grad_budget: u64,
    pub start_kind: StartKind,
    pub planner_constant: f64,
    pub kappa: f64,
    pub eps: f64,
    pub delta: f64,
    pub l_inf_tilde: f64,
    pub b_tilde: Option<f64>,
}

fn domain(msg: impl Into<String>) -> Error {
    Error::FormulaDomain(msg.into())
}

fn to_count(v: f64, what: &str) -> Result<u64> {
    if (0.0..9.0e18).contains(&v) {
        Ok(v as u64)
    } else {
        Err(domain(format!("{what} = {v} is not a representable count")))
    }
}

/// `T = 1/(6√(Mκ))`, `Δ = (√m T)²/8`, `R = d + √(4d log κ − 8 log δ)`,
/// `𝓘 = ⌈log(2R/ε)/Δ⌉`, `i_max = ⌈c/(mT²)⌉`, and the warm- or cold-start
/// step size with every hidden constant replaced by `c_plan`.
pub fn plan_parameters(
    constants: &RegularityConstants,
    d: usize,
    r: usize,
    eps: f64,
    delta: f64,
    start: StartKind,
    c_plan: f64,
) -> Result<TheoryPlan> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("eps and delta must lie in (0, 1)"));
    }
    if d == 0 || r == 0 {
        return Err(Error::invalid("d and r must be positive"));
    }
    if !(c_plan > 0.0 && c_plan.is_finite()) {
        return Err(Error::invalid("c_plan must be positive"));
    }
    let (m, big_m) = (constants.m, constants.big_m);
    if !(m > 0.0 && big_m.is_finite() && constants.l_inf >= 0.0) {
        return Err(Error::invalid("constants need m > 0, finite M and L_inf >= 0"));
    }
    let kappa = big_m / m;
    if kappa < 1.0 {
        return Err(domain(format!("M/m = {kappa} is below 1")));
    }
    let (df, rf) = (d as f64, r as f64);
    let radicand = 4.0 * df * kappa.ln() - 8.0 * delta.ln();
    if radicand < 0.0 {
        return Err(domain(format!("4d log(M/m) - 8 log(delta) = {radicand} is negative")));
    }
    let t = 1.0 / (6.0 * (big_m * kappa).sqrt());
    let delta_contraction = (m.sqrt() * t).powi(2) / 8.0;
    let radius = df + radicand.sqrt();
    let i_mix = to_count(((2.0 * radius / eps).ln() / delta_contraction).ceil(), "I_mix")?;
    let i_max = to_count((c_plan / (m * t * t)).ceil(), "i_max")?;

    let l_inf_tilde = constants.l_inf / big_m.sqrt();
    let b_tilde = constants.b.map(|b| b / big_m.sqrt());
    let dir_factor = if l_inf_tilde > 0.0 {
        rf.powf(-0.25) / l_inf_tilde.sqrt()
    } else {
        f64::INFINITY
    };
    let scale = eps.sqrt() / big_m.sqrt();
    let eta = match start {
        StartKind::Warm { omega } => {
            if !(omega >= 0.0 && omega.is_finite()) {
                return Err(Error::invalid("omega must be finite and non-negative"));
            }
            let inner = (df.powf(-0.25) * kappa.powf(-1.25)).min(dir_factor * kappa.powf(-0.75));
            c_plan * inner * scale / (1.0 / delta).ln().sqrt()
        }
        StartKind::Cold => {
            let b_tilde = b_tilde.ok_or_else(|| {
                Error::invalid("cold-start planning needs the tail constant b")
            })?;
            let tail = kappa.powf(2.75) + b_tilde * kappa.powf(1.75);
            let inner = (df.powf(-0.25) * kappa.powi(-2)).min(dir_factor / tail);
            c_plan * inner * scale
        }
    };
    let grad_budget = i_mix
        .checked_mul(to_count((t / eta).ceil(), "T/eta")?)
        .ok_or_else(|| domain("gradient budget overflows"))?;
    Ok(TheoryPlan {
        t,
        eta,
        i_max,
        i_mix,
        delta_contraction,
        radius,
        grad_budget,
        start_kind: start,
        planner_constant: c_plan,
        kappa,
        eps,
        delta,
        l_inf_tilde,
        b_tilde,
    })
}

/// Largest step size for which the mixing-time bound holds:
/// `√( (ε/(800𝓘))·min(1, 1/√M) / (T(ε₁ + ε₂/√M)e) )`.
pub fn thm_main_eta(eps: f64, i_mix: u64, big_m: f64, t: f64, eps1: f64, eps2: f64) -> Result<f64> {
    if !(eps > 0.0 && i_mix > 0 && big_m > 0.0 && t > 0.0 && eps1 > 0.0 && eps2 > 0.0) {
        return Err(Error::invalid("thm_main_eta needs positive inputs"));
    }
    let sqrt_m = big_m.sqrt();
    let num = eps / (800.0 * i_mix as f64) * (1.0f64).min(1.0 / sqrt_m);
    let den = t * (eps1 + eps2 / sqrt_m) * std::f64::consts::E;
    Ok((num / den).sqrt())
}

/// Warm-start error constants of the integrator bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmEpsilons {
    /// Number of time points in the union bound.
    pub j: u64,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

/// Over-estimate `𝓙 = ⌈(M/√m)·√(T·80²·M·d·(1+1/m))·log(𝓘·10⁶/δ)⌉`,
/// obtained by bounding `𝓙 ≤ 10⁶` inside the logarithm.
pub fn union_bound_points(m: f64, big_m: f64, d: usize, t: f64, i_mix: u64, delta: f64) -> Result<u64> {
    if !(m > 0.0 && big_m > 0.0 && t > 0.0 && i_mix > 0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("union_bound_points needs positive inputs and delta in (0, 1)"));
    }
    let v = big_m / m.sqrt()
        * (t * 6400.0 * big_m * d as f64 * (1.0 + 1.0 / m)).sqrt()
        * (i_mix as f64 * 1e6 / delta).ln();
    to_count(v.ceil().max(1.0), "J")
}

/// `ε₁ = (1/6)[81√d log(𝓘𝓙/δ) + 2ω√M]M` and
/// `ε₂ = (1/3)η³[M²(81√d/√m log(𝓘𝓙/δ) + 2ω) + L∞(81 log(𝓘𝓙/δ) + 2ω√M)²√r]`.
#[allow(clippy::too_many_arguments)]
pub fn warm_start_epsilons(
    constants: &RegularityConstants,
    d: usize,
    r: usize,
    omega: f64,
    eta: f64,
    t: f64,
    i_mix: u64,
    delta: f64,
) -> Result<WarmEpsilons> {
    if !(omega >= 0.0 && eta > 0.0) {
        return Err(Error::invalid("omega must be non-negative and eta positive"));
    }
    let (m, big_m) = (constants.m, constants.big_m);
    let j = union_bound_points(m, big_m, d, t, i_mix, delta)?;
    let log_term = (i_mix as f64 * j as f64 / delta).ln();
    let sqrt_d = (d as f64).sqrt();
    let sqrt_big_m = big_m.sqrt();
    let epsilon1 = (81.0 * sqrt_d * log_term + 2.0 * omega * sqrt_big_m) * big_m / 6.0;
    let epsilon2 = eta.powi(3) / 3.0
        * (big_m * big_m * (81.0 * sqrt_d / m.sqrt() * log_term + 2.0 * omega)
            + constants.l_inf
                * (81.0 * log_term + 2.0 * omega * sqrt_big_m).powi(2)
                * (r as f64).sqrt());
    Ok(WarmEpsilons { j, epsilon1, epsilon2 })
}
