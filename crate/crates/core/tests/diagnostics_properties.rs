mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use uhmc::diagnostics::*;
use uhmc::model::*;
use uhmc::samplers::*;

#[test]
fn iid_series_has_unit_act() {
    let mut r = rng(1);
    let s: Vec<f64> = (0..100_000).map(|_| r.sample(StandardNormal)).collect();
    let act = autocorrelation_time(&s, SmaxPolicy::InitialPositive).unwrap().act;
    assert!((act - 1.0).abs() < 0.2, "act {act}");
}

#[test]
fn ar1_series_act_matches_closed_form() {
    // IAT of AR(1) with coefficient ρ is (1 + ρ)/(1 − ρ).
    let mut r = rng(2);
    let rho = 0.5;
    let mut x = 0.0;
    let s: Vec<f64> = (0..1_000_000)
        .map(|_| {
            x = rho * x + r.sample::<f64, _>(StandardNormal);
            x
        })
        .collect();
    let report = autocorrelation_time(&s, SmaxPolicy::InitialPositive).unwrap();
    assert!((report.act - 3.0).abs() < 0.3, "act {}", report.act);
    assert!((report.rho[1] - rho).abs() < 0.01);
}

#[test]
fn short_series_rejected() {
    assert!(autocorrelation_time(&[1.0, 2.0, 3.0], SmaxPolicy::InitialPositive).is_err());
}

fn small_config(grid: Vec<f64>) -> BenchmarkConfig {
    let tt = std::f64::consts::PI / 3.0;
    BenchmarkConfig {
        samplers: vec![
            SamplerSpec::new(SamplerKind::Uhmc, 0.1, tt, 1, 0),
            SamplerSpec::new(SamplerKind::Ula, 0.1, tt, 1, 0),
        ],
        eta_grid: grid,
        budget: 3000,
        reference: SamplerSpec::new(SamplerKind::Mala, 0.5, tt, 5000, 1),
        bins: 20,
        burn_in: 0.2,
        master_seed: 9,
        smax_policy: SmaxPolicy::InitialPositive,
    }
}

#[test]
fn benchmark_cells_do_not_depend_on_sweep_order() {
    let target = random_logistic(3, 5, 3);
    let a = benchmark(&target, "t", &small_config(vec![0.2, 0.3, 0.5])).unwrap();
    let b = benchmark(&target, "t", &small_config(vec![0.5, 0.2, 0.3])).unwrap();
    for cell in &a.cells {
        let twin = b.cells.iter().find(|c| c.kind == cell.kind && c.eta == cell.eta).unwrap();
        assert_eq!(cell, twin);
    }
}

#[test]
fn benchmark_budget_arithmetic_and_ranges() {
    let target = random_logistic(3, 5, 4);
    let report = benchmark(&target, "t", &small_config(vec![0.2, 0.3, 0.5])).unwrap();
    for c in &report.cells {
        let l = c.kind.numerical_steps_per_iteration(c.eta, std::f64::consts::PI / 3.0);
        assert_eq!(c.numerical_steps_per_iteration, l);
        assert_eq!(c.outer_steps, 3000 / l);
        if c.kind == SamplerKind::Uhmc {
            assert_eq!(c.grad_evals.unwrap(), (c.outer_steps * (l + 1)) as u64);
        }
        let ma = c.ma.unwrap();
        assert!((0.0..=1.0).contains(&ma));
        assert!(c.act.unwrap() >= 0.8);
        assert!((c.act_numerical.unwrap() - c.act.unwrap() * l as f64).abs() < 1e-12);
    }
    let mut buf = Vec::new();
    write_benchmark_csv(&report, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
}

#[test]
fn failing_cells_are_reported_not_fatal() {
    let target = random_logistic(3, 5, 5);
    let mut cfg = small_config(vec![0.2, 2.0]);
    cfg.samplers.truncate(1);
    let report = benchmark(&target, "t", &cfg).unwrap();
    assert!(report.cells[0].error.is_none());
    assert!(report.cells[1].error.is_some() && report.cells[1].ma.is_none());
}

fn sample_matrix(seed: u64, n: usize, d: usize, shift: f64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, d, |_, _| r.sample::<f64, _>(StandardNormal) + shift)
}

proptest! {
    #[test]
    fn accuracy_symmetric_and_permutation_invariant(seed in 0u64..1000, shift in 0.0f64..3.0) {
        let a = sample_matrix(seed, 200, 3, 0.0);
        let b = sample_matrix(seed + 1, 300, 3, shift);
        let ab = marginal_accuracy(&a, &b, 10).unwrap();
        let ba = marginal_accuracy(&b, &a, 10).unwrap();
        prop_assert!((ab.ma - ba.ma).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.ma));
        let perm = [2usize, 0, 1];
        let pa = DMatrix::from_fn(200, 3, |i, j| a[(i, perm[j])]);
        let pb = DMatrix::from_fn(300, 3, |i, j| b[(i, perm[j])]);
        let p = marginal_accuracy(&pa, &pb, 10).unwrap();
        prop_assert!((p.ma - ab.ma).abs() < 1e-12);
        prop_assert_eq!(marginal_accuracy(&a, &a, 10).unwrap().ma, 1.0);
    }

    #[test]
    fn l1_of_ones_is_dimension(d in 1usize..50) {
        let m = DMatrix::from_element(2, d, 1.0);
        prop_assert_eq!(test_function_l1(&m), vec![d as f64, d as f64]);
        let z = DMatrix::zeros(1, d);
        prop_assert_eq!(test_function_l1(&z), vec![0.0]);
    }

    #[test]
    fn act_is_shift_and_scale_invariant(seed in 0u64..1000, a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let mut r = rng(seed);
        let s: Vec<f64> = (0..500).map(|_| r.sample(StandardNormal)).collect();
        let t: Vec<f64> = s.iter().map(|v| a * v + b).collect();
        let x = autocorrelation_time(&s, SmaxPolicy::Fixed(5)).unwrap().act;
        let y = autocorrelation_time(&t, SmaxPolicy::Fixed(5)).unwrap().act;
        prop_assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn benchmark_report_serializes() {
    let target = GaussianTarget::standard(2);
    let mut cfg = small_config(vec![0.3]);
    cfg.reference = SamplerSpec::new(SamplerKind::Mala, 0.5, 1.0, 2000, 1).with_start(Start::Explicit(DVector::zeros(2)));
    cfg.samplers = vec![SamplerSpec::new(SamplerKind::Uhmc, 0.1, 1.0, 1, 0).with_start(Start::Explicit(DVector::zeros(2)))];
    let report = benchmark(&target, "gaussian", &cfg).unwrap();
    assert_eq!(report.cells.len(), 1);
    assert_eq!(report.best_ma(SamplerKind::Uhmc).unwrap().eta, 0.3);
}
