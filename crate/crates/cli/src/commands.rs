use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use uhmc::diagnostics::{benchmark, write_benchmark_csv, BenchmarkConfig, SmaxPolicy, DEFAULT_BINS, DEFAULT_BURN_IN};
use uhmc::model::{gen_synthetic, write_dataset_csv, RegularityConstants};
use uhmc::regularity::{
    figure3_experiment, logistic_constants, plan_parameters, regularity_report, Figure3Row, SearchConfig,
    StartKind,
};
use uhmc::rng::{chain_rng, derive_seed, standard_normal_vector};
use uhmc::samplers::{
    run_coupled, run_sampler, write_coupling_csv, write_leapfrog_csv, write_trace_csv, SamplerKind, SamplerSpec,
    TraceSummary,
};
use uhmc::scaling::{scaling_experiment, ScalingConfig, ScalingReport};

use crate::config::{positive, Command, RunArgs, StartName};
use crate::output::RunOutput;
use crate::CliError;

pub fn run(command: Command, args: &RunArgs) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::create(command, args)?;
    let t0 = Instant::now();
    match command {
        Command::Sample => sample(args, &mut out)?,
        Command::Benchmark => benchmark_cmd(args, &mut out)?,
        Command::Couple => couple(args, &mut out)?,
        Command::Regularity => regularity(args, &mut out)?,
        Command::Plan => plan(args, &mut out)?,
        Command::GenData => gen_data(args, &mut out)?,
        Command::Scaling => scaling(args, &mut out)?,
    }
    #[derive(Serialize)]
    struct Timing {
        wall_time_seconds: f64,
    }
    out.write_json("timing.json", &Timing { wall_time_seconds: t0.elapsed().as_secs_f64() })?;
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    target: &'a str,
    d: usize,
    eta: f64,
    #[serde(rename = "T")]
    t: f64,
    seed: u64,
    thin: usize,
    #[serde(flatten)]
    trace: TraceSummary,
}

fn sample(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let built = args.build_target()?;
    let d = built.target.dim();
    let mut spec = SamplerSpec::new(
        args.single_kind(SamplerKind::Uhmc)?,
        args.eta.unwrap_or(0.1),
        args.t.unwrap_or(1.0),
        args.imax.unwrap_or(1000),
        args.seed(),
    )
    .with_start(args.start_point(d, StartName::Cold))
    .with_thin(args.thin.unwrap_or(1));
    spec.record_leapfrog = args.verbose;
    let trace = run_sampler(built.target.as_ref(), &spec)?;
    out.write_with("trace.csv", |w| Ok(write_trace_csv(&trace, w)?))?;
    if trace.leapfrog_paths.is_some() {
        out.write_with("leapfrog.csv", |w| Ok(write_leapfrog_csv(&trace, w)?))?;
    }
    let summary = SampleSummary {
        target: &built.label,
        d,
        eta: spec.eta,
        t: spec.trajectory_time,
        seed: spec.seed,
        thin: spec.thin,
        trace: trace.summary(),
    };
    out.write_json("summary.json", &summary)
}

fn benchmark_cmd(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let built = args.build_target()?;
    let d = built.target.dim();
    let seed = args.seed();
    let t = args.t.unwrap_or(PI / 3.0);
    let start = args.start_point(d, StartName::Warm);
    let kinds = args.kinds(&[SamplerKind::Uhmc, SamplerKind::Mala, SamplerKind::Mhmc, SamplerKind::Ula])?;
    let cfg = BenchmarkConfig {
        samplers: kinds.iter().map(|&k| SamplerSpec::new(k, 0.1, t, 1, 0).with_start(start.clone())).collect(),
        eta_grid: args.eta_grid.clone().unwrap_or_else(|| (0..11).map(|i| 0.1 + 0.05 * i as f64).collect()),
        budget: args.budget.unwrap_or(20_000),
        reference: SamplerSpec::new(
            SamplerKind::Mala,
            args.reference_eta.unwrap_or(0.5),
            t,
            args.reference_steps.unwrap_or(200_000),
            derive_seed(seed, &[7]),
        ),
        bins: args.bins.unwrap_or(DEFAULT_BINS),
        burn_in: args.burn_in.unwrap_or(DEFAULT_BURN_IN),
        master_seed: seed,
        smax_policy: SmaxPolicy::InitialPositive,
    };
    let report = benchmark(built.target.as_ref(), &built.label, &cfg)?;
    out.write_json("benchmark.json", &report)?;
    out.write_with("benchmark.csv", |w| Ok(write_benchmark_csv(&report, w)?))?;
    let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
    out.write_bytes("benchmark.gp", benchmark_plot(&names.join(" ")).as_bytes())
}

fn benchmark_plot(kinds: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 1100,420\n\
         set output 'benchmark.png'\n\
         set multiplot layout 1,2\n\
         set xlabel 'eta'\n\
         set ylabel 'marginal accuracy'\n\
         plot for [k in \"{kinds}\"] 'benchmark.csv' using (strcol(1) eq k ? $2 : NaN):3 with linespoints title k\n\
         set ylabel 'autocorrelation time (numerical steps)'\n\
         set logscale y\n\
         plot for [k in \"{kinds}\"] 'benchmark.csv' using (strcol(1) eq k ? $2 : NaN):5 with linespoints title k\n\
         unset multiplot\n"
    )
}

#[derive(Serialize)]
struct CoupleSummary {
    kind: SamplerKind,
    eta: f64,
    #[serde(rename = "T")]
    t: f64,
    i_max: usize,
    initial_distance: f64,
    final_distance: f64,
    max_ratio: Option<f64>,
}

fn couple(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let built = args.build_target()?;
    let d = built.target.dim();
    let seed = args.seed();
    let spec = SamplerSpec::new(
        args.single_kind(SamplerKind::Uhmc)?,
        args.eta.unwrap_or(0.1),
        args.t.unwrap_or(1.0),
        args.imax.unwrap_or(100),
        seed,
    );
    let x0 = standard_normal_vector(&mut chain_rng(derive_seed(seed, &[1])), d);
    let y0 = standard_normal_vector(&mut chain_rng(derive_seed(seed, &[2])), d);
    let record = run_coupled(built.target.as_ref(), &spec, &x0, &y0)?;
    out.write_with("coupling.csv", |w| Ok(write_coupling_csv(&record, w)?))?;
    let summary = CoupleSummary {
        kind: spec.kind,
        eta: spec.eta,
        t: spec.trajectory_time,
        i_max: spec.i_max,
        initial_distance: record.distances[0],
        final_distance: *record.distances.last().expect("non-empty"),
        max_ratio: record.ratios.iter().flatten().copied().reduce(f64::max),
    };
    out.write_json("summary.json", &summary)
}

fn search_config(args: &RunArgs) -> SearchConfig {
    let base = SearchConfig::default();
    SearchConfig {
        restarts: args.restarts.unwrap_or(base.restarts),
        iterations: args.iterations.unwrap_or(base.iterations),
        ..base
    }
}

fn regularity(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let cfg = search_config(args);
    if let Some(d_list) = &args.d_list {
        let rows = figure3_experiment(d_list, args.draws.unwrap_or(1000), args.seed(), &cfg)?;
        out.write_json("figure3.json", &rows)?;
        out.write_bytes("figure3.csv", figure3_csv(&rows).as_bytes())?;
        return out.write_bytes("figure3.gp", FIGURE3_PLOT.as_bytes());
    }
    let built = args.build_target()?;
    let target = built
        .logistic
        .ok_or_else(|| CliError::Config("regularity needs a logistic --dataset or a --d-list sweep".into()))?;
    let report = regularity_report(&target, &cfg, args.seed())?;
    out.write_json("regularity.json", &report)
}

fn figure3_csv(rows: &[Figure3Row]) -> String {
    let mut s = String::from("d,r,l2_estimate,l_inf_estimate,median_l2,median_linf,ratio,error\n");
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
        writeln!(
            s,
            "{},{},{},{},{},{},{},{err}",
            r.d,
            r.r,
            opt(r.l2_estimate),
            opt(r.l_inf_estimate),
            opt(r.median_l2),
            opt(r.median_linf),
            opt(r.ratio)
        )
        .expect("string write");
    }
    s
}

const FIGURE3_PLOT: &str = "set datafile separator ','\n\
set terminal pngcairo size 640,420\n\
set output 'figure3.png'\n\
set key autotitle columnhead\n\
set logscale x\n\
set xlabel 'd'\n\
set ylabel 'median Euclidean scale / median seminorm scale'\n\
plot 'figure3.csv' using 1:7 with linespoints\n";

fn plan(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let (constants, d, r) = match &args.dataset {
        Some(path) => {
            let target = crate::config::load_logistic(path, args.prior_scale.unwrap_or(1.0))?;
            let c = logistic_constants(&target)?;
            use uhmc::model::Target;
            (c, target.dim(), target.num_data())
        }
        None => {
            let need = |v: Option<f64>, flag: &str| {
                v.ok_or_else(|| CliError::Config(format!("plan needs {flag} (or --dataset)")))
            };
            let d = args.d.ok_or_else(|| CliError::Config("plan needs --d (or --dataset)".into()))?;
            let c = RegularityConstants::new(
                need(args.m, "--m")?,
                need(args.big_m, "--M")?,
                args.l_inf.unwrap_or(0.0),
                args.b,
            )?;
            (c, positive(d, "--d")?, args.r.unwrap_or(d))
        }
    };
    let start = match args.start.unwrap_or(StartName::Warm) {
        StartName::Warm => StartKind::Warm { omega: args.omega.unwrap_or(1.0) },
        StartName::Cold => StartKind::Cold,
    };
    let plan = plan_parameters(
        &constants,
        d,
        r,
        args.eps.unwrap_or(0.1),
        args.delta.unwrap_or(0.1),
        start,
        args.c_plan.unwrap_or(1.0),
    )?;
    out.write_json("plan.json", &plan)
}

fn gen_data(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let d = positive(args.d.unwrap_or(10), "--d")?;
    let r = positive(args.r.unwrap_or(d), "--r")?;
    let data = gen_synthetic(d, r, args.seed())?;
    out.write_with("dataset.csv", |w| Ok(write_dataset_csv(&data, w)?))
}

fn scaling(args: &RunArgs, out: &mut RunOutput) -> Result<(), CliError> {
    let base = ScalingConfig::default();
    let cfg = ScalingConfig {
        d_list: args.d_list.clone().unwrap_or(base.d_list.clone()),
        t: args.t.unwrap_or(base.t),
        eps: args.eps.unwrap_or(base.eps),
        draws: args.draws.unwrap_or(base.draws),
        seed: args.seed(),
        ..base
    };
    let report = scaling_experiment(&cfg)?;
    out.write_json("scaling.json", &report)?;
    out.write_bytes("scaling.csv", scaling_csv(&report).as_bytes())?;
    let plot = format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 640,420\n\
         set output 'scaling.png'\n\
         set logscale xy\n\
         set xlabel 'd'\n\
         set ylabel 'largest eta with endpoint error eps'\n\
         fit_line(x) = exp({:?}) * x**({:?})\n\
         plot 'scaling.csv' using 1:2 skip 1 with points title 'eta*', fit_line(x) title 'slope {:.4}'\n",
        report.intercept, report.slope, report.slope
    );
    out.write_bytes("scaling.gp", plot.as_bytes())
}

fn scaling_csv(report: &ScalingReport) -> String {
    let mut s = String::from("d,eta_star,error_at_eta_star\n");
    for p in &report.points {
        writeln!(s, "{},{:?},{:?}", p.d, p.eta_star, p.error_at_eta_star).expect("string write");
    }
    s
}

pub fn print_outputs(out: &RunOutput) -> std::io::Result<()> {
    let files: Vec<String> = out.written().iter().map(|p| p.display().to_string()).collect();
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer(&mut stdout, &serde_json::json!({ "outputs": files }))?;
    writeln!(stdout)
}

