//! Subcommand implementations.

use std::path::Path;

use fts_core::ingestion::{build_cidr_sample, pairwise_matrix, parse_price_csv, TimeWindow};
use fts_core::simulation::{run_monte_carlo, table_csv, DgpFamily, DgpSpec, McReport, MonteCarloPlan, Series};
use fts_core::statistic::kernel::{default_window, fourth_root_floor};
use fts_core::statistic::DEFAULT_SIGMA2_FLOOR;
use fts_core::{make_uniform_grid, FunctionalSample, KernelSpec, PairEstimator, TestConfig, TestResult};
use serde::Serialize;

use crate::output::{emit, open, read_sample};
use crate::{
    CidrArgs, CliError, Dgp, Format, GenerateArgs, KernelArgs, PairwiseArgs, PanelArgs, ReplayArgs,
    SimulateArgs, TestArgs,
};

/// Test configuration for samples of length `n`, filling unset options
/// with the default horizon and windows.
fn resolve_config(n: usize, args: &KernelArgs) -> Result<TestConfig, CliError> {
    let horizon = args.horizon.unwrap_or_else(|| fourth_root_floor(n).max(1));
    let w1 = args.w1.unwrap_or_else(|| default_window(n));
    let w2 = args.w2.unwrap_or_else(|| default_window(horizon));
    let config = TestConfig {
        horizon,
        kernel_mu: KernelSpec::new(args.kernel1, w1)?,
        kernel_sigma: KernelSpec::new(args.kernel2, w2)?,
        sigma2_floor: DEFAULT_SIGMA2_FLOOR,
    };
    config.validate(n)?;
    Ok(config)
}

fn dgp_spec(dgp: Dgp, q: f64, n: usize, m: usize, seed: u64, burn_in: usize) -> Result<DgpSpec, CliError> {
    let spec = match dgp {
        Dgp::Iid => {
            if q != 0.0 {
                return Err(CliError::usage("--q applies only to --dgp far1"));
            }
            DgpSpec::iid(n, m, seed)
        }
        Dgp::Far1 => DgpSpec {
            family: DgpFamily::Far1,
            q,
            burn_in,
            n,
            m,
            seed,
        },
    };
    spec.validate()?;
    Ok(spec)
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn render_report(report: &McReport, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => with_newline(report.to_json()),
        Format::Csv => {
            let plan = serde_json::to_string(&report.plan)
                .map_err(|e| CliError::data(format!("cannot serialize the plan: {e}")))?;
            format!("# plan {plan}\n{}", table_csv(std::slice::from_ref(report)))
        }
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let dgp_x = dgp_spec(args.dgp, args.q, args.n, args.m, args.seed, args.burn_in)?;
    let dgp_y = dgp_spec(args.dgp_y.unwrap_or(args.dgp), args.q, args.n, args.m, args.seed, args.burn_in)?;
    let config = resolve_config(args.n, &args.kernels)?;
    let plan = MonteCarloPlan {
        dgp_x,
        dgp_y,
        replications: args.reps,
        config,
    };
    plan.validate()?;
    eprintln!(
        "simulating {} replications of {} (n={}, H={})",
        args.reps,
        plan.dgp_x.label(),
        args.n,
        plan.config.horizon
    );
    let report = run_monte_carlo(&plan, args.threads)?;
    if report.failures > 0 {
        eprintln!("warning: {} replications had a degenerate variance estimate", report.failures);
    }
    emit(args.output.out.as_deref(), &render_report(&report, args.output.format)?)
}

pub fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let file = open(&args.report)?;
    let stored: McReport = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::data(format!("{}: not a simulation report: {e}", args.report.display())))?;
    let report = run_monte_carlo(&stored.plan, args.threads)?;
    emit(args.out.as_deref(), &render_report(&report, Format::Json)?)
}

fn sample_csv(sample: &FunctionalSample) -> Result<String, CliError> {
    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::data(e.to_string()))
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let spec = dgp_spec(args.dgp, args.q, args.n, args.m, args.seed, args.burn_in)?;
    let series = if args.second { Series::Y } else { Series::X };
    let sample = spec.sample(args.rep, series)?;
    emit(args.out.as_deref(), &sample_csv(&sample)?)
}

#[derive(Serialize)]
struct TestReport<'a> {
    x: String,
    y: String,
    config: &'a TestConfig,
    result: &'a TestResult,
}

pub fn test(args: &TestArgs) -> Result<(), CliError> {
    let x = read_sample(&args.x)?;
    let y = read_sample(&args.y)?;
    if x.n() != y.n() || x.grid().points() != y.grid().points() {
        return Err(CliError::data(format!(
            "alignment error: {} has {} curves on {} points, {} has {} curves on {} points",
            args.x.display(),
            x.n(),
            x.m(),
            args.y.display(),
            y.n(),
            y.m()
        )));
    }
    let config = resolve_config(x.n(), &args.kernels)?;
    let result = PairEstimator::new(&x, &y)?.test(&config)?;
    println!("V={:.6} p={:.6e}", result.v_stat, result.p_value);
    let body = match args.output.format {
        Format::Json => {
            let report = TestReport {
                x: args.x.display().to_string(),
                y: args.y.display().to_string(),
                config: &config,
                result: &result,
            };
            with_newline(
                serde_json::to_string_pretty(&report).map_err(|e| CliError::data(e.to_string()))?,
            )
        }
        Format::Csv => format!("{}\n{}\n", TestResult::CSV_HEADER, result.csv_record()),
    };
    emit(args.output.out.as_deref(), &body)
}

fn ticker_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_cidr(path: &Path, panel: &PanelArgs) -> Result<fts_core::ingestion::CidrSample, CliError> {
    let window = match &panel.session {
        Some(spec) => TimeWindow::parse_fixed(spec).map_err(|e| CliError::usage(e.to_string()))?,
        None => TimeWindow::PerDay,
    };
    let grid = make_uniform_grid(panel.m)?;
    let ticker = ticker_of(path);
    let prices = parse_price_csv(open(path)?, &ticker, window)
        .map_err(|e| CliError::from(e).with_context(path))?;
    let sample = build_cidr_sample(&prices, &grid).map_err(|e| CliError::from(e).with_context(path))?;
    if sample.skipped_days > 0 {
        eprintln!(
            "{}: skipped {} day(s) with fewer than two observations",
            path.display(),
            sample.skipped_days
        );
    }
    Ok(sample)
}

pub fn cidr(args: &CidrArgs) -> Result<(), CliError> {
    let sample = load_cidr(&args.input, &args.panel)?;
    emit(args.out.as_deref(), &sample_csv(&sample.sample)?)
}

#[derive(Serialize)]
struct PairwiseOutput<'a> {
    inputs: Vec<String>,
    m: usize,
    session: Option<&'a str>,
    days: usize,
    #[serde(flatten)]
    report: &'a fts_core::ingestion::PairwiseReport,
}

pub fn pairwise(args: &PairwiseArgs) -> Result<(), CliError> {
    let mut samples = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let cidr = load_cidr(path, &args.panel)?;
        samples.push((cidr.ticker, cidr.sample));
    }
    let n = samples[0].1.n();
    if let Some((name, s)) = samples.iter().find(|(_, s)| s.n() != n) {
        return Err(CliError::data(format!(
            "alignment error: {name} has {} usable days but {} has {n}",
            s.n(),
            samples[0].0
        )));
    }
    let config = resolve_config(n, &args.kernels)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))?;
    let report = pool.install(|| pairwise_matrix(&samples, Some(config)))?;
    let body = match args.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_matrix_csv(&mut buf)?;
            String::from_utf8(buf).map_err(|e| CliError::data(e.to_string()))?
        }
        Format::Json => {
            let out = PairwiseOutput {
                inputs: args.inputs.iter().map(|p| p.display().to_string()).collect(),
                m: args.panel.m,
                session: args.panel.session.as_deref(),
                days: n,
                report: &report,
            };
            with_newline(serde_json::to_string_pretty(&out).map_err(|e| CliError::data(e.to_string()))?)
        }
    };
    emit(args.output.out.as_deref(), &body)
}
