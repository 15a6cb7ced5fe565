//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure (metric axioms, unmet
//! hypotheses), 2 I/O, parse or usage errors. Reports are canonical JSON
//! written atomically; each embeds the tool version, the resolved
//! configuration, the seed and SHA-256 hashes of every input file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clt::{run_clt_experiment, run_sup_vs_l2_transport, CltConfig, NormChoice, Statistic};
use crate::embedding::{lipschitz_constant, sup_distance, two_diameter_check};
use crate::entropy::{doubling_constant, dyadic_cover_check, entropy_integral_with, uniform_eps_grid};
use crate::error::{Error, Result};
use crate::frechet::{
    closest_point_to_hull_mean, hull_population_mean, population_frechet_mean_with, sample_frechet_mean, MetricChoice,
    TIE_TOL,
};
use crate::lp::{
    check_sandwich, estimate_assumption_constants_with, largest_feasible_d, nesting_check, Exponent, DEFAULT_D_GRID,
};
use crate::measure::ProbabilityMeasure;
use crate::metric::{make_cone_space, validate_metric_with, FiniteMetricSpace, Metric, TRIANGLE_TOL};
use crate::modified::{build_d_eta_with, injectivity_margin};
use crate::par::Exec;
use crate::report::{emit_csv, emit_json, parse_matrix, read_batch, read_measure, read_space, Envelope, Input};
use crate::simplex::PgdConfig;

#[derive(Parser, Debug)]
#[command(
    name = "metric-clt",
    version,
    about = "Embeddings, entropy, Fréchet means and CLT checks on finite metric spaces"
)]
pub struct Cli {
    /// Run every computation on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the metric axioms of a distance matrix.
    Validate(ValidateArgs),
    /// Export the embedding (the distance matrix itself, or the d_eta matrix)
    /// and check isometry, Lipschitz constants and the two-diameter bound.
    Embed(EmbedArgs),
    /// Covering numbers, entropy integral and dyadic covering bound.
    ///
    /// CSV columns: eps, n_cover, sqrt_log, cell_contribution.
    Entropy(EntropyArgs),
    /// Fréchet means over the points (population or sample).
    ///
    /// CSV columns: index, label, value.
    Frechet(FrechetArgs),
    /// L^p(eta) metric comparison: (D, C) table and sandwich check.
    ///
    /// CSV columns: x, y, d_p, d_p_prime, lower_bound, slack.
    LpCheck(LpArgs),
    /// Monte Carlo CLT experiment on the embedded random variable.
    ///
    /// CSV columns: n, projection_id, p_value (empty when skipped).
    Clt(CltArgs),
    /// End-to-end run on the discretized cone.
    ConeDemo(ConeArgs),
}

#[derive(Args, Debug)]
pub struct SpaceInput {
    /// Distance matrix: CSV without header, or JSON {"n", "dist", "labels"}.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Measure: JSON {"weights": [...]} or one weight per line. Uniform if omitted.
    #[arg(long)]
    pub measure: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = TRIANGLE_TOL)]
    pub tol: f64,
    /// JSON report path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub space: SpaceInput,
    #[arg(long, value_enum, default_value_t = MetricArg::D)]
    pub metric: MetricArg,
    /// Matrix of embedded rows, CSV (.csv) or JSON (.json).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Number of cells between the diameter and the smallest radius.
    #[arg(long, default_value_t = 64)]
    pub cells: usize,
    /// Smallest radius; defaults to half the smallest pairwise distance.
    #[arg(long)]
    pub eps_min: Option<f64>,
    /// Largest dyadic level checked against N·M^(k+1).
    #[arg(long, default_value_t = 4)]
    pub k_max: u32,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FrechetArgs {
    #[command(flatten)]
    pub space: SpaceInput,
    /// Sample batch (JSON {"indices"} or one index per line); population mean if omitted.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::D)]
    pub metric: MetricArg,
    /// Relative tie tolerance.
    #[arg(long, default_value_t = TIE_TOL)]
    pub tol: f64,
    /// Include the full value landscape in the JSON report.
    #[arg(long)]
    pub values: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LpArgs {
    #[command(flatten)]
    pub space: SpaceInput,
    #[arg(long, default_value = "1")]
    pub p: Exponent,
    #[arg(long, default_value = "inf")]
    pub p_prime: Exponent,
    /// Comma-separated D values in (0, 1).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_D_GRID.to_vec())]
    pub d_grid: Vec<f64>,
    /// Also bisect for the largest feasible D below this value.
    #[arg(long)]
    pub bisect: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CltArgs {
    #[command(flatten)]
    pub space: SpaceInput,
    #[arg(long, value_enum, default_value_t = MetricArg::D)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = NormArg::Sup)]
    pub norm: NormArg,
    #[arg(long, value_enum, default_value_t = StatisticArg::ScaledSum)]
    pub statistic: StatisticArg,
    /// Comma-separated increasing sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2000usize])]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub projections: usize,
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
    /// Replicates per sample size checked by the hull minimizer (frechet-mean only).
    #[arg(long, default_value_t = 50)]
    pub oracle_replicates: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Also run the sup-norm/L² transport check (needs a full-support measure).
    #[arg(long)]
    pub transport: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConeArgs {
    #[arg(long, default_value_t = 8)]
    pub nu: usize,
    #[arg(long, default_value_t = 24)]
    pub nv: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 2)]
    pub oracle_replicates: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Settings of the projected-gradient minimizer used to check hull Fréchet means.
#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 2000)]
    pub oracle_iterations: usize,
    #[arg(long, default_value_t = 2)]
    pub oracle_restarts: usize,
}

impl OracleArgs {
    fn config(&self) -> PgdConfig {
        PgdConfig { iterations: self.oracle_iterations, restarts: self.oracle_restarts.max(1), ..PgdConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricArg {
    D,
    DEta,
}

impl From<MetricArg> for MetricChoice {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::D => MetricChoice::D,
            MetricArg::DEta => MetricChoice::DEta,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NormArg {
    Sup,
    L2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StatisticArg {
    ScaledSum,
    FrechetMean,
}

/// Exit status of a finished command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ValidationFailed,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotAMetric(_) | Error::DuplicatePoints(..) | Error::Hypothesis(_) => 1,
        _ => 2,
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::ValidationFailed) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<Outcome> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match &cli.command {
        Command::Validate(a) => validate(a, exec, out),
        Command::Embed(a) => embed(a, exec, out),
        Command::Entropy(a) => entropy(a, exec, out),
        Command::Frechet(a) => frechet(a, exec, out),
        Command::LpCheck(a) => lp_check(a, exec, out),
        Command::Clt(a) => clt(a, exec, out),
        Command::ConeDemo(a) => cone_demo(a, exec, out),
    }
}

fn emit<C: Serialize, R: Serialize>(
    path: Option<&Path>,
    command: &str,
    config: &C,
    seed: Option<u64>,
    inputs: &[&Input],
    result: &R,
) -> Result<()> {
    if let Some(p) = path {
        emit_json(&Envelope::new(command, config, seed, inputs, result), p)?;
    }
    Ok(())
}

struct Loaded {
    space_in: Input,
    measure_in: Option<Input>,
    space: FiniteMetricSpace,
    measure: ProbabilityMeasure,
}

impl Loaded {
    fn inputs(&self) -> Vec<&Input> {
        std::iter::once(&self.space_in).chain(self.measure_in.as_ref()).collect()
    }
}

/// Reads and parses every input before any computation starts.
fn load(s: &SpaceInput) -> Result<Loaded> {
    let space_in = Input::read(&s.input)?;
    let measure_in = s.measure.as_deref().map(Input::read).transpose()?;
    let space = read_space(&space_in)?;
    let measure = match &measure_in {
        Some(m) => read_measure(m)?,
        None => ProbabilityMeasure::uniform(space.len())?,
    };
    measure.check_space(&space)?;
    Ok(Loaded { space_in, measure_in, space, measure })
}

#[derive(Serialize)]
struct ValidateConfig {
    tol: f64,
}

fn validate<W: Write>(a: &ValidateArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let input = Input::read(&a.input)?;
    let (rows, _) = parse_matrix(&input)?;
    let report = validate_metric_with(&rows, a.tol, exec)?;
    writeln!(out, "n = {}: {}", report.n, report.summary())?;
    for v in report.triangle_violations.iter().take(10) {
        writeln!(out, "  d({},{}) > d({},{}) + d({},{}) by {}", v.i, v.j, v.i, v.k, v.k, v.j, v.excess)?;
    }
    emit(a.output.as_deref(), "validate", &ValidateConfig { tol: a.tol }, None, &[&input], &report)?;
    Ok(if report.is_metric() { Outcome::Ok } else { Outcome::ValidationFailed })
}

#[derive(Serialize)]
struct EmbedConfig {
    metric: MetricChoice,
}

#[derive(Serialize)]
struct EmbedReport {
    n: usize,
    isometry_error: f64,
    max_lipschitz: f64,
    min_lipschitz: f64,
    hull_mean_two_diameter: crate::embedding::TwoDiameterCheck,
    injectivity: Option<crate::modified::InjectivityMargin>,
    pseudo_metric: Option<crate::modified::PseudoMetricWarning>,
}

fn embed<W: Write>(a: &EmbedArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let l = load(&a.space)?;
    let mm;
    let (metric, injectivity, pseudo): (&dyn Metric, _, _) = match a.metric {
        MetricArg::D => (&l.space, None, None),
        MetricArg::DEta => {
            mm = build_d_eta_with(&l.space, &l.measure, exec)?;
            (&mm, injectivity_margin(&mm), mm.warning().cloned())
        }
    };
    let n = metric.len();
    let mut iso = 0.0f64;
    let mut lip_max = 0.0f64;
    let mut lip_min = f64::INFINITY;
    for x in 0..n {
        for y in 0..n {
            iso = iso.max((sup_distance(metric.row(x), metric.row(y))? - metric.dist(x, y)).abs());
        }
        let lip = lipschitz_constant(metric.row(x), metric)?;
        lip_max = lip_max.max(lip);
        lip_min = lip_min.min(lip);
    }
    let hull = hull_population_mean(metric, &l.measure)?;
    let report = EmbedReport {
        n,
        isometry_error: iso,
        max_lipschitz: lip_max,
        min_lipschitz: if n > 1 { lip_min } else { 0.0 },
        hull_mean_two_diameter: two_diameter_check(metric, &hull)?,
        injectivity,
        pseudo_metric: pseudo,
    };
    writeln!(out, "n = {n}, isometry error = {iso:e}, Lipschitz constants in [{}, {lip_max}]", report.min_lipschitz)?;
    if let Some(w) = &report.pseudo_metric {
        writeln!(
            out,
            "warning: d_eta collapses {} pair(s); the measure lacks ball positivity",
            w.collapsed_pairs.len()
        )?;
    }
    if let Some(path) = &a.matrix {
        let rows: Vec<Vec<f64>> = (0..n).map(|x| metric.row(x).to_vec()).collect();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            let mut v = serde_json::json!({ "n": n, "dist": rows, "labels": l.space.labels() });
            if let Some(m) = &l.measure_in {
                v["measure_sha256"] = serde_json::Value::String(m.hash().sha256);
            }
            emit_json(&v, path)?;
        } else {
            emit_csv(path, |buf| {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(buf);
                for r in &rows {
                    w.write_record(r.iter().map(|v| v.to_string()))?;
                }
                w.flush()?;
                Ok(())
            })?;
        }
    }
    emit(a.output.as_deref(), "embed", &EmbedConfig { metric: a.metric.into() }, None, &l.inputs(), &report)?;
    Ok(if report.pseudo_metric.is_some() { Outcome::ValidationFailed } else { Outcome::Ok })
}

#[derive(Serialize)]
struct EntropyConfig {
    cells: usize,
    eps_min: f64,
    k_max: u32,
}

#[derive(Serialize)]
struct EntropyReport {
    curve: crate::entropy::EntropyCurve,
    doubling: crate::entropy::DoublingConstant,
    dyadic: Vec<crate::entropy::DyadicCheck>,
}

fn entropy<W: Write>(a: &EntropyArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let input = Input::read(&a.input)?;
    let space = read_space(&input)?;
    if a.cells == 0 {
        return Err(Error::InvalidArgument("cells must be positive".into()));
    }
    let diam = space.diameter();
    let eps_min = a.eps_min.unwrap_or_else(|| space.min_separation().unwrap_or(diam) / 2.0);
    if !(eps_min > 0.0 && eps_min < diam) {
        return Err(Error::InvalidArgument(format!("eps_min {eps_min} must lie in (0, diameter = {diam})")));
    }
    let grid = uniform_eps_grid(diam, eps_min, a.cells);
    let curve = entropy_integral_with(&space, &grid, exec)?;
    let report =
        EntropyReport { curve, doubling: doubling_constant(&space)?, dyadic: dyadic_cover_check(&space, a.k_max)? };
    writeln!(out, "entropy integral estimate = {}", report.curve.integral_estimate)?;
    writeln!(out, "below-grid remainder bound = {}", report.curve.floor_remainder)?;
    writeln!(out, "doubling constants: N = {}, M = {}", report.doubling.n, report.doubling.m)?;
    if let Some(p) = &a.csv {
        emit_csv(p, |buf| report.curve.write_csv(buf))?;
    }
    let cfg = EntropyConfig { cells: a.cells, eps_min, k_max: a.k_max };
    emit(a.output.as_deref(), "entropy", &cfg, None, &[&input], &report)?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct FrechetConfig {
    metric: MetricChoice,
    tol: f64,
    sample: bool,
}

#[derive(Serialize)]
struct FrechetReport {
    minimizers: Vec<usize>,
    labels: Vec<String>,
    min_value: f64,
    unique: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

fn frechet<W: Write>(a: &FrechetArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let l = load(&a.space)?;
    let batch_in = a.batch.as_deref().map(Input::read).transpose()?;
    let batch = batch_in.as_ref().map(|b| read_batch(b, l.space.len())).transpose()?;
    let mm;
    let metric: &dyn Metric = match a.metric {
        MetricArg::D => &l.space,
        MetricArg::DEta => {
            mm = build_d_eta_with(&l.space, &l.measure, exec)?;
            &mm
        }
    };
    let res = match &batch {
        Some(b) => sample_frechet_mean(metric, b, a.tol)?,
        None => population_frechet_mean_with(metric, &l.measure, a.tol, exec)?,
    };
    let labels: Vec<String> = res.minimizers.iter().map(|&i| l.space.label(i)).collect();
    writeln!(
        out,
        "{} minimizer(s), min value {}: {}",
        res.minimizers.len(),
        res.min_value,
        res.minimizers.iter().zip(&labels).map(|(i, s)| format!("{i} ({s})")).collect::<Vec<_>>().join(", ")
    )?;
    if let Some(p) = &a.csv {
        emit_csv(p, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["index", "label", "value"])?;
            for (i, v) in res.values.iter().enumerate() {
                w.write_record([i.to_string(), l.space.label(i), v.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    let report = FrechetReport {
        minimizers: res.minimizers.clone(),
        labels,
        min_value: res.min_value,
        unique: res.unique,
        values: a.values.then(|| res.values.clone()),
    };
    let cfg = FrechetConfig { metric: a.metric.into(), tol: a.tol, sample: batch.is_some() };
    let mut inputs = l.inputs();
    inputs.extend(batch_in.as_ref());
    emit(a.output.as_deref(), "frechet", &cfg, None, &inputs, &report)?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct LpConfig {
    p: Exponent,
    p_prime: Exponent,
    d_grid: Vec<f64>,
    bisect: Option<f64>,
}

#[derive(Serialize)]
struct LpReport {
    constants: Vec<crate::lp::LpAssumptionEstimate>,
    largest_feasible: Option<crate::lp::LpAssumptionEstimate>,
    chosen: Option<crate::lp::LpAssumptionEstimate>,
    sandwich: Option<crate::lp::SandwichReport>,
    nesting_violations: Option<Vec<crate::lp::NestingViolation>>,
}

fn lp_check<W: Write>(a: &LpArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let l = load(&a.space)?;
    let constants = estimate_assumption_constants_with(&l.space, &l.measure, &a.d_grid, exec)?;
    let largest_feasible = a.bisect.map(|hi| largest_feasible_d(&l.space, &l.measure, hi, 40)).transpose()?.flatten();
    writeln!(out, "{:>8} {:>12} {:>6}", "D", "C", "holds")?;
    for e in &constants {
        writeln!(out, "{:>8} {:>12.6} {:>6}", e.d, e.c, e.holds)?;
    }
    let chosen = largest_feasible
        .clone()
        .or_else(|| constants.iter().filter(|e| e.holds).max_by(|x, y| x.d.total_cmp(&y.d)).cloned());
    let (sandwich, nesting) = match &chosen {
        Some(est) => {
            let s = check_sandwich(&l.space, &l.measure, a.p, a.p_prime, est)?;
            let nest = nesting_check(&l.space, &l.measure, est.d, a.p, a.p_prime)?;
            writeln!(
                out,
                "sandwich p = {}, p' = {} at D = {}, C = {}: {} violation(s)",
                a.p,
                a.p_prime,
                est.d,
                est.c,
                s.violations.len()
            )?;
            writeln!(out, "nesting: {} point(s) outside the p' set", nest.len())?;
            (Some(s), Some(nest))
        }
        None => {
            writeln!(out, "no D with C < 1; sandwich not checked")?;
            (None, None)
        }
    };
    if let (Some(p), Some(s)) = (&a.csv, &sandwich) {
        emit_csv(p, |buf| s.write_csv(buf))?;
    }
    let failed = sandwich.as_ref().is_none_or(|s| !s.violations.is_empty());
    let report = LpReport { constants, largest_feasible, chosen, sandwich, nesting_violations: nesting };
    let cfg = LpConfig { p: a.p, p_prime: a.p_prime, d_grid: a.d_grid.clone(), bisect: a.bisect };
    emit(a.output.as_deref(), "lp-check", &cfg, None, &l.inputs(), &report)?;
    Ok(if failed { Outcome::ValidationFailed } else { Outcome::Ok })
}

#[derive(Serialize)]
struct CltOutput {
    report: crate::clt::CltReport,
    transport: Option<crate::clt::TransportReport>,
}

fn clt_config(a: &CltArgs, exec: Exec) -> CltConfig {
    CltConfig {
        metric_choice: a.metric.into(),
        norm_choice: match a.norm {
            NormArg::Sup => NormChoice::Sup,
            NormArg::L2 => NormChoice::L2,
        },
        statistic: match a.statistic {
            StatisticArg::ScaledSum => Statistic::ScaledSum,
            StatisticArg::FrechetMean => Statistic::FrechetMean,
        },
        n_list: a.n_list.clone(),
        replicates: a.replicates,
        seed: a.seed,
        n_projections: a.projections,
        level: a.level,
        oracle_replicates: a.oracle_replicates,
        oracle: a.oracle.config(),
        exec,
    }
}

fn print_clt<W: Write>(out: &mut W, r: &crate::clt::CltReport) -> Result<()> {
    writeln!(out, "{:>8} {:>12} {:>10} {:>8}", "n", "rel_frob", "pass_frac", "skipped")?;
    for p in &r.per_n {
        writeln!(
            out,
            "{:>8} {:>12.6} {:>10.3} {:>8}",
            p.n, p.relative_frobenius_error, p.fraction_passing, p.skipped_projections
        )?;
    }
    if let Some(g) = r.frechet_equals_mean_max_gap {
        writeln!(
            out,
            "hull Fréchet mean vs coordinate mean: max gap {g:e} over {} replicate(s)",
            r.oracle_checked_replicates
        )?;
    }
    Ok(())
}

fn clt<W: Write>(a: &CltArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let l = load(&a.space)?;
    let cfg = clt_config(a, exec);
    let report = run_clt_experiment(&l.space, &l.measure, &cfg)?;
    print_clt(out, &report)?;
    let transport = a.transport.then(|| run_sup_vs_l2_transport(&l.space, &l.measure, &cfg)).transpose()?;
    if let Some(t) = &transport {
        writeln!(out, "transport error {:e}, bit-identical: {}", t.generator_transport_error, t.bit_identical)?;
    }
    if let Some(p) = &a.csv {
        emit_csv(p, |buf| report.write_projection_csv(buf))?;
    }
    emit(a.output.as_deref(), "clt", &cfg, Some(a.seed), &l.inputs(), &CltOutput { report, transport })?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct ConeConfig<'a> {
    nu: usize,
    nv: usize,
    clt: &'a CltConfig,
}

#[derive(Serialize)]
struct ConeReport {
    n_points: usize,
    frechet_minimizers: Vec<usize>,
    frechet_labels: Vec<String>,
    frechet_unique: bool,
    d_eta_is_metric: bool,
    closest_point: crate::frechet::ClosestPointResult,
    clt: crate::clt::CltReport,
}

fn cone_demo<W: Write>(a: &ConeArgs, exec: Exec, out: &mut W) -> Result<Outcome> {
    let space = make_cone_space(a.nu, a.nv)?;
    let measure = ProbabilityMeasure::uniform(space.len())?;
    let fm = population_frechet_mean_with(&space, &measure, TIE_TOL, exec)?;
    let labels: Vec<String> = fm.minimizers.iter().map(|&i| space.label(i)).collect();
    writeln!(out, "cone grid {} x {}: {} Fréchet minimizer(s): {}", a.nu, a.nv, fm.minimizers.len(), labels.join(" "))?;
    let mm = build_d_eta_with(&space, &measure, exec)?;
    let cp = closest_point_to_hull_mean(&mm, &measure, TIE_TOL)?;
    writeln!(out, "d_eta metric: {}; closest point to hull mean coincides with mu0: {}", mm.is_metric(), cp.coincide)?;
    let cfg = CltConfig {
        n_list: vec![a.n],
        replicates: a.replicates,
        seed: a.seed,
        statistic: Statistic::FrechetMean,
        oracle_replicates: a.oracle_replicates,
        oracle: a.oracle.config(),
        exec,
        ..CltConfig::default()
    };
    let clt = run_clt_experiment(&space, &measure, &cfg)?;
    print_clt(out, &clt)?;
    let report = ConeReport {
        n_points: space.len(),
        frechet_minimizers: fm.minimizers,
        frechet_labels: labels,
        frechet_unique: fm.unique,
        d_eta_is_metric: mm.is_metric(),
        closest_point: cp,
        clt,
    };
    let cone_cfg = ConeConfig { nu: a.nu, nv: a.nv, clt: &cfg };
    emit(a.output.as_deref(), "cone-demo", &cone_cfg, Some(a.seed), &[], &report)?;
    Ok(Outcome::Ok)
}
