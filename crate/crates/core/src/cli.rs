//! The `multapprox` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bohr::{
    bohr_density_report, count_bohr_hat, delta_range, dyadic_cells, enumerate_bohr, epsilon_select,
    restricted_set_g, u_n_sum, BohrSetSpec,
};
use crate::counting::{count, CountMode, CountOptions, CountQuery};
use crate::error::{invalid, Error, Result};
use crate::experiments::config::{global_args, load_config, section_args};
use crate::experiments::rng::{random_frac, stream_rng};
use crate::experiments::{
    run_plan, write_outcome, ExperimentPlan, Fibre, Metadata, OutputFormat, PlanTheorem,
};
use crate::exponents::{estimate_mult_exponent, littlewood_records, DEFAULT_N_MIN};
use crate::fixedpoint::Frac64;
use crate::geometry::{volume_monte_carlo, BoxKind, ProductRegion};
use crate::predictors::{euler_phi_sieve, PredictorKind, PredictorSeries};
use crate::psi::{classify, ApproxFunction, ClassifyOptions, HypothesisReport, Theorem};
use crate::selfcheck::run_selfcheck;

/// Exit code for hypothesis violations under `--strict`.
pub const EXIT_HYPOTHESIS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "multapprox",
    version,
    about = "Exact counting for multiplicative Diophantine approximation",
    arg_required_else_help = true,
    args_override_self = true
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MULTAPPROX_THREADS")]
    threads: Option<usize>,

    /// TOML file with default flags; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count n ≤ N (or pairs) satisfying an approximation condition.
    Count(CountArgs),
    /// Partial sums of the asymptotic predictors.
    Predict(PredictArgs),
    /// Exact and Monte Carlo volume of {x : x_1⋯x_k ≤ λ}.
    Volume(VolumeArgs),
    /// Bohr set counts, the restricted set G, U_N and dyadic cells.
    Bohr(BohrArgs),
    /// Multiplicative exponent estimate or Littlewood record trail.
    Exponent(ExponentArgs),
    /// Seeded random-α trials against a predictor.
    Experiment(ExperimentArgs),
    /// Compare fast paths with brute-force oracles.
    Selfcheck(SelfcheckArgs),
}

const SUBCOMMANDS: [&str; 7] = [
    "count",
    "predict",
    "volume",
    "bohr",
    "exponent",
    "experiment",
    "selfcheck",
];

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct OutArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CountArgs {
    #[arg(long, default_value = "multiplicative")]
    mode: CountMode,
    /// Dimension; taken from --alpha if omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Coordinates (hex raw, decimal, p/q, golden, sqrt:d), or `random`.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<Frac64>,
    /// powerlog:c,kappa[,a] | const:c | table:v1,v2,… | table:@file
    #[arg(long)]
    psi: ApproxFunction,
    #[arg(long = "N", alias = "n")]
    n: u64,
    /// Seed for `--alpha random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep up to this many witnesses.
    #[arg(long, default_value_t = 0)]
    witnesses: usize,
    /// Largest ψ(n)/P(n) honoured by relaxed pair counting (default 2N).
    #[arg(long)]
    radius_cap: Option<f64>,
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Exit with status 2 if a hypothesis of the matching theorem fails.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct PredictArgs {
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "psi_k,psi_times,psi_times_log,psi_abh,t_k"
    )]
    kind: Vec<PredictorKind>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    psi: ApproxFunction,
    /// One or more checkpoints.
    #[arg(long = "N", alias = "n", value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct VolumeArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long = "box", default_value = "unit")]
    box_kind: BoxKind,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct BohrArgs {
    #[arg(long = "N", alias = "n")]
    n: u64,
    /// The k−1 frequencies α_1, …, α_{k−1}.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<Frac64>,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<Frac64>,
    /// One radius per frequency, or a single radius for all.
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<f64>,
    /// ε for G, B̂ and dyadic cells; derived from --w and --kappa if omitted.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Also compute U_N for this ψ.
    #[arg(long)]
    psi: Option<ApproxFunction>,
    /// Include the member list.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ExponentArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<Frac64>,
    #[arg(long = "N", alias = "n")]
    n: u64,
    #[arg(long, default_value_t = DEFAULT_N_MIN)]
    n_min: u64,
    /// Track records of n‖nα‖‖nβ‖ for the two given coordinates instead.
    #[arg(long)]
    littlewood: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ExperimentArgs {
    /// schmidt | wang_yu | abh | main | fibre | uniform
    #[arg(long)]
    theorem: PlanTheorem,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    psi: ApproxFunction,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<Frac64>,
    #[arg(long, alias = "N", value_delimiter = ',', required = true)]
    checkpoints: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed α_1, …, α_{k−1}; only α_k is sampled.
    #[arg(long, value_delimiter = ',')]
    fibre: Vec<Frac64>,
    /// Declared multiplicative exponent of the fibre.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long)]
    kappa: Option<f64>,
    /// Compare against this predictor instead of the theorem's.
    #[arg(long)]
    predictor: Option<PredictorKind>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Inserts flags from `--config FILE` right after the subcommand name, so the
/// explicit flags that follow override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let table = load_config(path.as_ref())?;
    let Some(sub_at) = strs.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };
    let mut injected = global_args(&table)?;
    injected.extend(section_args(&table, &strs[sub_at])?);
    let mut out: Vec<OsString> = args[..=sub_at].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend(args[sub_at + 1..].iter().cloned());
    Ok(out)
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => {
                let (mut o, mut e) = (Vec::new(), Vec::new());
                let r = pool.install(|| dispatch(cli.command, &mut o, &mut e));
                let _ = out.write_all(&o).and_then(|_| err.write_all(&e));
                r
            }
            Err(e) => Err(invalid(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(cli.command, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Count(a) => cmd_count(a, out, err),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Volume(a) => cmd_volume(a, out),
        Command::Bohr(a) => cmd_bohr(a, out),
        Command::Exponent(a) => cmd_exponent(a, out),
        Command::Experiment(a) => cmd_experiment(a, out, err),
        Command::Selfcheck(a) => cmd_selfcheck(a, out),
    }
}

/// Runs `f` against the `--out` file or `out`.
fn with_sink(
    o: &OutArgs,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match &o.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(out)?,
    }
    Ok(())
}

fn report_hypotheses(report: &HypothesisReport, strict: bool, err: &mut dyn Write) -> Result<i32> {
    let mut violated = false;
    for v in report.violations() {
        violated = true;
        writeln!(err, "warning: hypothesis {} fails: {}", v.name, v.note)?;
    }
    Ok(if violated && strict {
        EXIT_HYPOTHESIS
    } else {
        0
    })
}

fn parse_alpha(tokens: &[String], k: Option<usize>, seed: u64) -> Result<Vec<Frac64>> {
    if tokens.len() == 1 && tokens[0].eq_ignore_ascii_case("random") {
        let k = k.ok_or_else(|| invalid("--alpha random needs --k"))?;
        let mut rng = stream_rng(seed, 0);
        return Ok((0..k).map(|_| random_frac(&mut rng)).collect());
    }
    let alpha = tokens
        .iter()
        .map(|t| t.parse())
        .collect::<Result<Vec<Frac64>>>()?;
    if let Some(k) = k {
        if k != alpha.len() {
            return Err(invalid(format!(
                "--k {k} but {} alpha coordinates",
                alpha.len()
            )));
        }
    }
    Ok(alpha)
}

#[derive(Serialize)]
struct CountOutput<'a> {
    #[serde(flatten)]
    result: &'a crate::counting::CountResult,
    alpha: &'a [Frac64],
    gamma: &'a [Frac64],
    psi: String,
    elapsed: f64,
}

fn cmd_count(a: CountArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let alpha = parse_alpha(&a.alpha, a.k, a.seed)?;
    let mut q = CountQuery::new(alpha, a.n, a.psi, a.mode);
    if !a.gamma.is_empty() {
        q = q.with_gamma(a.gamma);
    }
    let theorem = match a.mode {
        CountMode::Simultaneous => Theorem::Schmidt,
        CountMode::CoprimePairs => Theorem::Abh,
        _ => Theorem::WangYu,
    };
    let report = classify(
        &q.psi,
        theorem,
        &ClassifyOptions {
            k: q.k(),
            ..ClassifyOptions::default()
        },
    );
    let opts = CountOptions {
        witness_cap: a.witnesses,
        radius_cap: a.radius_cap,
    };
    let start = Instant::now();
    let r = count(&q, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    with_sink(&a.out, out, |w| {
        match a.format {
            OutputFormat::Json => {
                let o = CountOutput {
                    result: &r,
                    alpha: &q.alpha,
                    gamma: &q.gamma,
                    psi: q.psi.to_string(),
                    elapsed,
                };
                serde_json::to_writer(&mut *w, &o)?;
                writeln!(w)?;
            }
            OutputFormat::Csv => {
                writeln!(
                    w,
                    "mode,k,N,count,truncated,cap_exceeded,zero_product,elapsed"
                )?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    r.mode, r.k, r.n, r.count, r.truncated, r.cap_exceeded, r.zero_product, elapsed
                )?;
            }
        }
        Ok(())
    })?;
    report_hypotheses(&report, a.strict, err)
}

#[derive(Serialize)]
struct PredictRow {
    #[serde(rename = "N")]
    n: u64,
    kind: PredictorKind,
    value: f64,
    outside_regime: bool,
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<i32> {
    let max_n = a.n.iter().copied().max().unwrap_or(0);
    let phi = if a.kind.contains(&PredictorKind::AbhPsi) {
        Some(euler_phi_sieve(max_n)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &kind in &a.kind {
        let k = if kind == PredictorKind::AbhPsi {
            1
        } else {
            a.k
        };
        let s = PredictorSeries::compute(kind, k, &a.psi, &a.n, phi.as_ref())?;
        for (&n, &value) in &s.partial_sums {
            rows.push(PredictRow {
                n,
                kind,
                value,
                outside_regime: s.outside_regime,
            });
        }
    }
    with_sink(&a.out, out, |w| {
        match a.format {
            OutputFormat::Csv => {
                let mut cw = csv::Writer::from_writer(w);
                for r in &rows {
                    cw.serialize(r)?;
                }
                cw.flush()?;
            }
            OutputFormat::Json => {
                for r in &rows {
                    serde_json::to_writer(&mut *w, r)?;
                    writeln!(w)?;
                }
            }
        }
        Ok(())
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct VolumeRow {
    k: usize,
    lambda: f64,
    #[serde(rename = "box")]
    box_kind: BoxKind,
    exact: f64,
    mc_estimate: f64,
    mc_stderr: f64,
    samples: u64,
    seed: u64,
}

fn cmd_volume(a: VolumeArgs, out: &mut dyn Write) -> Result<i32> {
    let region = ProductRegion::new(a.k, a.lambda, a.box_kind)?;
    let mc = volume_monte_carlo(&region, a.samples, a.seed)?;
    let row = VolumeRow {
        k: a.k,
        lambda: a.lambda,
        box_kind: a.box_kind,
        exact: region.volume_exact(),
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        samples: a.samples,
        seed: a.seed,
    };
    with_sink(&a.out, out, |w| {
        match a.format {
            OutputFormat::Csv => {
                let mut cw = csv::Writer::from_writer(w);
                cw.serialize(&row)?;
                cw.flush()?;
            }
            OutputFormat::Json => {
                serde_json::to_writer(&mut *w, &row)?;
                writeln!(w)?;
            }
        }
        Ok(())
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct BohrOutput {
    #[serde(rename = "N")]
    n: u64,
    count: u64,
    normalized_ratio: f64,
    expected: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count_hat: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g_density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dyadic_cell_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dyadic_exponents: Option<Vec<u32>>,
}

fn cmd_bohr(a: BohrArgs, out: &mut dyn Write) -> Result<i32> {
    let m = a.alpha.len();
    let gamma = if a.gamma.is_empty() {
        vec![Frac64::ZERO; m]
    } else {
        a.gamma.clone()
    };
    let delta = if a.delta.len() == 1 {
        vec![a.delta[0]; m]
    } else {
        a.delta.clone()
    };
    let spec = BohrSetSpec::new(a.n, a.alpha.clone(), gamma.clone(), delta)?;
    let density = bohr_density_report(&spec)?;
    let epsilon = match (a.epsilon, a.w, a.kappa) {
        (Some(e), _, _) => Some(e),
        (None, Some(w), Some(kappa)) => Some(epsilon_select(m + 1, w, kappa)?.epsilon),
        (None, None, None) => None,
        _ => return Err(invalid("--w and --kappa go together")),
    };
    let mut o = BohrOutput {
        n: a.n,
        count: density.count,
        normalized_ratio: density.normalized_ratio,
        expected: density.expected,
        members: if a.list {
            Some(enumerate_bohr(&spec)?)
        } else {
            None
        },
        epsilon,
        delta_range: None,
        count_hat: None,
        g_count: None,
        g_density: None,
        u_n: None,
        dyadic_cell_count: None,
        dyadic_exponents: None,
    };
    if let Some(eps) = epsilon {
        o.delta_range = Some(delta_range(a.n, eps));
        o.count_hat = Some(count_bohr_hat(&spec, eps)?);
        let g = restricted_set_g(&a.alpha, &gamma, eps, a.n)?;
        o.g_count = Some(g.len());
        o.g_density = Some(g.density());
        if a.n >= 4 {
            let cells = dyadic_cells(a.n, m + 1, eps)?;
            o.dyadic_cell_count = Some(cells.count);
            o.dyadic_exponents = Some(cells.exponents);
        }
        if let Some(psi) = &a.psi {
            let phi = euler_phi_sieve(a.n)?;
            o.u_n = Some(u_n_sum(&a.alpha, &gamma, psi, eps, a.n, &phi)?);
        }
    } else if a.psi.is_some() {
        return Err(invalid("U_N needs --epsilon or --w/--kappa"));
    }
    with_sink(&a.out, out, |w| {
        serde_json::to_writer(&mut *w, &o)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(0)
}

fn cmd_exponent(a: ExponentArgs, out: &mut dyn Write) -> Result<i32> {
    let mut meta = Metadata::standard(None);
    let trail = if a.littlewood {
        if a.alpha.len() != 2 {
            return Err(invalid("--littlewood takes exactly two coordinates"));
        }
        littlewood_records(a.alpha[0], a.alpha[1], a.n)?
    } else {
        let e = estimate_mult_exponent(&a.alpha, a.n, a.n_min)?;
        meta.push("exponent_estimate", e.value);
        meta.push("argmax", e.argmax);
        meta.push("zero_product", e.zero_product);
        meta.push("n_min", e.n_min);
        e.trail
    };
    meta.push(
        "metric",
        serde_json::to_string(&trail.metric)?.trim_matches('"'),
    );
    meta.push("N", a.n);
    with_sink(&a.out, out, |w| {
        meta.write_comments(w)?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["n", "value"])?;
        for (n, v) in &trail.records {
            cw.write_record([n.to_string(), v.to_string()])?;
        }
        cw.flush()?;
        Ok(())
    })?;
    Ok(0)
}

fn cmd_experiment(a: ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut plan = ExperimentPlan::new(a.theorem, a.k, a.psi, a.checkpoints, a.trials, a.seed);
    plan.gamma = a.gamma;
    plan.kappa = a.kappa;
    plan.predictor = a.predictor;
    if !a.fibre.is_empty() {
        plan.fixed_fibre = Some(Fibre {
            alpha: a.fibre,
            w: a.w,
        });
    }
    if let Some(k) = plan.kappa {
        plan.psi = plan.psi.clone().with_power_bound(k);
    }
    let outcome = run_plan(&plan)?;
    let mut meta = Metadata::standard(Some(plan.seed));
    meta.push("psi", &plan.psi);
    meta.push("trials", plan.trials);
    with_sink(&a.out, out, |w| write_outcome(&outcome, &meta, a.format, w))?;
    for wmsg in &outcome.warnings {
        writeln!(err, "warning: {wmsg}")?;
    }
    Ok(if a.strict && outcome.hypotheses_violated() {
        EXIT_HYPOTHESIS
    } else {
        0
    })
}

fn cmd_selfcheck(a: SelfcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let results = run_selfcheck(a.seed);
    let mut ok = true;
    for r in &results {
        ok &= r.passed;
        writeln!(
            out,
            "{} {} ({})",
            if r.passed { "ok  " } else { "FAIL" },
            r.name,
            r.detail
        )?;
    }
    Ok(if ok { 0 } else { 1 })
}

impl From<clap::Error> for Error {
    fn from(e: clap::Error) -> Self {
        invalid(e.to_string())
    }
}
