//! `elbowkit`: elbow detection and order-selection experiments from the
//! command line.
//!
//! Exit codes: 0 on success, 1 on I/O or runtime failures, 2 on invalid
//! input (unparsable curve files, rejected curves, bad flag combinations).
//! On success stdout carries a single JSON document; human-readable tables
//! go to stderr.

mod curve_file;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use elbowkit::bench::{run_experiment, ExperimentConfig, ExperimentReport, Method, Scenario, DEFAULT_RUNS};
use elbowkit::curve::default_tolerance;
use elbowkit::synth::{ArScenario, ArWindow, CoefficientList, MixtureScenario, PolyScenario};
use elbowkit::{elbow, validate, Criterion, ElbowResult, ErrorCurve};

use curve_file::CurveFile;

/// Worker cap read from the environment.
const THREADS_ENV: &str = "ELBOWKIT_THREADS";

#[derive(Parser)]
#[command(name = "elbowkit", version, about = "Automatic elbow detection over error curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick k* on a curve file with one criterion
    Detect(DetectArgs),
    /// Pick k* with UAED, BIC, AIC and HQIC side by side
    Compare(CompareArgs),
    /// Run a Monte-Carlo order-selection experiment
    Experiment(ExperimentArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CriterionName {
    Uaed,
    Bic,
    Aic,
    Hqic,
    /// Fixed penalty slope given by --lambda
    Lambda,
}

#[derive(Args)]
struct CurveArgs {
    /// Curve file with a `k,value` header
    path: PathBuf,
    /// Monotonicity tolerance; defaults to 1e-9 of the curve's range
    #[arg(long)]
    tol: Option<f64>,
    /// Write the validated curve to this file
    #[arg(long)]
    dump_curve: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long, value_enum, default_value_t = CriterionName::Uaed)]
    criterion: CriterionName,
    /// Sample size for BIC and HQIC
    #[arg(long)]
    n: Option<usize>,
    /// Penalty slope for `--criterion lambda`
    #[arg(long)]
    lambda: Option<f64>,
    /// Weight in [0, 1] for the generalized UAED slope
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Sample size for BIC and HQIC
    #[arg(long)]
    n: usize,
    /// Also report the generalized UAED with this weight
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Ar,
    Poly,
    Cluster,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum WindowName {
    ForwardBackward,
    Common,
    ZeroPadded,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CoefficientName {
    Formula,
    Listed,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Monte-Carlo replications [default: 1000, or 20 for cluster]
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `<kind>_report.json` and `<kind>_histogram.csv`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, capped by ELBOWKIT_THREADS
    #[arg(long)]
    threads: Option<usize>,
    /// Methods to evaluate
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CriterionName::Uaed, CriterionName::Bic, CriterionName::Aic, CriterionName::Hqic])]
    methods: Vec<CriterionName>,
    /// Penalty slope for the `lambda` method
    #[arg(long)]
    lambda: Option<f64>,
    /// AR: true order
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// AR: noise standard deviation
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// AR: series length
    #[arg(long = "T", default_value_t = 200)]
    length: usize,
    /// Largest candidate index [default: 100 for ar, 10 for poly, 50 for cluster]
    #[arg(long)]
    max_index: Option<usize>,
    #[arg(long, value_enum, default_value_t = WindowName::ForwardBackward)]
    ar_window: WindowName,
    #[arg(long, value_enum, default_value_t = CoefficientName::Formula)]
    coefficients: CoefficientName,
    /// poly: sample count
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// poly: inputs are drawn from [-w, w]
    #[arg(long, default_value_t = 5.0)]
    input_half_width: f64,
    /// cluster: point count
    #[arg(long, default_value_t = 2500)]
    points: usize,
    /// cluster: k-means restarts averaged per cluster count
    #[arg(long, default_value_t = 20)]
    restarts: usize,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Invalid(m) => m,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Detect(a) => detect(&a),
        Command::Compare(a) => compare(&a),
        Command::Experiment(a) => experiment(&a),
    };
    match outcome {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_curve(args: &CurveArgs) -> Result<ErrorCurve, Failure> {
    let text = fs::read_to_string(&args.path)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.path.display())))?;
    let file = CurveFile::parse(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", args.path.display())))?;
    let tol = args.tol.unwrap_or_else(|| default_tolerance(&file.values));
    let curve = validate(&file.values, tol).map_err(invalid)?.with_offset(file.k_min);
    if let Some(out) = &args.dump_curve {
        write_file(out, &CurveFile::render(&curve))?;
    }
    Ok(curve)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn need_n(n: Option<usize>, name: &str) -> Result<usize, Failure> {
    n.ok_or_else(|| Failure::Invalid(format!("--criterion {name} needs --n")))
}

fn detect_criterion(a: &DetectArgs) -> Result<Criterion, Failure> {
    if a.alpha.is_some() && a.criterion != CriterionName::Uaed {
        return Err(Failure::Invalid("--alpha only applies to --criterion uaed".into()));
    }
    if a.lambda.is_some() && a.criterion != CriterionName::Lambda {
        return Err(Failure::Invalid("--lambda needs --criterion lambda".into()));
    }
    Ok(match a.criterion {
        CriterionName::Uaed => match a.alpha {
            Some(alpha) => Criterion::AlphaUaed { alpha },
            None => Criterion::Uaed,
        },
        CriterionName::Bic => Criterion::Bic { n_data: need_n(a.n, "bic")? },
        CriterionName::Aic => Criterion::Aic,
        CriterionName::Hqic => Criterion::Hqic { n_data: need_n(a.n, "hqic")? },
        CriterionName::Lambda => Criterion::CustomLambda {
            lambda: a.lambda.ok_or_else(|| Failure::Invalid("--criterion lambda needs --lambda".into()))?,
        },
    })
}

#[derive(Serialize)]
struct Decision {
    criterion: Criterion,
    name: String,
    k_star: usize,
    ties: Vec<usize>,
    tied: bool,
    /// `null` when the slope is infinite.
    lambda: f64,
    costs: Vec<f64>,
}

impl Decision {
    fn new(criterion: Criterion, r: ElbowResult) -> Self {
        Self {
            criterion,
            name: criterion.to_string(),
            k_star: r.reported_k_star(),
            ties: r.reported_ties(),
            tied: r.is_tied(),
            lambda: r.lambda_used,
            costs: r.costs,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn detect(a: &DetectArgs) -> Result<String, Failure> {
    let criterion = detect_criterion(a)?;
    let curve = load_curve(&a.curve)?;
    let r = elbow(&curve.normalize(), &criterion).map_err(invalid)?;
    Ok(to_json(&Decision::new(criterion, r)))
}

fn compare(a: &CompareArgs) -> Result<String, Failure> {
    let curve = load_curve(&a.curve)?.normalize();
    let mut criteria = vec![
        Criterion::Uaed,
        Criterion::Bic { n_data: a.n },
        Criterion::Aic,
        Criterion::Hqic { n_data: a.n },
    ];
    if let Some(alpha) = a.alpha {
        criteria.push(Criterion::AlphaUaed { alpha });
    }
    let rows = criteria
        .into_iter()
        .map(|c| elbow(&curve, &c).map(|r| Decision::new(c, r)).map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;
    eprintln!("{:<24} {:>14} {:>6}  tie", "criterion", "lambda", "k*");
    for r in &rows {
        eprintln!(
            "{:<24} {:>14.6} {:>6}  {}",
            r.name,
            r.lambda,
            r.k_star,
            if r.tied { "yes" } else { "no" }
        );
    }
    Ok(to_json(&json!({ "k_max": curve.k_max() + curve.offset(), "rows": rows })))
}

fn thread_count(requested: Option<usize>) -> Result<Option<usize>, Failure> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| Failure::Invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => None,
    };
    Ok(match (requested, cap) {
        (Some(r), Some(c)) => Some(r.min(c)),
        (r, c) => r.or(c),
    })
}

fn scenario(a: &ExperimentArgs) -> Scenario {
    match a.kind {
        Kind::Ar => {
            let mut s = ArScenario::new(a.order, a.sigma, a.length);
            s.max_order = a.max_index.unwrap_or(ArScenario::DEFAULT_MAX_ORDER);
            s.window = match a.ar_window {
                WindowName::ForwardBackward => ArWindow::ForwardBackward,
                WindowName::Common => ArWindow::Common,
                WindowName::ZeroPadded => ArWindow::ZeroPadded,
            };
            s.coefficients = match a.coefficients {
                CoefficientName::Formula => CoefficientList::Formula,
                CoefficientName::Listed => CoefficientList::Listed,
            };
            Scenario::Ar(s)
        }
        Kind::Poly => {
            let d = PolyScenario::default();
            Scenario::Poly(PolyScenario {
                samples: a.samples,
                input_half_width: a.input_half_width,
                max_order: a.max_index.unwrap_or(d.max_order),
                ..d
            })
        }
        Kind::Cluster => {
            let d = MixtureScenario::default();
            Scenario::Cluster(MixtureScenario {
                points: a.points,
                restarts: a.restarts,
                max_index: a.max_index.unwrap_or(d.max_index),
                ..d
            })
        }
    }
}

fn experiment(a: &ExperimentArgs) -> Result<String, Failure> {
    let mut methods = Vec::with_capacity(a.methods.len());
    for m in &a.methods {
        methods.push(match m {
            CriterionName::Uaed => Method::Uaed,
            CriterionName::Bic => Method::Bic,
            CriterionName::Aic => Method::Aic,
            CriterionName::Hqic => Method::Hqic,
            CriterionName::Lambda => Method::CustomLambda {
                lambda: a.lambda.ok_or_else(|| Failure::Invalid("the lambda method needs --lambda".into()))?,
            },
        });
    }
    if a.lambda.is_some() && !a.methods.contains(&CriterionName::Lambda) {
        return Err(Failure::Invalid("--lambda needs the lambda method".into()));
    }
    let runs = a.runs.unwrap_or(if a.kind == Kind::Cluster { 20 } else { DEFAULT_RUNS });
    let mut cfg = ExperimentConfig::new(scenario(a), runs, a.seed);
    cfg.methods = methods;
    cfg.threads = thread_count(a.threads)?;
    cfg.validate().map_err(invalid)?;
    let report = run_experiment(&cfg).map_err(|e| Failure::Io(e.to_string()))?;
    eprint!("{}", report.summary_table());
    if a.kind == Kind::Cluster {
        for m in &report.methods {
            eprintln!("{}: {} clusters chosen most often", m.label, m.modal_choice + 1);
        }
    }
    if let Some(dir) = &a.out {
        write_outputs(dir, cfg.scenario.kind(), &report)?;
    }
    Ok(report.to_json())
}

fn write_outputs(dir: &Path, kind: &str, report: &ExperimentReport) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join(format!("{kind}_report.json")), &(report.to_json() + "\n"))?;
    write_file(&dir.join(format!("{kind}_histogram.csv")), &report.histogram_csv())
}
