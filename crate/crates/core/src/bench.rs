//! Monte-Carlo harness: decision histograms, correct-decision rates and
//! ranking labels.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::seed::derive_seed;

use crate::curve::ErrorCurve;
use crate::detect::{elbow, Criterion, DetectError};
use crate::synth::{
    ar_v_curve_with, cluster_v_curve, gen_ar, gen_poly, poly_v_curve, sample_mixture, ArScenario,
    MixtureScenario, PolyScenario, SynthError,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Default number of Monte-Carlo runs.
pub const DEFAULT_RUNS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Ar(ArScenario),
    Poly(PolyScenario),
    Cluster(MixtureScenario),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Ar(_) => "ar",
            Scenario::Poly(_) => "poly",
            Scenario::Cluster(_) => "cluster",
        }
    }

    /// Index of the generating model on the `k` axis.
    pub fn true_index(&self) -> usize {
        match self {
            Scenario::Ar(s) => s.true_order,
            Scenario::Poly(s) => s.true_order(),
            Scenario::Cluster(s) => s.components.len() - 1,
        }
    }

    pub fn max_index(&self) -> usize {
        match self {
            Scenario::Ar(s) => s.max_order,
            Scenario::Poly(s) => s.max_order,
            Scenario::Cluster(s) => s.max_index,
        }
    }

    /// Sample size plugged into `log N` penalties.
    pub fn n_data(&self) -> usize {
        match self {
            Scenario::Ar(s) => s.length,
            Scenario::Poly(s) => s.samples,
            Scenario::Cluster(s) => s.points,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        match self {
            Scenario::Ar(s) => s.validate(),
            Scenario::Poly(s) => s.validate(),
            Scenario::Cluster(s) => s.validate(),
        }
    }

    /// Generates one dataset and builds its error curve.
    pub fn curve(&self, seed: u64) -> Result<ErrorCurve, SynthError> {
        match self {
            Scenario::Ar(s) => ar_v_curve_with(&gen_ar(s, seed)?, s.max_order, s.window),
            Scenario::Poly(s) => poly_v_curve(&gen_poly(s, seed)?, s.max_order),
            Scenario::Cluster(s) => {
                let points = sample_mixture(s, seed)?;
                cluster_v_curve(&points, s.max_index, s.restarts, derive_seed(seed, 1))
            }
        }
    }
}

/// A decision rule as configured for an experiment; sample sizes are
/// filled in from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Uaed,
    Bic,
    Aic,
    Hqic,
    AlphaUaed { alpha: f64 },
    CustomLambda { lambda: f64 },
}

impl Method {
    pub const CLASSICAL: [Method; 4] = [Method::Uaed, Method::Bic, Method::Aic, Method::Hqic];

    pub fn criterion(&self, n_data: usize) -> Criterion {
        match *self {
            Method::Uaed => Criterion::Uaed,
            Method::Bic => Criterion::Bic { n_data },
            Method::Aic => Criterion::Aic,
            Method::Hqic => Criterion::Hqic { n_data },
            Method::AlphaUaed { alpha } => Criterion::AlphaUaed { alpha },
            Method::CustomLambda { lambda } => Criterion::CustomLambda { lambda },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Method::Uaed => "UAED".into(),
            Method::Bic => "BIC".into(),
            Method::Aic => "AIC".into(),
            Method::Hqic => "HQIC".into(),
            Method::AlphaUaed { alpha } => format!("UAED(alpha={alpha})"),
            Method::CustomLambda { lambda } => format!("lambda={lambda}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub base_seed: u64,
    /// Worker cap; `None` uses the rayon default. Not part of the report.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, runs: usize, base_seed: u64) -> Self {
        Self { scenario, methods: Method::CLASSICAL.to_vec(), runs, base_seed, threads: None }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.runs == 0 {
            return Err(BenchError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::InvalidConfig("method list is empty".into()));
        }
        if self.threads == Some(0) {
            return Err(BenchError::InvalidConfig("thread count must be at least 1".into()));
        }
        self.scenario.validate().map_err(BenchError::Scenario)
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    Scenario(SynthError),
    #[error("run {run} (seed {seed}) failed: {source}")]
    Generation {
        run: usize,
        seed: u64,
        #[source]
        source: SynthError,
    },
    #[error("run {run} (seed {seed}) failed for {method}: {source}")]
    Decision {
        run: usize,
        seed: u64,
        method: String,
        #[source]
        source: DetectError,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Qualitative verdict attached to a correct-decision rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ranking {
    Best,
    Excellent,
    Good,
    Fair,
    Poor,
    Bad,
    #[serde(rename = "Very bad")]
    VeryBad,
}

impl Ranking {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ranking::Best => "Best",
            Ranking::Excellent => "Excellent",
            Ranking::Good => "Good",
            Ranking::Fair => "Fair",
            Ranking::Poor => "Poor",
            Ranking::Bad => "Bad",
            Ranking::VeryBad => "Very bad",
        }
    }
}

impl std::fmt::Display for Ranking {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn ranking_label(p_a: f64, is_best: bool) -> Ranking {
    if is_best {
        Ranking::Best
    } else if p_a >= 0.95 {
        Ranking::Excellent
    } else if p_a >= 0.80 {
        Ranking::Good
    } else if p_a >= 0.50 {
        Ranking::Fair
    } else if p_a >= 0.20 {
        Ranking::Poor
    } else if p_a >= 0.10 {
        Ranking::Bad
    } else {
        Ranking::VeryBad
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub label: String,
    /// Decisions per index `0..=max_index`.
    pub histogram: Vec<usize>,
    pub p_a: f64,
    pub ranking: Ranking,
    pub is_best: bool,
    /// Most frequent decision; the smallest index on ties.
    pub modal_choice: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub true_index: usize,
    pub max_index: usize,
    pub methods: Vec<MethodReport>,
    pub duration_ms: u64,
}

impl ExperimentReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn p_a(&self, method: Method) -> Option<f64> {
        self.method(method).map(|m| m.p_a)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-clock field zeroed, for reproducibility checks.
    pub fn to_canonical_json(&self) -> String {
        ExperimentReport { duration_ms: 0, ..self.clone() }.to_json()
    }

    /// `k,<method>,…` with one row per index.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("k");
        for m in &self.methods {
            out.push(',');
            out.push_str(&m.label);
        }
        out.push('\n');
        for k in 0..=self.max_index {
            let _ = write!(out, "{k}");
            for m in &self.methods {
                let _ = write!(out, ",{}", m.histogram[k]);
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_table(&self) -> String {
        let width = self.methods.iter().map(|m| m.label.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "{} experiment, true k = {}, {} runs\n{:<width$}  {:>6}  {:>5}  {}\n",
            self.config.scenario.kind(),
            self.true_index,
            self.config.runs,
            "method",
            "p_A",
            "mode",
            "ranking",
        );
        for m in &self.methods {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.3}  {:>5}  {}",
                m.label, m.p_a, m.modal_choice, m.ranking
            );
        }
        out
    }
}

/// Runs every Monte-Carlo replication and aggregates the decisions.
///
/// Run `r` uses seed `derive_seed(base_seed, r)`. The first failing run in
/// index order aborts the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| BenchError::ThreadPool(e.to_string()))?;

    let n_data = cfg.scenario.n_data();
    let criteria: Vec<Criterion> = cfg.methods.iter().map(|m| m.criterion(n_data)).collect();
    let outcomes: Vec<Result<Vec<usize>, BenchError>> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| decide(cfg, &criteria, run))
            .collect()
    });

    let max_index = cfg.scenario.max_index();
    let mut histograms = vec![vec![0usize; max_index + 1]; cfg.methods.len()];
    for outcome in outcomes {
        for (h, k) in histograms.iter_mut().zip(outcome?) {
            h[k] += 1;
        }
    }

    let true_index = cfg.scenario.true_index();
    let hits: Vec<usize> = histograms.iter().map(|h| h.get(true_index).copied().unwrap_or(0)).collect();
    let best = hits.iter().copied().max().unwrap_or(0);
    let methods = cfg
        .methods
        .iter()
        .zip(histograms)
        .zip(&hits)
        .map(|((&method, histogram), &h)| {
            let p_a = h as f64 / cfg.runs as f64;
            let is_best = h == best;
            let modal_choice = histogram
                .iter()
                .enumerate()
                .fold((0, 0), |acc, (k, &c)| if c > acc.1 { (k, c) } else { acc })
                .0;
            MethodReport {
                method,
                label: method.label(),
                histogram,
                p_a,
                ranking: ranking_label(p_a, is_best),
                is_best,
                modal_choice,
            }
        })
        .collect();

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        true_index,
        max_index,
        methods,
        duration_ms: started.elapsed().as_millis() as u64,
    })
}

fn decide(cfg: &ExperimentConfig, criteria: &[Criterion], run: usize) -> Result<Vec<usize>, BenchError> {
    let seed = derive_seed(cfg.base_seed, run as u64);
    let curve = cfg
        .scenario
        .curve(seed)
        .map_err(|source| BenchError::Generation { run, seed, source })?
        .normalize();
    criteria
        .iter()
        .zip(&cfg.methods)
        .map(|(c, m)| {
            elbow(&curve, c)
                .map(|r| r.reported_k_star())
                .map_err(|source| BenchError::Decision { run, seed, method: m.label(), source })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_ar() -> Scenario {
        let mut s = ArScenario::new(3, 0.5, 200);
        s.max_order = 20;
        Scenario::Ar(s)
    }

    #[test]
    fn golden_seeds() {
        assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(7, 3), 0x953A_EB70_673E_29CB);
        assert_eq!(derive_seed(u64::MAX, 1000), 0xB758_F714_4A7E_200A);
    }

    #[test]
    fn labels() {
        assert_eq!(ranking_label(0.97, false), Ranking::Excellent);
        assert_eq!(ranking_label(0.95, false), Ranking::Excellent);
        assert_eq!(ranking_label(0.82, false), Ranking::Good);
        assert_eq!(ranking_label(0.5, false), Ranking::Fair);
        assert_eq!(ranking_label(0.2, false), Ranking::Poor);
        assert_eq!(ranking_label(0.13, false), Ranking::Bad);
        assert_eq!(ranking_label(0.0, false), Ranking::VeryBad);
        assert_eq!(ranking_label(0.0, true), Ranking::Best);
        assert_eq!(Ranking::VeryBad.to_string(), "Very bad");
    }

    #[test]
    fn single_run_is_a_spike() {
        let report = run_experiment(&ExperimentConfig::new(small_ar(), 1, 3)).unwrap();
        for m in &report.methods {
            assert_eq!(m.histogram.iter().sum::<usize>(), 1);
            assert!(m.p_a == 0.0 || m.p_a == 1.0);
            assert_eq!(m.histogram[m.modal_choice], 1);
        }
    }

    #[test]
    fn report_invariants() {
        let report = run_experiment(&ExperimentConfig::new(small_ar(), 30, 11)).unwrap();
        assert_eq!(report.schema_version, SCHEMA_VERSION);
        let best = report.methods.iter().map(|m| m.p_a).fold(0.0, f64::max);
        for m in &report.methods {
            assert_eq!(m.histogram.len(), 21);
            assert_eq!(m.histogram.iter().sum::<usize>(), 30);
            assert_eq!(m.p_a, m.histogram[3] as f64 / 30.0);
            assert_eq!(m.is_best, m.p_a == best);
            assert_eq!(m.is_best, m.ranking == Ranking::Best);
        }
        assert!(report.methods.iter().any(|m| m.is_best));
    }

    #[test]
    fn csv_and_table_layout() {
        let report = run_experiment(&ExperimentConfig::new(small_ar(), 5, 1)).unwrap();
        let csv = report.histogram_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,UAED,BIC,AIC,HQIC");
        assert_eq!(lines.len(), 22);
        assert!(lines[4].starts_with("3,"));
        let table = report.summary_table();
        assert!(table.contains("UAED") && table.contains("p_A"));
    }

    #[test]
    fn json_round_trips() {
        let report = run_experiment(&ExperimentConfig::new(small_ar(), 4, 2)).unwrap();
        let back: ExperimentReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(value["config"]["scenario"]["kind"], "ar");
        assert_eq!(value["methods"][0]["method"]["name"], "uaed");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig::new(small_ar(), 0, 0);
        assert!(matches!(run_experiment(&cfg), Err(BenchError::InvalidConfig(_))));
        cfg.runs = 1;
        cfg.methods.clear();
        assert!(matches!(run_experiment(&cfg), Err(BenchError::InvalidConfig(_))));
    }

    #[test]
    fn failures_report_the_seed() {
        let mut s = ArScenario::new(3, 1.0, 300);
        s.max_order = 5;
        s.sigma_eps = 1.0;
        let mut cfg = ExperimentConfig::new(Scenario::Ar(s), 3, 5);
        cfg.methods = vec![Method::AlphaUaed { alpha: 2.0 }];
        match run_experiment(&cfg) {
            Err(BenchError::Decision { run, seed, .. }) => {
                assert_eq!(run, 0);
                assert_eq!(seed, derive_seed(5, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn thread_count_does_not_change_reports(seed in any::<u64>(), threads in 1usize..6) {
            let base = ExperimentConfig::new(small_ar(), 12, seed);
            let a = run_experiment(&base.clone().with_threads(1)).unwrap();
            let b = run_experiment(&base.with_threads(threads)).unwrap();
            prop_assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        }
    }
}
