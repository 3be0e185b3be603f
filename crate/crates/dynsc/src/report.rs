//! JSON run reports and the aggregate CSV.

use std::fmt::Write as _;

use dynsc_core::evaluate::{EvalReport, TheoremDiagnostics};
use dynsc_core::{BlockEstimate, RunReport};
use serde::Serialize;

use crate::config::AlgorithmName;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub algorithm: AlgorithmName,
    pub n: usize,
    pub layers: usize,
    pub k: usize,
    pub dbar: f64,
    pub threshold: f64,
    pub n_prime: usize,
    pub n_double_prime: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
    pub eigen_cycles: usize,
    pub next_abs_eigenvalue: Option<f64>,
    pub boundary_degenerate: bool,
    pub objective: f64,
    pub repairs: usize,
}

impl StageReport {
    pub fn new(algorithm: AlgorithmName, r: &RunReport) -> Self {
        Self {
            algorithm,
            n: r.n,
            layers: r.layers,
            k: r.k,
            dbar: r.dbar,
            threshold: r.threshold,
            n_prime: r.n_prime,
            n_double_prime: r.n_double_prime,
            eigenvalues: r.eigenvalues.clone(),
            eigen_residuals: r.eigen_residuals.clone(),
            eigen_cycles: r.eigen_cycles,
            next_abs_eigenvalue: r.next_abs_eigenvalue,
            boundary_degenerate: r.boundary_degenerate,
            objective: r.objective,
            repairs: r.repairs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalJson {
    pub overall: f64,
    pub per_community: Vec<f64>,
    pub permutation: Vec<usize>,
}

impl From<&EvalReport> for EvalJson {
    fn from(e: &EvalReport) -> Self {
        Self {
            overall: e.overall,
            per_community: e.per_community.clone(),
            permutation: e.permutation.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsJson {
    pub alpha: f64,
    pub lambda: f64,
    pub gamma_n: f64,
    pub spectral_dev: f64,
    pub tau: Option<Vec<f64>>,
    pub n_prime: usize,
    pub n_prime_min: usize,
    pub p_norm: f64,
}

impl From<&TheoremDiagnostics> for DiagnosticsJson {
    fn from(d: &TheoremDiagnostics) -> Self {
        Self {
            alpha: d.alpha,
            lambda: d.lambda,
            gamma_n: d.gamma_n,
            spectral_dev: d.spectral_dev,
            tau: d.tau.clone(),
            n_prime: d.n_prime,
            n_prime_min: d.n_prime_min,
            p_norm: d.p_norm,
        }
    }
}

/// `pi` and one `k x k` matrix per layer; `null` marks undefined blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatesJson {
    pub pi: Vec<f64>,
    pub b_stack: Vec<Vec<Vec<Option<f64>>>>,
}

impl EstimatesJson {
    pub fn new(pi: Vec<f64>, b: &[BlockEstimate]) -> Self {
        Self {
            pi,
            b_stack: b.iter().map(BlockEstimate::rows).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunJson {
    pub run: usize,
    pub n: usize,
    pub t: usize,
    pub seed_index: Option<usize>,
    pub algorithm: AlgorithmName,
    pub status: &'static str,
    pub error: Option<String>,
    pub stages: Option<StageReport>,
    pub evaluation: Option<EvalJson>,
    pub diagnostics: Option<DiagnosticsJson>,
    pub estimates: Option<EstimatesJson>,
    pub labels: Option<Vec<usize>>,
}

/// Column order of the aggregate CSV (schema version 1).
pub const CSV_COLUMNS: [&str; 22] = [
    "run",
    "n",
    "t",
    "seed_index",
    "algorithm",
    "status",
    "overall_error",
    "n_prime",
    "n_double_prime",
    "dbar",
    "threshold",
    "abs_eig_k",
    "abs_eig_k1",
    "boundary_degenerate",
    "objective",
    "eigen_cycles",
    "spectral_dev",
    "gamma_n",
    "alpha",
    "lambda",
    "tau_max",
    "error",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn csv_row(run: &RunJson) -> String {
    let s = run.stages.as_ref();
    let d = run.diagnostics.as_ref();
    let fields = [
        run.run.to_string(),
        run.n.to_string(),
        run.t.to_string(),
        opt(run.seed_index),
        run.algorithm.as_str().to_string(),
        run.status.to_string(),
        opt(run.evaluation.as_ref().map(|e| e.overall)),
        opt(s.map(|s| s.n_prime)),
        opt(s.and_then(|s| s.n_double_prime)),
        opt(s.map(|s| s.dbar)),
        opt(s.map(|s| s.threshold)),
        opt(s.and_then(|s| s.eigenvalues.last().map(|v| v.abs()))),
        opt(s.and_then(|s| s.next_abs_eigenvalue)),
        opt(s.map(|s| s.boundary_degenerate)),
        opt(s.map(|s| s.objective)),
        opt(s.map(|s| s.eigen_cycles)),
        opt(d.map(|d| d.spectral_dev)),
        opt(d.map(|d| d.gamma_n)),
        opt(d.map(|d| d.alpha)),
        opt(d.map(|d| d.lambda)),
        opt(d.and_then(|d| d.tau.as_ref().map(|t| t.iter().copied().fold(0.0, f64::max)))),
        quote(run.error.as_deref().unwrap_or("")),
    ];
    fields.join(",")
}

/// Header plus one row per run, each line newline-terminated.
pub fn aggregate_csv<'a>(runs: impl IntoIterator<Item = &'a RunJson>) -> String {
    let mut out = csv_header();
    out.push('\n');
    for run in runs {
        let _ = writeln!(out, "{}", csv_row(run));
    }
    out
}
