//! Running configs: simulation grids, detection on files, scree tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dynsc_core::eigen::{scree_values, EigenOptions};
use dynsc_core::estimate::{estimate_b, estimate_pi};
use dynsc_core::evaluate::{misclassification, theorem_diagnostics};
use dynsc_core::graph::truncate_with_delta;
use dynsc_core::model::{normalize_psi, sample_memberships, sample_raw_degree_weights, sample_stack};
use dynsc_core::{aggregate_sum, derive_seed, detect, GroundTruth, LayerStack, ModelParams};
use rayon::prelude::*;

use crate::config::{AlgorithmName, Config, Mode};
use crate::error::{Error, Result};
use crate::io;
use crate::report::{aggregate_csv, DiagnosticsJson, EstimatesJson, EvalJson, RunJson, StageReport};

/// One point of the simulation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub run: usize,
    pub n: usize,
    pub t: usize,
    pub seed_index: usize,
    pub algorithm: AlgorithmName,
}

/// Cells in `n`, `t`, seed, algorithm order.
pub fn grid_cells(cfg: &Config) -> Vec<Cell> {
    let Some(grid) = &cfg.grid else {
        return Vec::new();
    };
    let algorithms = cfg.algorithms();
    let mut cells = Vec::new();
    for &n in &grid.n {
        for &t in &grid.t {
            for seed_index in 0..grid.seeds {
                for &algorithm in &algorithms {
                    cells.push(Cell {
                        run: cells.len(),
                        n,
                        t,
                        seed_index,
                        algorithm,
                    });
                }
            }
        }
    }
    cells
}

/// A sampled instance with everything needed to score it.
#[derive(Clone, Debug)]
pub struct Instance {
    pub params: ModelParams,
    pub truth: GroundTruth,
    pub stack: LayerStack,
    /// Seed for the pipeline's own randomness.
    pub pipeline_seed: u64,
}

/// The instance for `(n, seed_index)` with `t` layers. The labels, degree
/// weights and each layer depend only on `(seed, n, seed_index)`, so the
/// first `t` layers agree across every `t` and every algorithm.
pub fn simulate_instance(cfg: &Config, n: usize, t: usize, seed_index: usize) -> Result<Instance> {
    let data_seed = derive_seed(cfg.seed, &[n as u64, seed_index as u64]);
    let mut params = cfg.params_for(n, t)?;
    let truth = sample_memberships(n, &params.pi, data_seed)?;
    if let Some(w) = cfg.degree_weights {
        let raw = sample_raw_degree_weights(n, w.low, w.high, data_seed);
        params.psi = Some(normalize_psi(&raw, &truth)?);
    }
    let stack = sample_stack(&params, &truth, data_seed)?;
    Ok(Instance {
        params,
        truth,
        stack,
        pipeline_seed: derive_seed(data_seed, &[1]),
    })
}

fn failed(cell: &Cell, error: String) -> RunJson {
    RunJson {
        run: cell.run,
        n: cell.n,
        t: cell.t,
        seed_index: Some(cell.seed_index),
        algorithm: cell.algorithm,
        status: "failed",
        error: Some(error),
        stages: None,
        evaluation: None,
        diagnostics: None,
        estimates: None,
        labels: None,
    }
}

/// Samples, detects, scores. Failures become a `failed` record.
pub fn run_cell(cfg: &Config, cell: &Cell) -> RunJson {
    let inst = match simulate_instance(cfg, cell.n, cell.t, cell.seed_index) {
        Ok(i) => i,
        Err(e) => return failed(cell, format!("sampling: {e}")),
    };
    let opts = cfg.solver.pipeline_options(inst.pipeline_seed);
    let k = inst.params.k;
    let det = match detect(&inst.stack, k, cell.algorithm.algorithm(), &opts) {
        Ok(d) => d,
        Err(e) => return failed(cell, format!("pipeline: {e}")),
    };
    let eval = misclassification(&inst.truth.membership(), &det.membership)
        .expect("labels cover every vertex");
    let diagnostics = if cfg.diagnostics {
        let sub = aggregate_sum(&inst.stack).induced(&det.kept);
        match theorem_diagnostics(
            &inst.truth,
            &inst.params.b_stack,
            inst.params.psi.as_deref(),
            &det.kept,
            &sub,
        ) {
            Ok(d) => Some(DiagnosticsJson::from(&d)),
            Err(e) => return failed(cell, format!("diagnostics: {e}")),
        }
    } else {
        None
    };
    RunJson {
        run: cell.run,
        n: cell.n,
        t: cell.t,
        seed_index: Some(cell.seed_index),
        algorithm: cell.algorithm,
        status: "ok",
        error: None,
        stages: Some(StageReport::new(cell.algorithm, &det.report)),
        evaluation: Some(EvalJson::from(&eval)),
        diagnostics,
        estimates: Some(EstimatesJson::new(
            estimate_pi(&det.membership),
            &estimate_b(&inst.stack, &det.membership),
        )),
        labels: Some(det.membership.labels().to_vec()),
    }
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

/// Runs every grid cell on `workers` threads; output is in grid order.
pub fn run_grid(cfg: &Config, workers: usize) -> Vec<RunJson> {
    let cells = grid_cells(cfg);
    pool(workers).install(|| cells.par_iter().map(|c| run_cell(cfg, c)).collect())
}

/// What a finished invocation wrote.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    pub runs: usize,
    pub failed: usize,
    pub outputs: Vec<PathBuf>,
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn to_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))
}

/// Executes `cfg` according to its mode, writing into `out_dir`.
pub fn run(cfg: &Config, out_dir: &Path, workers: usize) -> Result<Summary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match cfg.mode {
        Mode::Simulate => run_simulation(cfg, out_dir, workers),
        Mode::Detect => run_detection(cfg, out_dir),
        Mode::Scree => run_scree(cfg, out_dir),
    }
}

/// Writes `runs/run_<i>.json` per cell and `aggregate.csv`.
pub fn run_simulation(cfg: &Config, out_dir: &Path, workers: usize) -> Result<Summary> {
    let records = run_grid(cfg, workers);
    let runs_dir = out_dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    let mut outputs = Vec::with_capacity(records.len() + 1);
    for r in &records {
        let path = runs_dir.join(format!("run_{:06}.json", r.run));
        let json = to_json(&path, r)?;
        outputs.push(write(path, json)?);
    }
    outputs.push(write(out_dir.join("aggregate.csv"), aggregate_csv(&records))?);
    Ok(Summary {
        runs: records.len(),
        failed: records.iter().filter(|r| r.status != "ok").count(),
        outputs,
    })
}

/// Writes `labels.txt` (one label per vertex) and `report.json`.
pub fn run_detection(cfg: &Config, out_dir: &Path) -> Result<Summary> {
    let manifest = cfg.manifest.as_ref().expect("validated");
    let k = cfg.k.expect("validated");
    let stack = io::load_stack(manifest)?;
    let opts = cfg.solver.pipeline_options(cfg.seed);
    let report_path = out_dir.join("report.json");
    let mut record = RunJson {
        run: 0,
        n: stack.n(),
        t: stack.len(),
        seed_index: None,
        algorithm: cfg.algorithm,
        status: "ok",
        error: None,
        stages: None,
        evaluation: None,
        diagnostics: None,
        estimates: None,
        labels: None,
    };
    let mut outputs = Vec::new();
    match detect(&stack, k, cfg.algorithm.algorithm(), &opts) {
        Ok(det) => {
            outputs.push(write(out_dir.join("labels.txt"), io::format_labels(&det.membership))?);
            record.stages = Some(StageReport::new(cfg.algorithm, &det.report));
            record.estimates = Some(EstimatesJson::new(
                estimate_pi(&det.membership),
                &estimate_b(&stack, &det.membership),
            ));
            record.labels = Some(det.membership.labels().to_vec());
        }
        Err(e) => {
            record.status = "failed";
            record.error = Some(format!("pipeline: {e}"));
        }
    }
    let json = to_json(&report_path, &record)?;
    outputs.push(write(report_path, json)?);
    Ok(Summary {
        runs: 1,
        failed: usize::from(record.status != "ok"),
        outputs,
    })
}

/// `|λ|` of the truncated sum matrix, largest first, at most `kmax`.
pub fn scree(cfg: &Config) -> Result<Vec<f64>> {
    let kmax = cfg.kmax.ok_or_else(|| Error::Config("scree needs kmax".into()))?;
    let stack = match &cfg.manifest {
        Some(m) => io::load_stack(m)?,
        None => {
            let grid = cfg.grid.as_ref().expect("validated");
            simulate_instance(cfg, grid.n[0], grid.t[0], 0)?.stack
        }
    };
    let trunc = truncate_with_delta(&aggregate_sum(&stack), stack.len(), cfg.solver.truncation_delta)?;
    let count = kmax.min(trunc.kept.len());
    if count == 0 {
        return Ok(Vec::new());
    }
    let opts = EigenOptions {
        tol: cfg.solver.eigen_tol,
        max_cycles: cfg.solver.eigen_max_cycles,
        seed: cfg.seed,
    };
    scree_values(&trunc.sub, count, &opts).map_err(|e| Error::Config(format!("eigensolver: {e}")))
}

pub fn format_scree(values: &[f64]) -> String {
    let mut out = String::from("index,abs_eigenvalue\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, v);
    }
    out
}

/// Writes `scree.csv` with 1-based rank and `|λ|`.
pub fn run_scree(cfg: &Config, out_dir: &Path) -> Result<Summary> {
    let values = scree(cfg)?;
    let path = write(out_dir.join("scree.csv"), format_scree(&values))?;
    Ok(Summary {
        runs: 1,
        failed: 0,
        outputs: vec![path],
    })
}
