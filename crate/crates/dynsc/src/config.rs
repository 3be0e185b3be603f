//! Experiment configuration: a single JSON document.
//!
//! ```json
//! {
//!   "mode": "simulate",
//!   "seed": 1,
//!   "model": {"k": 2, "pi": [0.5, 0.5], "b_stack": [[[5.0, 1.0], [1.0, 5.0]]], "psi": null},
//!   "b_units": "per_n",
//!   "grid": {"n": [400], "t": [1, 4, 16, 64], "seeds": 50, "algorithms": ["alg1"]}
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use dynsc_core::pipeline::PipelineOptions;
use dynsc_core::{Algorithm, DenseMatrix, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParamsJson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Detect,
    Simulate,
    Scree,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmName {
    #[default]
    #[serde(rename = "alg1")]
    Alg1,
    #[serde(rename = "alg2")]
    Alg2,
}

impl AlgorithmName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Alg1 => "alg1",
            Self::Alg2 => "alg2",
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            Self::Alg1 => Algorithm::Spectral,
            Self::Alg2 => Algorithm::Spherical,
        }
    }
}

/// How `model.b_stack` entries are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BUnits {
    /// Edge probabilities.
    #[default]
    Probability,
    /// Multiplied by `1/n` for each grid size `n`.
    PerN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub eigen_tol: f64,
    pub eigen_max_cycles: Option<usize>,
    pub restarts: usize,
    pub truncation_delta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = PipelineOptions::default();
        Self {
            eigen_tol: d.eigen_tol,
            eigen_max_cycles: d.eigen_max_cycles,
            restarts: d.restarts,
            truncation_delta: d.truncation_delta,
        }
    }
}

impl SolverConfig {
    pub fn pipeline_options(&self, seed: u64) -> PipelineOptions {
        PipelineOptions {
            eigen_tol: self.eigen_tol,
            eigen_max_cycles: self.eigen_max_cycles,
            restarts: self.restarts,
            seed,
            truncation_delta: self.truncation_delta,
        }
    }
}

/// Support of the raw degree weights drawn for each simulated instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRange {
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<usize>,
    pub t: Vec<usize>,
    pub seeds: usize,
    #[serde(default)]
    pub algorithms: Option<Vec<AlgorithmName>>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub algorithm: AlgorithmName,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub model: Option<ModelParamsJson>,
    #[serde(default)]
    pub b_units: BUnits,
    /// Draw `psi` per instance from these raw weights (degree-corrected).
    #[serde(default)]
    pub degree_weights: Option<WeightRange>,
    #[serde(default)]
    pub grid: Option<Grid>,
    /// Compute `‖A - P‖`, `γ_n` and friends for simulated runs.
    #[serde(default = "default_true")]
    pub diagnostics: bool,
    /// Layer-stack manifest for `detect` and `scree`.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub kmax: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Config {
    /// Reads, resolves the manifest path against the config's directory
    /// and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Config = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if let Some(m) = &cfg.manifest {
            if m.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.manifest = Some(base.join(m));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::json("<inline config>", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            return Err(invalid("k must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        if self.solver.restarts == 0 {
            return Err(invalid("solver.restarts must be at least 1"));
        }
        if self.solver.eigen_tol.is_nan() || self.solver.eigen_tol <= 0.0 {
            return Err(invalid("solver.eigen_tol must be positive"));
        }
        if let Some(w) = &self.degree_weights {
            if !(w.low > 0.0 && w.low <= w.high && w.high.is_finite()) {
                return Err(invalid("degree_weights needs 0 < low <= high"));
            }
        }
        match self.mode {
            Mode::Detect => {
                if self.manifest.is_none() {
                    return Err(invalid("detect needs a manifest"));
                }
                if self.k.is_none() {
                    return Err(invalid("detect needs k"));
                }
            }
            Mode::Simulate => self.validate_simulation()?,
            Mode::Scree => {
                if self.kmax.is_none_or(|k| k == 0) {
                    return Err(invalid("scree needs kmax >= 1"));
                }
                if self.manifest.is_none() {
                    self.validate_simulation()?;
                }
            }
        }
        Ok(())
    }

    fn validate_simulation(&self) -> Result<()> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| invalid("simulation needs a model"))?;
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| invalid("simulation needs a grid"))?;
        if model.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if let Some(k) = self.k {
            if k != model.k {
                return Err(invalid(format!("k = {k} but model.k = {}", model.k)));
            }
        }
        if grid.n.is_empty() || grid.t.is_empty() || grid.seeds == 0 {
            return Err(invalid("grid axes must be nonempty"));
        }
        if grid.n.contains(&0) || grid.t.contains(&0) {
            return Err(invalid("grid sizes must be positive"));
        }
        if grid.algorithms.as_ref().is_some_and(|a| a.is_empty()) {
            return Err(invalid("grid.algorithms must be nonempty"));
        }
        if model.psi.is_some() && self.degree_weights.is_some() {
            return Err(invalid("give either model.psi or degree_weights"));
        }
        for &n in &grid.n {
            if let Some(psi) = &model.psi {
                if psi.len() != n {
                    return Err(invalid(format!("model.psi has length {} but n = {n}", psi.len())));
                }
            }
            self.params_for(n, 1).map_err(|e| invalid(format!("model at n = {n}: {e}")))?;
        }
        Ok(())
    }

    pub fn model_k(&self) -> Option<usize> {
        self.model.as_ref().map(|m| m.k)
    }

    /// Model with `layers` connectivity matrices (the configured ones
    /// repeated cyclically) in probability units for size `n`.
    pub fn params_for(&self, n: usize, layers: usize) -> Result<ModelParams> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| invalid("no model given"))?;
        let scale = match self.b_units {
            BUnits::Probability => 1.0,
            BUnits::PerN => 1.0 / n as f64,
        };
        let base = model.to_params_unchecked()?;
        let scaled: Vec<DenseMatrix> = base.b_stack.iter().map(|b| b.scaled(scale)).collect();
        let params = ModelParams {
            b_stack: (0..layers).map(|t| scaled[t % scaled.len()].clone()).collect(),
            ..base
        };
        params.validate()?;
        Ok(params)
    }

    pub fn algorithms(&self) -> Vec<AlgorithmName> {
        self.grid
            .as_ref()
            .and_then(|g| g.algorithms.clone())
            .unwrap_or_else(|| vec![self.algorithm])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"{
        "mode": "simulate",
        "seed": 3,
        "model": {"k": 2, "pi": [0.5, 0.5], "b_stack": [[[5.0, 1.0], [1.0, 5.0]]]},
        "b_units": "per_n",
        "grid": {"n": [100, 200], "t": [1, 4], "seeds": 3, "algorithms": ["alg1", "alg2"]}
    }"#;

    #[test]
    fn parses_simulation() {
        let cfg = Config::from_json(SIM).unwrap();
        assert_eq!(cfg.mode, Mode::Simulate);
        assert_eq!(cfg.algorithms(), vec![AlgorithmName::Alg1, AlgorithmName::Alg2]);
        let p = cfg.params_for(100, 3).unwrap();
        assert_eq!(p.layers(), 3);
        assert!((p.b_stack[2].get(0, 0) - 0.05).abs() < 1e-15);
        assert!(cfg.diagnostics);
    }

    #[test]
    fn rejects_zero_k() {
        let text = r#"{"mode": "detect", "k": 0, "manifest": "m.json"}"#;
        assert!(matches!(Config::from_json(text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_probabilities_above_one() {
        let text = SIM.replace("\"per_n\"", "\"probability\"");
        assert!(matches!(Config::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_unknown_fields_and_missing_parts() {
        assert!(Config::from_json(r#"{"mode": "simulate", "sed": 1}"#).is_err());
        assert!(Config::from_json(r#"{"mode": "scree", "manifest": "m.json"}"#).is_err());
        assert!(Config::from_json(r#"{"mode": "detect", "k": 2}"#).is_err());
        assert!(Config::from_json(r#"{"mode": "scree", "kmax": 3, "manifest": "m.json"}"#).is_ok());
    }
}
