//! Dynamic stochastic block models: sampling memberships and layers, and
//! the noiseless expected sum matrices used as oracles and diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph::{LayerStack, SparseSymGraph};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};
use crate::pipeline::MembershipMatrix;
use crate::rng;

const PI_SUM_TOL: f64 = 1e-12;
const PSI_MAX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid community distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("connectivity matrix {layer} is invalid: {reason}")]
    InvalidConnectivity { layer: usize, reason: &'static str },
    #[error("degree parameters of community {community} have maximum {max}, expected 1")]
    IdentifiabilityViolation { community: usize, max: f64 },
    #[error("community {0} has no members")]
    EmptyCommunity(usize),
    #[error("degree vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("degree parameter {index} is {value}, expected a value in (0, 1]")]
    InvalidDegree { index: usize, value: f64 },
}

/// Full DSBM / DDCBM parameterisation.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub k: usize,
    pub pi: Vec<f64>,
    /// One symmetric `k x k` matrix per layer.
    pub b_stack: Vec<DenseMatrix>,
    /// Degree parameters, present for the degree-corrected model.
    pub psi: Option<Vec<f64>>,
}

impl ModelParams {
    pub fn layers(&self) -> usize {
        self.b_stack.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        validate_pi(&self.pi)?;
        if self.pi.len() != self.k {
            return Err(ModelError::InvalidDistribution("length differs from k"));
        }
        if self.b_stack.is_empty() {
            return Err(ModelError::InvalidConnectivity {
                layer: 0,
                reason: "no layers",
            });
        }
        for (layer, b) in self.b_stack.iter().enumerate() {
            validate_connectivity(layer, b, self.k)?;
        }
        if let Some(psi) = &self.psi {
            validate_psi_range(psi)?;
        }
        Ok(())
    }
}

fn validate_pi(pi: &[f64]) -> Result<(), ModelError> {
    if pi.is_empty() {
        return Err(ModelError::InvalidDistribution("empty"));
    }
    if pi.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(ModelError::InvalidDistribution("negative or non-finite entry"));
    }
    if (pi.iter().sum::<f64>() - 1.0).abs() > PI_SUM_TOL {
        return Err(ModelError::InvalidDistribution("entries do not sum to 1"));
    }
    Ok(())
}

fn validate_connectivity(layer: usize, b: &DenseMatrix, k: usize) -> Result<(), ModelError> {
    if b.rows() != k || b.cols() != k {
        return Err(ModelError::InvalidConnectivity {
            layer,
            reason: "shape is not k x k",
        });
    }
    if !b.is_symmetric(0.0) {
        return Err(ModelError::InvalidConnectivity {
            layer,
            reason: "not symmetric",
        });
    }
    if b.as_slice().iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(ModelError::InvalidConnectivity {
            layer,
            reason: "entry outside [0, 1]",
        });
    }
    Ok(())
}

fn validate_psi_range(psi: &[f64]) -> Result<(), ModelError> {
    match psi.iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v <= 1.0)) {
        Some((index, &value)) => Err(ModelError::InvalidDegree { index, value }),
        None => Ok(()),
    }
}

/// Planted community labels `z` (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub z: Vec<usize>,
    pub k: usize,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// One-hot `n x k` membership matrix.
    pub fn as_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n(), self.k, |i, j| if self.z[i] == j { 1.0 } else { 0.0 })
    }

    pub fn membership(&self) -> MembershipMatrix {
        MembershipMatrix::new(self.z.clone(), self.k).expect("labels below k")
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.z {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Draws `n` i.i.d. categorical labels from `pi`.
pub fn sample_memberships(n: usize, pi: &[f64], seed: u64) -> Result<GroundTruth, ModelError> {
    validate_pi(pi)?;
    let last_positive = pi.iter().rposition(|&p| p > 0.0).expect("pi sums to 1");
    let mut rng = rng::stream(seed, rng::MEMBERSHIP_STREAM);
    let z = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (c, &p) in pi.iter().enumerate() {
                acc += p;
                if u < acc && p > 0.0 {
                    return c;
                }
            }
            last_positive
        })
        .collect();
    Ok(GroundTruth { z, k: pi.len() })
}

/// Independent Bernoulli edges with `P(i ~ j) = prob(i, j)`, one draw per
/// unordered pair at a fixed position of the layer's stream.
fn sample_layer_with(
    n: usize,
    seed: u64,
    layer: u64,
    prob: impl Fn(usize, usize) -> f64,
) -> SparseSymGraph {
    let mut triplets = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let mut rng = rng::layer_stream_at(seed, layer, n, i, i + 1);
        for j in i + 1..n {
            let u: f64 = rng.random();
            if u < prob(i, j) {
                triplets.push((i as u32, j as u32, 1));
            }
        }
    }
    SparseSymGraph::from_upper_triplets(n, triplets)
}

/// One DSBM layer: pair `i < j` is linked with probability `b[z_i][z_j]`.
pub fn sample_dsbm_layer(gt: &GroundTruth, b: &DenseMatrix, seed: u64, layer: u64) -> SparseSymGraph {
    sample_layer_with(gt.n(), seed, layer, |i, j| b.get(gt.z[i], gt.z[j]))
}

/// One DDCBM layer: pair `i < j` is linked with probability
/// `psi_i psi_j b[z_i][z_j]`. Uses the same per-pair draws as
/// [`sample_dsbm_layer`], so `psi = 1` reproduces it exactly.
pub fn sample_ddcbm_layer(
    gt: &GroundTruth,
    psi: &[f64],
    b: &DenseMatrix,
    seed: u64,
    layer: u64,
) -> Result<SparseSymGraph, ModelError> {
    check_identifiable(psi, gt)?;
    Ok(sample_layer_with(gt.n(), seed, layer, |i, j| {
        psi[i] * psi[j] * b.get(gt.z[i], gt.z[j])
    }))
}

fn check_identifiable(psi: &[f64], gt: &GroundTruth) -> Result<(), ModelError> {
    if psi.len() != gt.n() {
        return Err(ModelError::LengthMismatch {
            expected: gt.n(),
            found: psi.len(),
        });
    }
    validate_psi_range(psi)?;
    let mut max = vec![f64::NEG_INFINITY; gt.k];
    for (&c, &p) in gt.z.iter().zip(psi) {
        max[c] = max[c].max(p);
    }
    for (community, &m) in max.iter().enumerate() {
        if m.is_finite() && (m - 1.0).abs() > PSI_MAX_TOL {
            return Err(ModelError::IdentifiabilityViolation { community, max: m });
        }
    }
    Ok(())
}

/// Samples all `T` layers of `params` for the planted labels `gt`.
pub fn sample_stack(
    params: &ModelParams,
    gt: &GroundTruth,
    seed: u64,
) -> Result<LayerStack, ModelError> {
    params.validate()?;
    let layers = params
        .b_stack
        .iter()
        .enumerate()
        .map(|(t, b)| match &params.psi {
            Some(psi) => sample_ddcbm_layer(gt, psi, b, seed, t as u64),
            None => Ok(sample_dsbm_layer(gt, b, seed, t as u64)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LayerStack::new(gt.n(), layers).expect("layers share n"))
}

/// Rescales raw positive weights so that each community's maximum is 1.
pub fn normalize_psi(raw: &[f64], gt: &GroundTruth) -> Result<Vec<f64>, ModelError> {
    if raw.len() != gt.n() {
        return Err(ModelError::LengthMismatch {
            expected: gt.n(),
            found: raw.len(),
        });
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(ModelError::InvalidDegree { index, value });
    }
    let mut max = vec![0.0f64; gt.k];
    let mut seen = vec![false; gt.k];
    for (&c, &r) in gt.z.iter().zip(raw) {
        max[c] = max[c].max(r);
        seen[c] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(ModelError::EmptyCommunity(c));
    }
    Ok(gt.z.iter().zip(raw).map(|(&c, &r)| r / max[c]).collect())
}

/// Default support of the raw degree weights before normalisation.
pub const DEFAULT_DEGREE_WEIGHT_RANGE: (f64, f64) = (0.2, 1.0);

/// Draws i.i.d. `Uniform[low, high]` raw degree weights.
pub fn sample_raw_degree_weights(n: usize, low: f64, high: f64, seed: u64) -> Vec<f64> {
    assert!(0.0 < low && low <= high, "weights need positive bounded support");
    let mut rng = rng::stream(seed, rng::DEGREE_WEIGHT_STREAM);
    (0..n).map(|_| low + (high - low) * rng.random::<f64>()).collect()
}

/// `Σ_t Z_K B_t Z_Kᵀ` restricted to the vertices in `kept`, or the
/// degree-weighted variant with `Z` replaced by `Diag(psi) Z`. The
/// diagonal is left as the product gives it (it is not zeroed).
pub fn expected_sum_matrix(
    gt: &GroundTruth,
    kept: &[usize],
    b_stack: &[DenseMatrix],
    psi: Option<&[f64]>,
) -> DenseMatrix {
    let k = gt.k;
    let mut sum_b = DenseMatrix::zeros(k, k);
    for b in b_stack {
        sum_b.add_assign(b);
    }
    let weight = |v: usize| psi.map_or(1.0, |p| p[v]);
    DenseMatrix::from_fn(kept.len(), kept.len(), |a, c| {
        let (u, v) = (kept[a], kept[c]);
        weight(u) * weight(v) * sum_b.get(gt.z[u], gt.z[v])
    })
}

/// Result of the nonsingularity check on `Σ_t B_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SumCheck {
    pub nonsingular: bool,
    /// Smallest (algebraic) eigenvalue of `Σ_t B_t`.
    pub min_eigenvalue: f64,
    /// Largest entry over all layers.
    pub alpha: f64,
    /// `min_t λ_min(B_t) / alpha`; zero when `alpha` is zero.
    pub lambda: f64,
}

/// Checks that `Σ_t B_t` is nonsingular: its smallest eigenvalue in
/// absolute value must exceed `1e-10` times its spectral norm.
pub fn check_sum_nonsingular(b_stack: &[DenseMatrix]) -> SumCheck {
    assert!(!b_stack.is_empty(), "need at least one layer");
    let k = b_stack[0].rows();
    let mut sum_b = DenseMatrix::zeros(k, k);
    for b in b_stack {
        sum_b.add_assign(b);
    }
    let eig = symmetric_eigenvalues(&sum_b);
    let norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_abs = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let alpha = b_stack.iter().fold(0.0f64, |m, b| m.max(b.max_abs()));
    let min_layer_eig = b_stack
        .iter()
        .map(|b| symmetric_eigenvalues(b)[0])
        .fold(f64::INFINITY, f64::min);
    SumCheck {
        nonsingular: norm > 0.0 && min_abs > 1e-10 * norm,
        min_eigenvalue: eig[0],
        alpha,
        lambda: if alpha > 0.0 { min_layer_eig / alpha } else { 0.0 },
    }
}
