//! End-to-end detection on the sum of layer adjacency matrices.
//!
//! Both algorithms share the front half: aggregate the layers, drop rows
//! whose degree exceeds `e (T d̄)^{5/4}`, and embed the remaining vertices
//! with the `K` eigenvectors of largest `|λ|`. [`Algorithm::Spectral`] then
//! runs K-means on the embedding rows; [`Algorithm::Spherical`] projects
//! nonzero rows to the unit sphere and runs K-median. Vertices that never
//! reach the clustering step get label 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::cluster::{approx_kmeans, approx_kmedian, normalize_rows, ClusterError, RowClustering};
use crate::eigen::{leading_eigenpairs, EigenError, EigenOptions, Embedding};
use crate::graph::{aggregate_sum, truncate_with_delta, GraphError, LayerStack, SymMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid community count {0}")]
    InvalidK(usize),
    #[error("truncation stage: {0}")]
    Truncation(#[source] GraphError),
    #[error("eigensolve stage: {0}")]
    Eigen(#[source] EigenError),
    #[error("clustering stage: {0}")]
    Cluster(#[source] ClusterError),
    #[error("every row of the eigenvector embedding is zero")]
    NoNonzeroRows,
    #[error("{partial} partial labels for {kept} kept vertices")]
    SizeMismatch { partial: usize, kept: usize },
    #[error("label {label} is not below k = {k}")]
    LabelOutOfRange { label: usize, k: usize },
}

/// Hard assignment of `n` vertices to `k` communities; row `i` of the
/// one-hot matrix is `e_{labels[i]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipMatrix {
    labels: Vec<usize>,
    k: usize,
}

impl MembershipMatrix {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self, PipelineError> {
        if k == 0 {
            return Err(PipelineError::InvalidK(k));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(PipelineError::LabelOutOfRange { label, k });
        }
        Ok(Self { labels, k })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// K-means on the eigenvector rows.
    Spectral,
    /// K-median on the normalised nonzero eigenvector rows.
    Spherical,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub eigen_tol: f64,
    /// `None` means `300 * k` restart cycles.
    pub eigen_max_cycles: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    /// Threshold exponent offset, `e (T d̄)^{1 + delta}`. Anything other
    /// than the default 0.25 is experimental.
    pub truncation_delta: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            eigen_tol: 1e-8,
            eigen_max_cycles: None,
            restarts: 20,
            seed: 0,
            truncation_delta: crate::graph::DEFAULT_TRUNCATION_DELTA,
        }
    }
}

/// Stage metrics of one pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub n: usize,
    pub layers: usize,
    pub k: usize,
    pub dbar: f64,
    pub threshold: f64,
    pub n_prime: usize,
    /// Rows entering K-median (spherical variant only).
    pub n_double_prime: Option<usize>,
    /// Leading eigenvalues, descending `|λ|`.
    pub eigenvalues: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
    pub eigen_cycles: usize,
    /// `|λ_{K+1}|` when `K < n'`.
    pub next_abs_eigenvalue: Option<f64>,
    /// `|λ_K| == |λ_{K+1}|` within `1e-8`: the embedding is then one
    /// arbitrary completion of a degenerate eigenspace.
    pub boundary_degenerate: bool,
    pub objective: f64,
    pub repairs: usize,
}

#[derive(Clone, Debug)]
pub struct Detection {
    pub membership: MembershipMatrix,
    /// Vertices that survived truncation.
    pub kept: Vec<usize>,
    pub report: RunReport,
}

/// Spectral clustering of the summed adjacency matrix.
pub fn algorithm1(
    stack: &LayerStack,
    k: usize,
    opts: &PipelineOptions,
) -> Result<Detection, PipelineError> {
    detect_on_sum(&aggregate_sum(stack), stack.len(), k, Algorithm::Spectral, opts)
}

/// Spherical spectral clustering of the summed adjacency matrix.
pub fn algorithm2(
    stack: &LayerStack,
    k: usize,
    opts: &PipelineOptions,
) -> Result<Detection, PipelineError> {
    detect_on_sum(&aggregate_sum(stack), stack.len(), k, Algorithm::Spherical, opts)
}

pub fn detect(
    stack: &LayerStack,
    k: usize,
    algorithm: Algorithm,
    opts: &PipelineOptions,
) -> Result<Detection, PipelineError> {
    detect_on_sum(&aggregate_sum(stack), stack.len(), k, algorithm, opts)
}

/// Runs a pipeline on an already aggregated matrix `a0` that sums
/// `layers` layers. Also accepts dense expected matrices.
pub fn detect_on_sum<M: SymMatrix>(
    a0: &M,
    layers: usize,
    k: usize,
    algorithm: Algorithm,
    opts: &PipelineOptions,
) -> Result<Detection, PipelineError> {
    if k == 0 {
        return Err(PipelineError::InvalidK(k));
    }
    let n = a0.dim();
    let trunc = truncate_with_delta(a0, layers, opts.truncation_delta)
        .map_err(PipelineError::Truncation)?;
    let n_prime = trunc.kept.len();
    if k > n_prime {
        return Err(PipelineError::Eigen(EigenError::KTooLarge { k, n: n_prime }));
    }

    let eig_opts = EigenOptions {
        tol: opts.eigen_tol,
        max_cycles: opts.eigen_max_cycles,
        seed: opts.seed,
    };
    let wanted = (k + 1).min(n_prime);
    let full = leading_eigenpairs(&trunc.sub, wanted, &eig_opts).map_err(PipelineError::Eigen)?;
    let next_abs_eigenvalue = (wanted > k).then(|| full.values[k].abs());
    let boundary_degenerate = next_abs_eigenvalue.is_some_and(|next| {
        let kth = full.values[k - 1].abs();
        kth - next <= 1e-8 * kth.max(1.0)
    });
    let embedding = take_leading(full, k, trunc.kept.clone());

    let (partial, clustering, n_double_prime): (Vec<usize>, RowClustering, Option<usize>) =
        match algorithm {
            Algorithm::Spectral => {
                let c = approx_kmeans(&embedding.vectors, k, opts.restarts, opts.seed)
                    .map_err(PipelineError::Cluster)?;
                (c.assign.clone(), c, None)
            }
            Algorithm::Spherical => {
                let (unit_rows, nonzero) = normalize_rows(&embedding.vectors);
                if nonzero.is_empty() {
                    return Err(PipelineError::NoNonzeroRows);
                }
                let c = approx_kmedian(&unit_rows, k, opts.restarts, opts.seed)
                    .map_err(PipelineError::Cluster)?;
                let on_kept = extend_membership(&c.assign, &nonzero, n_prime, k)?;
                (on_kept.labels, c, Some(nonzero.len()))
            }
        };
    let membership = extend_membership(&partial, &trunc.kept, n, k)?;

    Ok(Detection {
        membership,
        kept: trunc.kept,
        report: RunReport {
            algorithm,
            n,
            layers,
            k,
            dbar: trunc.dbar,
            threshold: trunc.threshold,
            n_prime,
            n_double_prime,
            eigenvalues: embedding.values.clone(),
            eigen_residuals: embedding.residuals.clone(),
            eigen_cycles: embedding.cycles,
            next_abs_eigenvalue,
            boundary_degenerate,
            objective: clustering.objective,
            repairs: clustering.repairs,
        },
    })
}

fn take_leading(full: Embedding, k: usize, kept: Vec<usize>) -> Embedding {
    let n = full.vectors.rows();
    let vectors = crate::linalg::DenseMatrix::from_fn(n, k, |i, j| full.vectors.get(i, j));
    Embedding {
        vectors,
        values: full.values[..k].to_vec(),
        kept,
        residuals: full.residuals[..k].to_vec(),
        cycles: full.cycles,
    }
}

/// Places `partial[j]` at vertex `kept[j]` and label 0 everywhere else.
pub fn extend_membership(
    partial: &[usize],
    kept: &[usize],
    n: usize,
    k: usize,
) -> Result<MembershipMatrix, PipelineError> {
    if partial.len() != kept.len() {
        return Err(PipelineError::SizeMismatch {
            partial: partial.len(),
            kept: kept.len(),
        });
    }
    let mut labels = vec![0; n];
    for (&v, &l) in kept.iter().zip(partial) {
        labels[v] = l;
    }
    MembershipMatrix::new(labels, k)
}
