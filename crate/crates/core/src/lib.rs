//! Community detection in multi-layer networks by spectral clustering of
//! the summed adjacency matrix.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod eigen;
pub mod estimate;
pub mod evaluate;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod pipeline;
mod rng;

pub use cluster::{approx_kmeans, approx_kmedian, ClusterError, RowClustering};
pub use eigen::{leading_eigenpairs, scree_values, EigenError, EigenOptions, Embedding};
pub use estimate::{estimate_b, estimate_pi, BlockEstimate};
pub use evaluate::{misclassification, EvalError, EvalReport, TheoremDiagnostics};
pub use graph::{
    aggregate_sum, average_degree, truncate_by_degree, GraphError, LayerStack, SparseSymGraph,
    SymMatrix, TruncationResult,
};
pub use linalg::{DenseMatrix, SymOperator};
pub use model::{GroundTruth, ModelError, ModelParams};
pub use pipeline::{
    detect, detect_on_sum, Algorithm, Detection, MembershipMatrix, PipelineError,
    PipelineOptions, RunReport,
};
pub use rng::derive_seed;
