//! Sparse symmetric multigraph storage, layer aggregation and the
//! degree-truncation step shared by both detection pipelines.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{DenseMatrix, SymOperator};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph of size {n}")]
    IndexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("layer {layer} has {found} vertices, expected {expected}")]
    SizeMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("a layer stack needs at least one layer")]
    EmptyStack,
    #[error("degree truncation dropped every row (threshold {threshold})")]
    AllRowsDropped { threshold: f64 },
}

/// Undirected graph with nonnegative integer edge multiplicities and no
/// self-loops. Stored as symmetric CSR (both halves), columns sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseSymGraph {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<u32>,
}

impl SparseSymGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            cols: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a graph from an undirected edge list; repeated pairs (in
    /// either orientation) are summed into the multiplicity.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut triplets = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::IndexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            triplets.push((u.min(v) as u32, u.max(v) as u32, 1));
        }
        Ok(Self::from_upper_triplets(n, triplets))
    }

    /// Builds from `(i, j, w)` with `i < j < n`; duplicates are summed
    /// and zero weights dropped.
    pub(crate) fn from_upper_triplets(n: usize, mut triplets: Vec<(u32, u32, u32)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(u32, u32, u32)> = Vec::with_capacity(triplets.len());
        for (i, j, w) in triplets {
            debug_assert!(i < j && (j as usize) < n);
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => {
                    debug_assert!(last.2.checked_add(w).is_some(), "edge weight overflow");
                    last.2 += w;
                }
                _ => merged.push((i, j, w)),
            }
        }
        merged.retain(|t| t.2 > 0);

        let mut degree = vec![0usize; n];
        for &(i, j, _) in &merged {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let nnz = offsets[n];
        let mut cols = vec![0u32; nnz];
        let mut weights = vec![0u32; nnz];
        let mut cursor = offsets.clone();
        // Lower entries (j < i) of row i arrive in increasing j order when
        // scanning by the upper row, so one pass keeps rows sorted.
        for &(i, j, w) in &merged {
            let c = &mut cursor[j as usize];
            cols[*c] = i;
            weights[*c] = w;
            *c += 1;
        }
        for &(i, j, w) in &merged {
            let c = &mut cursor[i as usize];
            cols[*c] = j;
            weights[*c] = w;
            *c += 1;
        }
        Self {
            n,
            offsets,
            cols,
            weights,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored undirected pairs with nonzero weight.
    pub fn edge_count(&self) -> usize {
        self.cols.len() / 2
    }

    /// Sum of all weights over unordered pairs.
    pub fn total_weight(&self) -> u64 {
        self.weights.iter().map(|&w| w as u64).sum::<u64>() / 2
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let (cols, weights) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => weights[p],
            Err(_) => 0,
        }
    }

    /// Neighbour columns and weights of row `i`, columns ascending.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[u32]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.weights[r])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.row(i).1.iter().map(|&w| w as u64).sum()
    }

    pub fn max_weight(&self) -> u32 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    /// Upper-triangle entries `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, weights) = self.row(i);
            cols.iter()
                .zip(weights)
                .filter(move |(&j, _)| (j as usize) > i)
                .map(move |(&j, &w)| (i, j as usize, w))
        })
    }

    /// Induced subgraph on `kept` (ascending), relabelled to `0..kept.len()`.
    pub fn induced(&self, kept: &[usize]) -> Self {
        let mut new_index = vec![u32::MAX; self.n];
        for (k, &v) in kept.iter().enumerate() {
            new_index[v] = k as u32;
        }
        let mut triplets = Vec::new();
        for (k, &v) in kept.iter().enumerate() {
            let (cols, weights) = self.row(v);
            for (&j, &w) in cols.iter().zip(weights) {
                let nj = new_index[j as usize];
                if nj != u32::MAX && (k as u32) < nj {
                    triplets.push((k as u32, nj, w));
                }
            }
        }
        Self::from_upper_triplets(kept.len(), triplets)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.edges() {
            m.set(i, j, w as f64);
            m.set(j, i, w as f64);
        }
        m
    }
}

impl SymOperator for SparseSymGraph {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, weights) = self.row(i);
            *yi = cols
                .iter()
                .zip(weights)
                .map(|(&j, &w)| w as f64 * x[j as usize])
                .sum();
        }
    }
}

/// Symmetric matrices that can be degree-truncated: the pipeline runs on
/// sampled graphs and, for noiseless checks, on dense expected matrices.
pub trait SymMatrix: SymOperator + Sized {
    fn row_sums(&self) -> Vec<f64>;
    fn principal_submatrix(&self, kept: &[usize]) -> Self;
}

impl SymMatrix for SparseSymGraph {
    fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row_sum(i) as f64).collect()
    }

    fn principal_submatrix(&self, kept: &[usize]) -> Self {
        self.induced(kept)
    }
}

impl SymMatrix for DenseMatrix {
    fn row_sums(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self.row(i).iter().sum()).collect()
    }

    fn principal_submatrix(&self, kept: &[usize]) -> Self {
        DenseMatrix::from_fn(kept.len(), kept.len(), |a, b| self.get(kept[a], kept[b]))
    }
}

/// Ordered layers over one shared vertex set.
#[derive(Clone, Debug)]
pub struct LayerStack {
    n: usize,
    layers: Vec<SparseSymGraph>,
}

impl LayerStack {
    pub fn new(n: usize, layers: Vec<SparseSymGraph>) -> Result<Self, GraphError> {
        if layers.is_empty() {
            return Err(GraphError::EmptyStack);
        }
        if let Some((layer, g)) = layers.iter().enumerate().find(|(_, g)| g.n() != n) {
            return Err(GraphError::SizeMismatch {
                layer,
                expected: n,
                found: g.n(),
            });
        }
        Ok(Self { n, layers })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of layers `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[SparseSymGraph] {
        &self.layers
    }
}

/// Entrywise sum of all layers.
pub fn aggregate_sum(stack: &LayerStack) -> SparseSymGraph {
    let total: usize = stack.layers().iter().map(|g| g.edge_count()).sum();
    let mut triplets = Vec::with_capacity(total);
    for g in stack.layers() {
        triplets.extend(g.edges().map(|(i, j, w)| (i as u32, j as u32, w)));
    }
    SparseSymGraph::from_upper_triplets(stack.n(), triplets)
}

/// `1ᵀ A0 1 / (n T)`; zero for an empty vertex set.
pub fn average_degree<M: SymMatrix>(a0: &M, layers: usize) -> f64 {
    let n = a0.dim();
    if n == 0 || layers == 0 {
        return 0.0;
    }
    a0.row_sums().iter().sum::<f64>() / (n as f64 * layers as f64)
}

/// Exponent offset on `T d̄` in the truncation threshold; the standard
/// threshold `e (T d̄)^{5/4}` corresponds to `0.25`.
pub const DEFAULT_TRUNCATION_DELTA: f64 = 0.25;

/// Output of degree truncation.
#[derive(Clone, Debug)]
pub struct TruncationResult<M = SparseSymGraph> {
    /// Retained vertex indices, strictly increasing.
    pub kept: Vec<usize>,
    /// Principal submatrix of `A0` on `kept`.
    pub sub: M,
    pub threshold: f64,
    pub dbar: f64,
}

/// Drops every row of `a0` whose row sum exceeds `e (T d̄)^{5/4}`.
/// Rows sitting exactly on the threshold are kept.
pub fn truncate_by_degree(
    a0: &SparseSymGraph,
    layers: usize,
) -> Result<TruncationResult, GraphError> {
    truncate_with_delta(a0, layers, DEFAULT_TRUNCATION_DELTA)
}

/// Truncation with threshold `e (T d̄)^{1+delta}`.
pub fn truncate_with_delta<M: SymMatrix>(
    a0: &M,
    layers: usize,
    delta: f64,
) -> Result<TruncationResult<M>, GraphError> {
    let dbar = average_degree(a0, layers);
    let threshold = core::f64::consts::E * libm::pow(layers as f64 * dbar, 1.0 + delta);
    let kept: Vec<usize> = a0
        .row_sums()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= threshold)
        .map(|(i, _)| i)
        .collect();
    if kept.is_empty() && a0.dim() > 0 {
        return Err(GraphError::AllRowsDropped { threshold });
    }
    let sub = a0.principal_submatrix(&kept);
    Ok(TruncationResult {
        kept,
        sub,
        threshold,
        dbar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SparseSymGraph {
        SparseSymGraph::from_edge_list(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn edge_list_construction() {
        let g = triangle();
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().all(|(_, _, w)| w == 1));
        assert_eq!(g.get(2, 0), g.get(0, 2));

        let e = SparseSymGraph::from_edge_list(2, &[]).unwrap();
        assert_eq!(e.edge_count(), 0);

        let d = SparseSymGraph::from_edge_list(3, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(d.edges().collect::<Vec<_>>(), vec![(0, 1, 2)]);
        assert_eq!(d.get(1, 0), 2);
    }

    #[test]
    fn edge_list_errors() {
        assert_eq!(
            SparseSymGraph::from_edge_list(3, &[(0, 3)]),
            Err(GraphError::IndexOutOfRange { vertex: 3, n: 3 })
        );
        assert_eq!(
            SparseSymGraph::from_edge_list(3, &[(1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
    }

    #[test]
    fn aggregation() {
        let single = LayerStack::new(3, vec![triangle()]).unwrap();
        assert_eq!(aggregate_sum(&single), triangle());

        let doubled = LayerStack::new(3, vec![triangle(), triangle()]).unwrap();
        let a0 = aggregate_sum(&doubled);
        assert!(a0.edges().all(|(_, _, w)| w == 2));
        assert_eq!(a0.edge_count(), 3);

        let l1 = SparseSymGraph::from_edge_list(3, &[(0, 1)]).unwrap();
        let l2 = SparseSymGraph::from_edge_list(3, &[(1, 2)]).unwrap();
        let path = aggregate_sum(&LayerStack::new(3, vec![l1, l2]).unwrap());
        assert_eq!(path.edges().collect::<Vec<_>>(), vec![(0, 1, 1), (1, 2, 1)]);
    }

    #[test]
    fn stack_validation() {
        assert_eq!(LayerStack::new(3, vec![]).unwrap_err(), GraphError::EmptyStack);
        let err = LayerStack::new(3, vec![triangle(), SparseSymGraph::empty(4)]).unwrap_err();
        assert_eq!(
            err,
            GraphError::SizeMismatch {
                layer: 1,
                expected: 3,
                found: 4
            }
        );
    }

    #[test]
    fn average_degree_values() {
        assert_eq!(average_degree(&triangle(), 1), 2.0);
        assert_eq!(average_degree(&SparseSymGraph::empty(5), 1), 0.0);
        let doubled = aggregate_sum(&LayerStack::new(3, vec![triangle(), triangle()]).unwrap());
        assert_eq!(average_degree(&doubled, 2), 2.0);
    }

    #[test]
    fn truncation_triangle_keeps_all() {
        let t = truncate_by_degree(&triangle(), 1).unwrap();
        assert!((t.threshold - core::f64::consts::E * libm::pow(2.0, 1.25)).abs() < 1e-12);
        assert!((t.threshold - 6.4648).abs() < 1e-3);
        assert_eq!(t.kept, vec![0, 1, 2]);
        assert_eq!(t.sub, triangle());
    }

    #[test]
    fn truncation_star_drops_hub() {
        let edges: Vec<_> = (1..11).map(|v| (0, v)).collect();
        let star = SparseSymGraph::from_edge_list(11, &edges).unwrap();
        let t = truncate_by_degree(&star, 1).unwrap();
        assert!((t.dbar - 20.0 / 11.0).abs() < 1e-12);
        assert!((t.threshold - 5.74).abs() < 0.01);
        assert_eq!(t.kept, (1..11).collect::<Vec<_>>());
        assert_eq!(t.sub, SparseSymGraph::empty(10));
    }

    #[test]
    fn truncation_empty_graph_keeps_everything() {
        // every row sum equals the zero threshold, so ties are kept
        let t = truncate_by_degree(&SparseSymGraph::empty(4), 1).unwrap();
        assert_eq!(t.threshold, 0.0);
        assert_eq!(t.kept.len(), 4);
    }

    #[test]
    fn induced_subgraph_preserves_entries() {
        let g = SparseSymGraph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 2)])
            .unwrap();
        let kept = [0, 2, 4];
        let sub = g.induced(&kept);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(sub.get(a, b), g.get(kept[a], kept[b]));
            }
        }
    }
}
