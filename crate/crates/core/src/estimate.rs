//! Plug-in estimates of the community proportions and per-layer
//! connectivity matrices from a hard membership estimate.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::LayerStack;
use crate::pipeline::MembershipMatrix;

/// `π̂_a`: the fraction of vertices labelled `a`.
pub fn estimate_pi(zhat: &MembershipMatrix) -> Vec<f64> {
    let n = zhat.n() as f64;
    zhat.sizes().iter().map(|&s| s as f64 / n).collect()
}

/// Estimated `K x K` connectivity matrix of one layer. Blocks with no
/// vertex pairs to average over are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEstimate {
    k: usize,
    entries: Vec<Option<f64>>,
}

impl BlockEstimate {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.entries[a * self.k + b]
    }

    pub fn rows(&self) -> Vec<Vec<Option<f64>>> {
        self.entries.chunks(self.k).map(|r| r.to_vec()).collect()
    }
}

/// `B̂_ab = (1/O_ab) Σ_{i,j} A_ij 1(ẑ_i = a, ẑ_j = b)` with the double sum
/// over ordered pairs, `O_ab = n̂_a n̂_b` off the diagonal and
/// `n̂_a (n̂_a - 1)` on it. Each between-block edge therefore counts once
/// in `(a, b)` and once in `(b, a)`, each within-block edge twice in
/// `(a, a)`, which makes every entry an unbiased edge probability.
pub fn estimate_b(stack: &LayerStack, zhat: &MembershipMatrix) -> Vec<BlockEstimate> {
    let k = zhat.k();
    let sizes = zhat.sizes();
    stack
        .layers()
        .iter()
        .map(|g| {
            let mut counts = vec![0u64; k * k];
            for (i, j, w) in g.edges() {
                let (a, b) = (zhat.label(i), zhat.label(j));
                counts[a * k + b] += w as u64;
                counts[b * k + a] += w as u64;
            }
            let entries = (0..k * k)
                .map(|idx| {
                    let (a, b) = (idx / k, idx % k);
                    let pairs = if a == b {
                        sizes[a] * sizes[a].saturating_sub(1)
                    } else {
                        sizes[a] * sizes[b]
                    };
                    (pairs > 0).then(|| counts[idx] as f64 / pairs as f64)
                })
                .collect();
            BlockEstimate { k, entries }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseSymGraph;

    fn mm(labels: &[usize], k: usize) -> MembershipMatrix {
        MembershipMatrix::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn proportions() {
        assert_eq!(estimate_pi(&mm(&[0, 0, 0, 1], 2)), vec![0.75, 0.25]);
        assert_eq!(estimate_pi(&mm(&[0, 0, 0], 3)), vec![1.0, 0.0, 0.0]);
        assert_eq!(
            estimate_pi(&mm(&[0, 1, 2, 3, 0, 1, 2, 3], 4)),
            vec![0.25; 4]
        );
    }

    #[test]
    fn triangle_within_block() {
        let g = SparseSymGraph::from_edge_list(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let stack = LayerStack::new(3, vec![g]).unwrap();
        let b = estimate_b(&stack, &mm(&[0, 0, 0], 1));
        assert_eq!(b[0].get(0, 0), Some(1.0));
    }

    #[test]
    fn empty_graph_zero_estimates() {
        let stack = LayerStack::new(4, vec![SparseSymGraph::empty(4)]).unwrap();
        let b = estimate_b(&stack, &mm(&[0, 0, 1, 1], 2));
        for a in 0..2 {
            for c in 0..2 {
                assert_eq!(b[0].get(a, c), Some(0.0));
            }
        }
    }

    #[test]
    fn singleton_pair() {
        let g = SparseSymGraph::from_edge_list(2, &[(0, 1)]).unwrap();
        let stack = LayerStack::new(2, vec![g]).unwrap();
        let b = estimate_b(&stack, &mm(&[0, 1], 2));
        assert_eq!(b[0].get(0, 1), Some(1.0));
        assert_eq!(b[0].get(1, 0), Some(1.0));
        // singleton communities have no within pairs
        assert_eq!(b[0].get(0, 0), None);
        assert_eq!(b[0].get(1, 1), None);
    }

    #[test]
    fn empty_community_is_undefined() {
        let stack = LayerStack::new(3, vec![SparseSymGraph::empty(3)]).unwrap();
        let b = estimate_b(&stack, &mm(&[0, 0, 0], 2));
        assert_eq!(b[0].get(0, 1), None);
        assert_eq!(b[0].get(1, 1), None);
        assert_eq!(b[0].get(0, 0), Some(0.0));
    }

    #[test]
    fn symmetric_output_per_layer() {
        let g1 = SparseSymGraph::from_edge_list(5, &[(0, 3), (1, 4), (0, 1), (2, 3)]).unwrap();
        let g2 = SparseSymGraph::from_edge_list(5, &[(0, 2), (3, 4)]).unwrap();
        let stack = LayerStack::new(5, vec![g1, g2]).unwrap();
        let est = estimate_b(&stack, &mm(&[0, 0, 1, 1, 2], 3));
        assert_eq!(est.len(), 2);
        for b in &est {
            for a in 0..3 {
                for c in 0..3 {
                    assert_eq!(b.get(a, c), b.get(c, a));
                }
            }
        }
        // first layer: one edge (0,3) across blocks 0 and 1, one edge (2,3) inside block 1
        assert_eq!(est[0].get(0, 1), Some(1.0 / 4.0));
        assert_eq!(est[0].get(1, 1), Some(2.0 / 2.0));
    }
}
