//! Leading eigenpairs of a symmetric operator ordered by absolute value.
//!
//! A block Lanczos process with full reorthogonalisation builds an
//! orthonormal basis; Rayleigh-Ritz on that basis yields Ritz pairs from
//! both ends of the spectrum at once, and the wanted ones are those of
//! largest magnitude. When the basis is full the solver thick-restarts
//! from the wanted Ritz vectors plus the residual directions. Breakdowns
//! (an invariant subspace was found) are continued with fresh random
//! directions so repeated eigenvalues are not missed.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{axpy, dot, norm2, symmetric_eigen, DenseMatrix, SymOperator};
use crate::rng;

/// Relative gap below which two eigenvalue magnitudes count as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error("requested {k} eigenpairs of a {n}x{n} matrix")]
    KTooLarge { k: usize, n: usize },
    #[error("requested zero eigenpairs")]
    ZeroCount,
    #[error("no convergence after {cycles} restart cycles (residuals {residuals:?})")]
    ConvergenceFailure { cycles: usize, residuals: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual tolerance, relative to `max(1, |λ|)`.
    pub tol: f64,
    /// Restart cycle cap; `None` means `300 * k`.
    pub max_cycles: Option<usize>,
    /// Seed for the start block.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_cycles: None,
            seed: 0,
        }
    }
}

/// Leading eigenvectors of the working matrix, with the map from its rows
/// back to the original vertex ids.
#[derive(Clone, Debug)]
pub struct Embedding {
    /// `n' x k`, orthonormal columns.
    pub vectors: DenseMatrix,
    /// Sorted by descending `|λ|`.
    pub values: Vec<f64>,
    pub kept: Vec<usize>,
    /// `‖A u - λ u‖₂` per pair.
    pub residuals: Vec<f64>,
    pub cycles: usize,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.values.len()
    }
}

/// The `k` eigenpairs of largest `|λ|`. Each eigenvector is sign-fixed so
/// that its first nonzero coordinate is positive. `kept` is the identity.
pub fn leading_eigenpairs<A: SymOperator + ?Sized>(
    a: &A,
    k: usize,
    opts: &EigenOptions,
) -> Result<Embedding, EigenError> {
    let n = a.dim();
    if k == 0 {
        return Err(EigenError::ZeroCount);
    }
    if k > n {
        return Err(EigenError::KTooLarge { k, n });
    }
    let block = k.min(8);
    let max_basis = n.min((3 * k + 20).max(2 * block + k + 8));
    let max_cycles = opts.max_cycles.unwrap_or(300 * k);

    let mut rng = rng::stream(opts.seed, rng::EIGEN_START_STREAM);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut pending: Vec<Vec<f64>> = (0..block).map(|_| random_vector(&mut rng, n)).collect();
    let mut last_residuals = Vec::new();

    for cycle in 1..=max_cycles {
        // Expand: each accepted vector queues its image for the next step.
        let mut cursor = 0;
        while basis.len() < max_basis {
            let candidate = if cursor < pending.len() {
                cursor += 1;
                core::mem::take(&mut pending[cursor - 1])
            } else {
                random_vector(&mut rng, n)
            };
            let Some(v) = orthonormalize(candidate, &basis).or_else(|| {
                // breakdown: the span is invariant; explore elsewhere
                (0..3).find_map(|_| orthonormalize(random_vector(&mut rng, n), &basis))
            }) else {
                break;
            };
            let mut av = vec![0.0; n];
            a.apply(&v, &mut av);
            pending.push(av.clone());
            basis.push(v);
            images.push(av);
        }

        // Rayleigh-Ritz on span(basis).
        let m = basis.len();
        let h = DenseMatrix::from_fn(m, m, |i, j| {
            0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]))
        });
        let eig = symmetric_eigen(&h);
        let order = magnitude_order(&eig.values);

        let ritz = |idx: usize| -> (Vec<f64>, Vec<f64>) {
            let mut y = vec![0.0; n];
            let mut ay = vec![0.0; n];
            for (r, (b, im)) in basis.iter().zip(&images).enumerate() {
                let s = eig.vectors.get(r, idx);
                axpy(s, b, &mut y);
                axpy(s, im, &mut ay);
            }
            (y, ay)
        };

        let keep = if m == n {
            k
        } else {
            (k + (m - k) / 2).min(m - 1).max(k)
        };
        let mut kept_vectors = Vec::with_capacity(keep);
        let mut kept_images = Vec::with_capacity(keep);
        let mut residual_dirs = Vec::new();
        let mut residuals = Vec::with_capacity(k);
        let mut converged = true;
        for (rank, &idx) in order.iter().take(keep).enumerate() {
            let theta = eig.values[idx];
            let (y, ay) = ritz(idx);
            if rank < k {
                let mut r = ay.clone();
                axpy(-theta, &y, &mut r);
                let res = norm2(&r);
                if res > opts.tol * theta.abs().max(1.0) {
                    converged = false;
                }
                residuals.push(res);
                if residual_dirs.len() < block {
                    residual_dirs.push(r);
                }
            }
            kept_vectors.push(y);
            kept_images.push(ay);
        }

        if converged || m == n {
            let values: Vec<f64> = order[..k].iter().map(|&i| eig.values[i]).collect();
            let mut vectors = DenseMatrix::zeros(n, k);
            for (c, v) in kept_vectors.iter_mut().take(k).enumerate() {
                canonicalize_sign(v);
                for (row, x) in v.iter().enumerate() {
                    vectors.set(row, c, *x);
                }
            }
            return Ok(Embedding {
                vectors,
                values,
                kept: (0..n).collect(),
                residuals,
                cycles: cycle,
            });
        }

        last_residuals = residuals;
        basis = kept_vectors;
        images = kept_images;
        pending = residual_dirs;
    }
    Err(EigenError::ConvergenceFailure {
        cycles: max_cycles,
        residuals: last_residuals,
    })
}

/// The `kmax` largest absolute eigenvalues, descending.
pub fn scree_values<A: SymOperator + ?Sized>(
    a: &A,
    kmax: usize,
    opts: &EigenOptions,
) -> Result<Vec<f64>, EigenError> {
    Ok(leading_eigenpairs(a, kmax, opts)?
        .values
        .iter()
        .map(|v| v.abs())
        .collect())
}

/// Indices by descending `|θ|`; values whose magnitudes agree to within
/// rounding are put in descending signed order.
fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[y].abs().total_cmp(&values[x].abs()));
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < order.len() {
        let head = values[order[start]].abs();
        let mut end = start + 1;
        while end < order.len() && head - values[order[end]].abs() <= TIE_TOL * scale {
            end += 1;
        }
        order[start..end].sort_by(|&x, &y| values[y].total_cmp(&values[x]));
        start = end;
    }
    order
}

fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// Two passes of classical Gram-Schmidt; `None` if nothing independent
/// of `basis` remains.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let original = norm2(&v);
    if original == 0.0 || !original.is_finite() {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &v);
            axpy(-c, b, &mut v);
        }
    }
    let norm = norm2(&v);
    if norm <= 1e-10 * original {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

fn canonicalize_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-9 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseSymGraph;

    #[test]
    fn single_edge_both_signs() {
        let g = SparseSymGraph::from_edge_list(2, &[(0, 1)]).unwrap();
        let e = leading_eigenpairs(&g, 2, &EigenOptions::default()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_top_pair() {
        let g = SparseSymGraph::from_edge_list(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let e = leading_eigenpairs(&g, 1, &EigenOptions::default()).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-10);
        let s = 1.0 / 3f64.sqrt();
        for i in 0..3 {
            assert!((e.vectors.get(i, 0) - s).abs() < 1e-9);
        }
        let scree = scree_values(&g, 3, &EigenOptions::default()).unwrap();
        for (v, want) in scree.iter().zip([2.0, 1.0, 1.0]) {
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_graph_scree_is_zero() {
        let g = SparseSymGraph::empty(6);
        let scree = scree_values(&g, 4, &EigenOptions::default()).unwrap();
        assert_eq!(scree.len(), 4);
        assert!(scree.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn count_errors() {
        let g = SparseSymGraph::empty(3);
        assert_eq!(
            leading_eigenpairs(&g, 4, &EigenOptions::default()).unwrap_err(),
            EigenError::KTooLarge { k: 4, n: 3 }
        );
        assert_eq!(
            leading_eigenpairs(&g, 0, &EigenOptions::default()).unwrap_err(),
            EigenError::ZeroCount
        );
    }

    #[test]
    fn disassortative_end_is_selected() {
        // complete bipartite K_{20,20}: spectrum {20, -20, 0...}
        let mut edges = Vec::new();
        for i in 0..20 {
            for j in 20..40 {
                edges.push((i, j));
            }
        }
        let g = SparseSymGraph::from_edge_list(40, &edges).unwrap();
        let e = leading_eigenpairs(&g, 2, &EigenOptions::default()).unwrap();
        assert!((e.values[0] - 20.0).abs() < 1e-8);
        assert!((e.values[1] + 20.0).abs() < 1e-8);
    }

    #[test]
    fn near_ties_prefer_positive() {
        let v = [0.5, -1.0 - 1e-15, 1.0 - 1e-15, 0.0];
        assert_eq!(magnitude_order(&v), vec![2, 1, 0, 3]);
    }

    #[test]
    fn signs_are_canonical() {
        let mut v = vec![0.0, -0.5, 0.3];
        canonicalize_sign(&mut v);
        assert_eq!(v, vec![0.0, 0.5, -0.3]);
    }
}
