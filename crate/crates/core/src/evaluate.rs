//! Misclassification under the best label permutation, plus the
//! quantities the consistency bounds are stated in: `‖A - P‖`, the
//! smallest nonzero singular value of `P`, `α`, `λ` and the degree
//! heterogeneity `τ_k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{leading_eigenpairs, EigenOptions};
use crate::graph::SparseSymGraph;
use crate::linalg::{symmetric_eigenvalues, DenseMatrix, Difference};
use crate::model::{check_sum_nonsingular, GroundTruth, ModelError};
use crate::pipeline::MembershipMatrix;

/// Largest `K` matched by exhaustive permutation search; above it the
/// Hungarian method is used.
pub const EXHAUSTIVE_MAX_K: usize = 8;
/// Singular values at or below this fraction of `‖P‖` count as zero.
pub const RANK_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Fraction of vertices misclassified.
    pub overall: f64,
    /// Fraction of each true community misclassified (0 for empty ones).
    pub per_community: Vec<f64>,
    /// `permutation[estimated label] = true label`.
    pub permutation: Vec<usize>,
}

/// `confusion[t][e]` counts vertices with true label `t` and estimate `e`,
/// over `k = max(truth.k, est.k)` labels.
pub fn confusion_matrix(truth: &MembershipMatrix, est: &MembershipMatrix) -> Vec<Vec<u64>> {
    let k = truth.k().max(est.k());
    let mut conf = vec![vec![0u64; k]; k];
    for (&t, &e) in truth.labels().iter().zip(est.labels()) {
        conf[t][e] += 1;
    }
    conf
}

pub fn misclassification(
    truth: &MembershipMatrix,
    est: &MembershipMatrix,
) -> Result<EvalReport, EvalError> {
    if truth.n() != est.n() {
        return Err(EvalError::SizeMismatch {
            left: truth.n(),
            right: est.n(),
        });
    }
    let conf = confusion_matrix(truth, est);
    let k = conf.len();
    let permutation = if k <= EXHAUSTIVE_MAX_K {
        best_permutation_exhaustive(&conf)
    } else {
        best_permutation_hungarian(&conf)
    };
    let n = truth.n();
    let matched: u64 = (0..k).map(|e| conf[permutation[e]][e]).sum();
    let overall = if n == 0 {
        0.0
    } else {
        1.0 - matched as f64 / n as f64
    };
    let mut inverse = vec![0; k];
    for (e, &t) in permutation.iter().enumerate() {
        inverse[t] = e;
    }
    let per_community = (0..k)
        .map(|t| {
            let size: u64 = conf[t].iter().sum();
            if size == 0 {
                0.0
            } else {
                1.0 - conf[t][inverse[t]] as f64 / size as f64
            }
        })
        .collect();
    Ok(EvalReport {
        overall,
        per_community,
        permutation,
    })
}

/// Total agreement of a permutation (`perm[e] = t`).
pub fn permutation_agreement(conf: &[Vec<u64>], perm: &[usize]) -> u64 {
    perm.iter().enumerate().map(|(e, &t)| conf[t][e]).sum()
}

/// Lexicographically first permutation of maximum agreement, found by
/// enumerating all `k!` permutations (Heap's algorithm).
pub fn best_permutation_exhaustive(conf: &[Vec<u64>]) -> Vec<usize> {
    let k = conf.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_score = permutation_agreement(conf, &perm);
    let mut c = vec![0usize; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let score = permutation_agreement(conf, &perm);
            if score > best_score || (score == best_score && perm < best) {
                best_score = score;
                best = perm.clone();
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maximum-agreement permutation by the Hungarian method (shortest
/// augmenting paths with potentials), `O(k³)`.
pub fn best_permutation_hungarian(conf: &[Vec<u64>]) -> Vec<usize> {
    let k = conf.len();
    let max = conf.iter().flatten().copied().max().unwrap_or(0) as i64;
    // rows = true labels, columns = estimated labels, cost = max - agreement
    let cost = |t: usize, e: usize| max - conf[t][e] as i64;
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut col_owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; k];
    for j in 1..=k {
        perm[j - 1] = col_owner[j] - 1;
    }
    perm
}

/// `‖A - P‖₂` via a Krylov solve for the eigenvalue of largest magnitude
/// of the symmetric difference, at relative residual tolerance `1e-6`.
pub fn spectral_norm_deviation(a: &SparseSymGraph, p: &DenseMatrix) -> Result<f64, EvalError> {
    if a.n() != p.rows() || !p.is_square() {
        return Err(EvalError::SizeMismatch {
            left: a.n(),
            right: p.rows(),
        });
    }
    if a.n() == 0 {
        return Ok(0.0);
    }
    let diff = Difference { lhs: a, rhs: p };
    let opts = EigenOptions {
        tol: 1e-6,
        ..EigenOptions::default()
    };
    let top = leading_eigenpairs(&diff, 1, &opts).expect("one eigenpair of a nonempty matrix");
    Ok(top.values[0].abs())
}

/// Smallest singular value of symmetric `p` above `RANK_CUTOFF * ‖p‖`;
/// zero for the zero matrix.
pub fn gamma_n(p: &DenseMatrix) -> f64 {
    let sv: Vec<f64> = symmetric_eigenvalues(p).iter().map(|v| v.abs()).collect();
    let norm = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    if norm == 0.0 {
        return 0.0;
    }
    sv.iter()
        .copied()
        .filter(|&s| s > RANK_CUTOFF * norm)
        .fold(f64::INFINITY, f64::min)
}

/// `τ_k = (Σ_{i∈C_k} ψ_i²)(Σ_{i∈C_k} ψ_i⁻²)` for each community.
pub fn heterogeneity_tau(psi: &[f64], gt: &GroundTruth) -> Result<Vec<f64>, ModelError> {
    if psi.len() != gt.n() {
        return Err(ModelError::LengthMismatch {
            expected: gt.n(),
            found: psi.len(),
        });
    }
    let mut sq = vec![0.0; gt.k];
    let mut inv_sq = vec![0.0; gt.k];
    let mut seen = vec![false; gt.k];
    for (&c, &p) in gt.z.iter().zip(psi) {
        sq[c] += p * p;
        inv_sq[c] += 1.0 / (p * p);
        seen[c] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(ModelError::EmptyCommunity(c));
    }
    Ok(sq.iter().zip(&inv_sq).map(|(a, b)| a * b).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremDiagnostics {
    /// Largest connection probability over all layers.
    pub alpha: f64,
    /// `min_t λ_min(B_t) / α`.
    pub lambda: f64,
    /// Smallest nonzero singular value of the expected sum matrix.
    pub gamma_n: f64,
    /// `‖A - P‖` on the retained vertices.
    pub spectral_dev: f64,
    /// Degree heterogeneity per community (degree-corrected model only).
    pub tau: Option<Vec<f64>>,
    pub n_prime: usize,
    /// Smallest community size among retained vertices.
    pub n_prime_min: usize,
    /// Spectral norm of the expected sum matrix.
    pub p_norm: f64,
}

/// Computes all diagnostics for a truncated sum `sub` on the vertices
/// `kept`, against the model that generated it.
pub fn theorem_diagnostics(
    gt: &GroundTruth,
    b_stack: &[DenseMatrix],
    psi: Option<&[f64]>,
    kept: &[usize],
    sub: &SparseSymGraph,
) -> Result<TheoremDiagnostics, EvalError> {
    let p = crate::model::expected_sum_matrix(gt, kept, b_stack, psi);
    let check = check_sum_nonsingular(b_stack);
    let eig = symmetric_eigenvalues(&p);
    let p_norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sizes = vec![0usize; gt.k];
    for &v in kept {
        sizes[gt.z[v]] += 1;
    }
    Ok(TheoremDiagnostics {
        alpha: check.alpha,
        lambda: check.lambda,
        gamma_n: gamma_n(&p),
        spectral_dev: spectral_norm_deviation(sub, &p)?,
        tau: psi.map(|p| heterogeneity_tau(p, gt)).transpose()?,
        n_prime: kept.len(),
        n_prime_min: sizes.iter().copied().min().unwrap_or(0),
        p_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm(labels: &[usize], k: usize) -> MembershipMatrix {
        MembershipMatrix::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn identical_and_swapped() {
        let t = mm(&[0, 0, 1, 1, 1], 2);
        let r = misclassification(&t, &t).unwrap();
        assert_eq!(r.overall, 0.0);
        assert_eq!(r.per_community, vec![0.0, 0.0]);
        let s = mm(&[1, 1, 0, 0, 0], 2);
        let r = misclassification(&t, &s).unwrap();
        assert_eq!(r.overall, 0.0);
        assert_eq!(r.permutation, vec![1, 0]);
    }

    #[test]
    fn one_flip_in_ten() {
        let t = mm(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        let e = mm(&[0, 0, 0, 0, 1, 1, 1, 1, 1, 1], 2);
        let r = misclassification(&t, &e).unwrap();
        assert!((r.overall - 0.1).abs() < 1e-15);
        assert!((r.per_community[0] - 0.2).abs() < 1e-15);
        assert_eq!(r.per_community[1], 0.0);
    }

    #[test]
    fn overall_is_weighted_per_community() {
        let t = mm(&[0, 0, 0, 1, 1, 2, 2, 2, 2], 3);
        let e = mm(&[1, 1, 0, 0, 0, 2, 2, 1, 2], 3);
        let r = misclassification(&t, &e).unwrap();
        let sizes = [3.0, 2.0, 4.0];
        let weighted: f64 = r
            .per_community
            .iter()
            .zip(sizes)
            .map(|(f, s)| f * s / 9.0)
            .sum();
        assert!((weighted - r.overall).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        assert!(misclassification(&mm(&[0], 1), &mm(&[0, 0], 1)).is_err());
    }

    #[test]
    fn hungarian_small_cases() {
        let conf = vec![vec![0, 5, 1], vec![4, 0, 0], vec![1, 0, 7]];
        let h = best_permutation_hungarian(&conf);
        assert_eq!(permutation_agreement(&conf, &h), 16);
        assert_eq!(best_permutation_exhaustive(&conf), vec![1, 0, 2]);
    }

    #[test]
    fn deviation_closed_forms() {
        let edge = SparseSymGraph::from_edge_list(2, &[(0, 1)]).unwrap();
        let d = spectral_norm_deviation(&edge, &DenseMatrix::zeros(2, 2)).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        let same = spectral_norm_deviation(&edge, &edge.to_dense()).unwrap();
        assert!(same.abs() < 1e-12);
        assert!(spectral_norm_deviation(&edge, &DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn gamma_closed_forms() {
        let n = 7;
        let p = DenseMatrix::from_fn(n, n, |_, _| 3.0 * 0.2);
        assert!((gamma_n(&p) - 0.6 * n as f64).abs() < 1e-12);
        assert_eq!(gamma_n(&DenseMatrix::zeros(4, 4)), 0.0);
        // blocks of sizes 2 and 3 with value 0.5: singular values 1.0 and 1.5
        let z = [0, 0, 1, 1, 1];
        let p = DenseMatrix::from_fn(5, 5, |i, j| if z[i] == z[j] { 0.5 } else { 0.0 });
        assert!((gamma_n(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_values() {
        let gt = GroundTruth { z: vec![0; 4], k: 1 };
        assert_eq!(heterogeneity_tau(&[1.0; 4], &gt).unwrap(), vec![16.0]);
        let gt = GroundTruth { z: vec![0, 0], k: 1 };
        assert!((heterogeneity_tau(&[0.5, 1.0], &gt).unwrap()[0] - 6.25).abs() < 1e-12);
        let gt = GroundTruth { z: vec![0], k: 1 };
        assert_eq!(heterogeneity_tau(&[1.0], &gt).unwrap(), vec![1.0]);
        let gt = GroundTruth { z: vec![0, 0], k: 2 };
        assert_eq!(
            heterogeneity_tau(&[1.0, 1.0], &gt),
            Err(ModelError::EmptyCommunity(1))
        );
    }
}
